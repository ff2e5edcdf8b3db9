"""Small builders shared by the test modules."""

import numpy as np

from reffnet.graph import Edge, Instance


def make(pairs, s=0, t=1, k=0.0, R=None, costs=None, res=None, n=None):
    n = n if n is not None else max(max(p) for p in pairs) + 1
    costs = costs if costs is not None else [1.0] * len(pairs)
    res = res if res is not None else [1.0] * len(pairs)
    edges = tuple(Edge(u, v, float(c), float(r)) for (u, v), c, r in zip(pairs, costs, res))
    return Instance(n, edges, s, t, float(k), R)


def path(length, k=None):
    verts = [0] + list(range(2, length + 1)) + [1]
    return make(list(zip(verts, verts[1:])), k=length if k is None else k)


PARALLEL2 = [(0, 1), (0, 1)]
TRIANGLE = [(0, 1), (0, 2), (2, 1)]
# lengths 1 and 2
SHORT_LONG = [(0, 1), (0, 2), (2, 1)]
# two disjoint s-t paths of length 3
TWO_PATHS_3 = [(0, 2), (2, 3), (3, 1), (0, 4), (4, 5), (5, 1)]
# parallel paths of lengths 2 and 3
PATHS_2_3 = [(0, 2), (2, 1), (0, 3), (3, 4), (4, 1)]
K4 = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]


def random_x(rng, m, low=0.05):
    return rng.uniform(low, 1.0, m)


def finite_difference(fn, x, h=1e-5):
    g = np.empty_like(x)
    for i in range(len(x)):
        up, down = x.copy(), x.copy()
        up[i] += h
        down[i] -= h
        g[i] = (fn(up) - fn(down)) / (2 * h)
    return g
