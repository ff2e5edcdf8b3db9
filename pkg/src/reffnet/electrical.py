"""Electrical quantities of a fractionally weighted graph.

Edge ``e`` carries conductance ``x_e * w_e``.  Everything is computed from a
single grounded Laplacian solve restricted to the component of ``s`` in the
support of ``x``; the sink is grounded at potential zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.csgraph
import scipy.sparse.linalg

from .errors import DisconnectedError, UnsupportedFlowError
from .graph import Instance

DROP_BELOW = 1e-12
DENSE_LIMIT = 2000
INF = math.inf


@dataclass(frozen=True)
class ElectricalFlow:
    flow: np.ndarray         # magnitudes f_e >= 0
    orientation: np.ndarray  # +1 if current runs u -> v, else -1
    potentials: np.ndarray   # nan outside the component of s
    reff: float

    @property
    def signed(self) -> np.ndarray:
        return self.orientation * self.flow


def _as_x(instance: Instance, x) -> np.ndarray:
    if x is None:
        return np.ones(instance.m)
    x = np.asarray(x, dtype=float)
    if x.shape != (instance.m,):
        raise ValueError(f"expected {instance.m} edge values, got shape {x.shape}")
    return x


def _component(instance: Instance, keep: np.ndarray) -> np.ndarray:
    seen = np.zeros(instance.n, dtype=bool)
    seen[instance.s] = True
    stack = [instance.s]
    adj = instance.adjacency
    while stack:
        a = stack.pop()
        for b, i in adj[a]:
            if keep[i] and not seen[b]:
                seen[b] = True
                stack.append(b)
    return seen


def potentials(instance: Instance, x=None) -> np.ndarray | None:
    """Potentials of the unit s-t current with phi(t) = 0, or None if disconnected."""
    cond = _as_x(instance, x) * instance.conductances
    keep = cond > DROP_BELOW
    comp = _component(instance, keep)
    if not comp[instance.t]:
        return None
    verts = np.flatnonzero(comp & (np.arange(instance.n) != instance.t))
    pos = np.full(instance.n, -1)
    pos[verts] = np.arange(len(verts))
    sel = keep & comp[instance.tails]
    u, v, c = pos[instance.tails[sel]], pos[instance.heads[sel]], cond[sel]
    p = len(verts)
    rhs = np.zeros(p)
    rhs[pos[instance.s]] = 1.0
    # Grounded-vertex entries (pos == -1) are dropped.
    iu, iv = u >= 0, v >= 0
    rows = np.concatenate([u[iu], v[iv], u[iu & iv], v[iu & iv]])
    cols = np.concatenate([u[iu], v[iv], v[iu & iv], u[iu & iv]])
    vals = np.concatenate([c[iu], c[iv], -c[iu & iv], -c[iu & iv]])
    if p <= DENSE_LIMIT:
        L = np.zeros((p, p))
        np.add.at(L, (rows, cols), vals)
        sol = scipy.linalg.solve(L, rhs, assume_a="pos", check_finite=False)
    else:
        L = scipy.sparse.csc_matrix((vals, (rows, cols)), shape=(p, p))
        sol = scipy.sparse.linalg.splu(L).solve(rhs)
    phi = np.full(instance.n, np.nan)
    phi[verts] = sol
    phi[instance.t] = 0.0
    return phi


def effective_resistance(instance: Instance, x=None) -> float:
    """b_st^T L_x^+ b_st, or ``inf`` when s and t are disconnected in supp(x)."""
    phi = potentials(instance, x)
    if phi is None:
        return INF
    return float(phi[instance.s])


def electrical_flow(instance: Instance, x=None) -> ElectricalFlow:
    x = _as_x(instance, x)
    phi = potentials(instance, x)
    if phi is None:
        raise DisconnectedError("s and t are disconnected in the support of x")
    cond = x * instance.conductances
    cond = np.where(cond > DROP_BELOW, cond, 0.0)
    drop = np.nan_to_num(phi[instance.tails] - phi[instance.heads], nan=0.0)
    signed = cond * drop
    orientation = np.where(signed >= 0, 1.0, -1.0)
    return ElectricalFlow(np.abs(signed), orientation, phi, float(phi[instance.s]))


def energy(instance: Instance, x, f) -> float:
    """Sum of f_e^2 / (x_e w_e) over the support of ``x``."""
    x = _as_x(instance, x)
    f = np.asarray(f, dtype=float)
    zero = x <= DROP_BELOW
    if np.any(np.abs(f[zero]) > DROP_BELOW):
        raise UnsupportedFlowError("flow on an edge outside the support of x")
    on = ~zero
    return float(np.sum(f[on] ** 2 / (x[on] * instance.conductances[on])))


def reff_gradient(instance: Instance, x=None) -> np.ndarray:
    """Partial derivatives of Reff_x(s,t): -w_e (phi_u - phi_v)^2."""
    x = _as_x(instance, x)
    phi = potentials(instance, x)
    if phi is None:
        raise DisconnectedError("s and t are disconnected in the support of x")
    drop = np.nan_to_num(phi[instance.tails] - phi[instance.heads], nan=0.0)
    return -instance.conductances * drop ** 2


def value_and_gradient(instance: Instance, x, extend: bool = False
                       ) -> tuple[float, np.ndarray | None]:
    """Reff_x(s,t) and its gradient, or (inf, None) when disconnected.

    With ``extend`` the potentials of vertices outside the component of s
    are filled in harmonically (every edge at its full conductance, the
    component held fixed).  Partials of edges touching those vertices then
    give the rate at which opening the cut-off region uniformly would lower
    Reff, instead of zero.
    """
    phi = potentials(instance, x)
    if phi is None:
        return INF, None
    if extend:
        phi = harmonic_extension(instance, phi)
    drop = np.nan_to_num(phi[instance.tails] - phi[instance.heads], nan=0.0)
    return float(phi[instance.s]), -instance.conductances * drop ** 2


def lipschitz_extension(instance: Instance, phi: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    """Fill the nan entries of ``phi`` with max_u (phi_u - dist(u, v)).

    ``dist`` is the shortest-path metric with the given edge lengths through
    the unfilled vertices.  The result changes by at most ``lengths[e]``
    across every edge touching a filled-in vertex whenever that is possible
    at all, which makes it the right completion for dual certificates.
    """
    out = np.isnan(phi)
    if not out.any():
        return phi
    n = instance.n
    u, v = instance.tails, instance.heads
    touch = out[u] | out[v]
    top = float(np.nanmax(phi))
    fixed = np.flatnonzero(~out)
    # Super-source n reaches fixed vertex a at distance top - phi_a >= 0.
    rows = np.concatenate([u[touch], v[touch], np.full(len(fixed), n)])
    cols = np.concatenate([v[touch], u[touch], fixed])
    vals = np.concatenate([lengths[touch], lengths[touch], top - phi[fixed]])
    # csgraph treats explicit zeros as missing edges.
    vals = np.maximum(vals, 1e-300)
    # Sparse constructors sum duplicate entries; parallel edges need the minimum.
    order = np.lexsort((vals, cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    first = np.ones(len(rows), dtype=bool)
    first[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
    rows, cols, vals = rows[first], cols[first], vals[first]
    G = scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(n + 1, n + 1))
    dist = scipy.sparse.csgraph.dijkstra(G, directed=True, indices=n)
    phi = phi.copy()
    fill = top - dist[:n]
    phi[out] = np.where(np.isfinite(fill[out]), fill[out], 0.0)
    return phi


def grounded_inverse(instance: Instance, x) -> np.ndarray | None:
    """Dense n x n matrix Z with b^T Z b = b^T L_x^+ b for b supported on the
    component of s (t grounded, zero rows elsewhere); None if s, t disconnected."""
    cond = _as_x(instance, x) * instance.conductances
    keep = cond > DROP_BELOW
    comp = _component(instance, keep)
    if not comp[instance.t]:
        return None
    verts = np.flatnonzero(comp & (np.arange(instance.n) != instance.t))
    sel = keep & comp[instance.tails]
    B = instance.incidence[np.ix_(sel, verts)]
    L = B.T @ (cond[sel][:, None] * B)
    Z = np.zeros((instance.n, instance.n))
    Z[np.ix_(verts, verts)] = np.linalg.inv(L)
    return Z


def reff_hessian(instance: Instance, x, edges=None) -> np.ndarray:
    """Second derivatives of Reff_x(s,t) over the given edges (dense)."""
    x = _as_x(instance, x)
    Z = grounded_inverse(instance, x)
    if Z is None:
        raise DisconnectedError("s and t are disconnected in the support of x")
    edges = np.arange(instance.m) if edges is None else np.asarray(edges)
    B = instance.incidence[edges]
    phi = Z[:, instance.s] - Z[:, instance.t]
    wd = instance.conductances[edges] * (B @ phi)
    return 2.0 * np.outer(wd, wd) * (B @ Z @ B.T)


def harmonic_extension(instance: Instance, phi: np.ndarray) -> np.ndarray:
    """Fill the nan entries of ``phi`` by solving the Dirichlet problem on all edges."""
    out = np.isnan(phi)
    if not out.any():
        return phi
    fixed = ~out
    # Cut-off vertices with no route to a fixed vertex keep potential zero.
    reach = fixed.copy()
    stack = list(np.flatnonzero(fixed))
    adj = instance.adjacency
    while stack:
        a = stack.pop()
        for b, _ in adj[a]:
            if not reach[b]:
                reach[b] = True
                stack.append(b)
    phi = phi.copy()
    phi[out & ~reach] = 0.0
    free = np.flatnonzero(out & reach)
    if len(free) == 0:
        return phi
    pos = np.full(instance.n, -1)
    pos[free] = np.arange(len(free))
    u, v, w = instance.tails, instance.heads, instance.conductances
    pu, pv = pos[u], pos[v]
    rows, cols, vals = [], [], []
    rhs = np.zeros(len(free))
    for b, pa, pb in ((v, pu, pv), (u, pv, pu)):
        sel = pa >= 0
        rows.append(pa[sel]); cols.append(pa[sel]); vals.append(w[sel])
        inner = sel & (pb >= 0)
        rows.append(pa[inner]); cols.append(pb[inner]); vals.append(-w[inner])
        edge = sel & (pb < 0)
        np.add.at(rhs, pa[edge], w[edge] * np.nan_to_num(phi[b[edge]]))
    rows, cols, vals = np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)
    p = len(free)
    if p <= DENSE_LIMIT:
        L = np.zeros((p, p))
        np.add.at(L, (rows, cols), vals)
        phi[free] = scipy.linalg.solve(L, rhs, assume_a="pos", check_finite=False)
    else:
        L = scipy.sparse.csc_matrix((vals, (rows, cols)), shape=(p, p))
        phi[free] = scipy.sparse.linalg.spsolve(L, rhs)
    return phi


def effective_resistance_pinv(instance: Instance, x=None) -> float:
    """Cross-check route: (L + J/p)^-1 on the component of s, no grounding."""
    x = _as_x(instance, x)
    cond = x * instance.conductances
    keep = cond > DROP_BELOW
    comp = _component(instance, keep)
    if not comp[instance.t]:
        return INF
    verts = np.flatnonzero(comp)
    B = instance.incidence[np.ix_(keep & comp[instance.tails], verts)]
    c = cond[keep & comp[instance.tails]]
    p = len(verts)
    L = B.T @ (c[:, None] * B) + np.full((p, p), 1.0 / p)
    b = np.zeros(p)
    b[np.searchsorted(verts, instance.s)] = 1.0
    b[np.searchsorted(verts, instance.t)] = -1.0
    return float(b @ np.linalg.solve(L, b))


def batch_effective_resistance(instance: Instance, X, chunk: int = 8192) -> np.ndarray:
    """Effective resistance for every row of ``X`` (one x-vector per row).

    Vectorised over rows; used by the exhaustive oracle.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    out = np.empty(len(X))
    for lo in range(0, len(X), chunk):
        out[lo:lo + chunk] = _batch_reff(instance, X[lo:lo + chunk])
    return out


def _batch_reff(instance: Instance, X: np.ndarray) -> np.ndarray:
    n, s, t = instance.n, instance.s, instance.t
    cond = X * instance.conductances
    cond = np.where(cond > DROP_BELOW, cond, 0.0)
    inc = instance.incidence
    L = np.einsum("ei,be,ej->bij", inc, cond, inc, optimize=True)
    adj = (L < 0).astype(float) + np.eye(n)
    for _ in range(max(1, math.ceil(math.log2(max(n, 2))))):
        adj = np.minimum(adj @ adj, 1.0)
    comp = adj[:, s, :] > 0
    reach = comp[:, t]
    out = np.full(len(X), INF)
    if not reach.any():
        return out
    keep = comp[reach]
    keep[:, t] = False
    M = L[reach] * keep[:, :, None] * keep[:, None, :]
    idx = np.arange(n)
    M[:, idx, idx] += ~keep
    rhs = np.zeros((len(M), n, 1))
    rhs[:, s, 0] = 1.0
    out[reach] = np.linalg.solve(M, rhs)[:, s, 0]
    return out
