"""Command-line front end: ``reffnet solve|round|sp|oracle|generate|experiment``.

Results go to stdout as JSON (``solve`` prints a short text summary unless
``--json`` is given).  Every float is written with 12 significant digits and
infinities as the string ``"inf"``.  Exit codes: 0 success, 2 input or regime
error, 3 infeasible, 4 no convergence, 5 structure error, 6 rounding failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import errors
from .cp import SolverConfig, extract_certificate, solve_cp
from .electrical import electrical_flow
from .flows import decompose
from .generators import (gen_3dm, gen_gap_cost, gen_gap_resistance, gen_random, gen_random_sp,
                         gen_two_paths, read_3dm)
from .graph import read_instance, shortest_path_distance, write_instance
from .oracle import DEFAULT_LIMIT, oracle_dual, oracle_primal
from .rounding import approximate, dual_round, sample_trials, short_path_round
from .sp import sp_exact, sp_fptas

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_NO_CONVERGENCE, EXIT_STRUCTURE, EXIT_ROUNDING = 0, 2, 3, 4, 5, 6

# Checked in order; the first matching class wins.
EXIT_CODES = (
    (errors.InfeasibleError, EXIT_INFEASIBLE),
    (errors.NoConvergenceError, EXIT_NO_CONVERGENCE),
    (errors.NotSeriesParallelError, EXIT_STRUCTURE),
    (errors.RoundingFailedError, EXIT_ROUNDING),
    (errors.EmptyResultError, EXIT_ROUNDING),
    (errors.BadCertificateError, EXIT_ROUNDING),
    (errors.NotOptimalError, EXIT_ROUNDING),
    (errors.ReffError, EXIT_INPUT),
)

CSV_COLUMNS = ["instance", "n", "m", "k", "d_st", "status", "fractional_opt", "oracle_opt",
               "rounded_reff", "rounded_cost", "ratio", "ratio_bound", "seed"]
TRIAL_COLUMNS = ["trials", "budget_mean", "budget_sd", "budget_bound",
                 "reff_mean", "reff_sd", "reff_bound"]


def exit_code_for(exc: BaseException) -> int:
    for cls, code in EXIT_CODES:
        if isinstance(exc, cls):
            return code
    raise exc


def sig12(value):
    """Round floats to 12 significant digits, recursively; inf/nan become strings."""
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return float(f"{v:.12g}")
    if isinstance(value, dict):
        return {k: sig12(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [sig12(v) for v in value]
    return value


def dumps(obj) -> str:
    return json.dumps(sig12(obj), sort_keys=True)


@dataclass
class RunRecord:
    command: str
    instance_digest: str | None
    parameters: dict
    outputs: dict
    wall_time: float
    seed: int | None = None
    exit_code: int = EXIT_OK
    extra: dict = field(default_factory=dict)


def digest(path) -> str | None:
    try:
        return hashlib.sha256(Path(path).read_bytes()).hexdigest()
    except OSError:
        return None


# ---------------------------------------------------------------------------
# commands; each returns the JSON-able result


def cmd_solve(args) -> dict:
    inst = read_instance(args.instance)
    if args.budget is not None:
        inst = inst.with_budget(args.budget)
    config = SolverConfig(max_iterations=args.max_iters, objective_tolerance=args.tol)
    sol = solve_cp(inst, config)
    out = {"objective": sol.objective, "x": sol.values, "cost": sol.cost,
           "iterations": sol.iterations, "converged": sol.converged, "certificate": None}
    if inst.is_unit:
        cert = extract_certificate(inst, sol, config, strict=False)
        out["certificate"] = cert.to_json()
    return out


def cmd_round(args) -> dict:
    inst = read_instance(args.instance)
    config = SolverConfig()
    if args.mode == "approx":
        out = approximate(inst, config, seed=args.seed)
    elif args.mode == "short-path":
        eta = args.eta if args.eta is not None else max(args.epsilon, 0.1)
        out = short_path_round(inst, args.epsilon, config, seed=args.seed, eta=eta)
    else:
        out = dual_round(inst, config, seed=args.seed, allow_copies=args.copies)
    return out.to_json()


def cmd_sp(args) -> dict:
    inst = read_instance(args.instance)
    if args.budget is not None:
        inst = inst.with_budget(args.budget)
    if args.fptas is not None:
        return sp_fptas(inst, epsilon=args.fptas).to_json()
    return sp_exact(inst).to_json()


def cmd_oracle(args) -> dict:
    inst = read_instance(args.instance)
    if args.budget is not None:
        inst = inst.with_budget(args.budget)
    res = oracle_dual(inst, args.limit) if args.dual else oracle_primal(inst, args.limit)
    return {"mode": "dual" if args.dual else "primal", **res.to_json()}


def cmd_generate(args) -> dict:
    fam = args.family
    extra = {}
    if fam == "gap-cost":
        inst = gen_gap_cost(args.n)
    elif fam == "gap-resistance":
        inst = gen_gap_resistance(args.n, args.r_big)
    elif fam == "two-paths":
        inst = gen_two_paths(args.k if args.k is not None else 4)
    elif fam == "random":
        inst = gen_random(args.n, args.p, args.seed, weighted=args.weighted, budget=args.k)
    elif fam == "random-sp":
        inst = gen_random_sp(args.m, args.seed, weighted=args.weighted, budget=args.k)
    else:
        gadget = gen_3dm(read_3dm(args.input))
        inst = gadget.instance
        extra = {"k": gadget.k, "R": gadget.R, "l": gadget.l}
    write_instance(inst, args.output)
    return {"family": fam, "output": str(args.output), "n": inst.n, "m": inst.m,
            "s": inst.s, "t": inst.t, "budget": inst.budget, **extra}


def _experiment_row(path: Path, args) -> dict:
    row = {c: "" for c in CSV_COLUMNS}
    row.update(instance=path.name, seed=args.seed)
    inst = read_instance(path)
    row.update(n=inst.n, m=inst.m, k=inst.budget, d_st=shortest_path_distance(inst))
    config = SolverConfig()
    try:
        frac = solve_cp(inst, config)
        row["fractional_opt"] = frac.objective
        if inst.m <= args.oracle_max_m:
            row["oracle_opt"] = oracle_primal(inst).optimum
        out = approximate(inst, config, seed=args.seed)
        row.update(rounded_reff=out.reff, rounded_cost=out.cost, ratio_bound=8.0)
        if row["oracle_opt"] != "":
            row["ratio"] = out.reff / row["oracle_opt"]
        if args.trials:
            cert = extract_certificate(inst, frac, config)
            if cert.fractional_edges:
                decomp = decompose(inst, electrical_flow(inst, frac.values))
                st = sample_trials(inst, frac, cert, decomp, args.trials, seed=args.seed)
                row.update(trials=args.trials,
                           budget_mean=st.fractional_counts.mean(),
                           budget_sd=st.fractional_counts.std(ddof=1),
                           budget_bound=st.budget_bound,
                           reff_mean=st.reffs.mean(), reff_sd=st.reffs.std(ddof=1),
                           reff_bound=st.reff_bound)
        row["status"] = "ok"
    except errors.ReffError as exc:
        row["status"] = exc.code
    return row


def cmd_experiment(args) -> dict:
    corpus = Path(args.corpus)
    if not corpus.is_dir():
        raise errors.InstanceFormatError(f"{corpus} is not a directory")
    files = sorted(p for p in corpus.iterdir() if p.is_file() and p.suffix in (".txt", ".inst", ".graph"))
    columns = CSV_COLUMNS + (TRIAL_COLUMNS if args.trials else [])
    rows = [_experiment_row(p, args) for p in files]
    handle = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.DictWriter(handle, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: sig12(v) if v != "" else "" for k, v in row.items()})
    finally:
        if handle is not sys.stdout:
            handle.close()
    return {"rows": len(rows), "out": args.out}


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="reffnet", description="Budgeted s-t effective resistance design")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--record", metavar="FILE", help="append a JSON run record to FILE")

    s = sub.add_parser("solve", help="solve the convex relaxation")
    s.add_argument("instance")
    s.add_argument("--budget", type=float)
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--max-iters", type=int, default=5000)
    s.add_argument("--json", action="store_true")
    common(s)

    r = sub.add_parser("round", help="randomized rounding")
    r.add_argument("instance")
    r.add_argument("--mode", choices=["approx", "short-path", "dual"], default="approx")
    r.add_argument("--epsilon", type=float, default=0.1)
    r.add_argument("--eta", type=float)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--copies", action="store_true")
    common(r)

    d = sub.add_parser("sp", help="series-parallel dynamic programs")
    d.add_argument("instance")
    g = d.add_mutually_exclusive_group()
    g.add_argument("--exact", action="store_true")
    g.add_argument("--fptas", type=float, metavar="EPS")
    d.add_argument("--budget", type=float)
    common(d)

    o = sub.add_parser("oracle", help="exhaustive search (small instances)")
    o.add_argument("instance")
    o.add_argument("--dual", action="store_true")
    o.add_argument("--budget", type=float)
    o.add_argument("--limit", type=int, default=DEFAULT_LIMIT)
    common(o)

    gen = sub.add_parser("generate", help="write an instance file")
    gen.add_argument("family", choices=["gap-cost", "gap-resistance", "two-paths", "random",
                                        "random-sp", "3dm"])
    gen.add_argument("-o", "--output", required=True)
    gen.add_argument("--n", type=int, default=6)
    gen.add_argument("--m", type=int, default=8)
    gen.add_argument("--k", type=float)
    gen.add_argument("--p", type=float, default=0.4)
    gen.add_argument("--r-big", type=float, default=100.0)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--weighted", action="store_true")
    gen.add_argument("--input", help="3DM file: q, then one 'x y z' per line")
    common(gen)

    e = sub.add_parser("experiment", help="run approximate() over a corpus directory")
    e.add_argument("corpus")
    e.add_argument("--trials", type=int, default=0)
    e.add_argument("--out")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--oracle-max-m", type=int, default=20)
    common(e)
    return p


COMMANDS = {"solve": cmd_solve, "round": cmd_round, "sp": cmd_sp, "oracle": cmd_oracle,
            "generate": cmd_generate, "experiment": cmd_experiment}


def _summary(result: dict) -> str:
    lines = [f"objective  {sig12(result['objective'])}",
             f"cost       {sig12(result['cost'])}",
             f"iterations {result['iterations']}"]
    cert = result.get("certificate")
    if cert:
        lines.append(f"alpha      {sig12(cert['alpha'])}")
    return "\n".join(lines)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    if args.command == "generate" and args.family == "3dm" and not args.input:
        print("error: 3dm needs --input", file=sys.stderr)
        return EXIT_INPUT
    start = time.perf_counter()
    code, result = EXIT_OK, None
    try:
        result = COMMANDS[args.command](args)
    except errors.ReffError as exc:
        code = exit_code_for(exc)
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        result = {"error": exc.code, "message": str(exc)}
    else:
        if args.command == "solve" and not args.json:
            print(_summary(result))
        elif args.command != "experiment" or args.out:
            print(dumps(result))
    if args.record:
        params = {k: v for k, v in vars(args).items() if k not in ("command", "record")}
        source = getattr(args, "instance", None)
        rec = RunRecord(args.command, digest(source) if source else None, params, result or {},
                        time.perf_counter() - start, getattr(args, "seed", None), code)
        with open(args.record, "a") as fh:
            fh.write(dumps(asdict(rec)) + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
