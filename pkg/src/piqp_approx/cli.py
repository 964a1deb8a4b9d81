"""Command-line front end: generate instances, solve them, check against the
exhaustive oracle, solve linear knapsacks, and run benchmark suites.

Exit codes: 0 success, 1 a relaxation did not converge (the report is still
written), 2 bad input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import instance as ins
from .greedy import GreedyConfig, greedy_bound
from .mkp import MkpProblem, round_p_plus_1_detail
from .oracle import DEFAULT_LIMIT, OracleLimitError, brute_force
from .relaxation import SolverConfig
from .rounding import METHODS, RoundingConfig, SolveConfig, solve_auto

log = logging.getLogger("piqp_approx")

EXIT_OK, EXIT_NONCONVERGED, EXIT_INPUT = 0, 1, 2

DEFAULTS = {
    "seed": 0, "out": None, "quiet": False,
    # gen
    "kind": "qkp", "n": 10, "p": 1, "density": 0.5, "k": None, "t": 2, "graph": None,
    "benefit_range": "1,9", "weight_range": "1,9", "linear_range": None,
    # solve
    "method": "auto", "trials": None, "beta": None, "gamma": 0.1, "delta": 0.1,
    "max_iters": 5000, "rel_tol": 1e-7, "repair": True, "extra": True, "timing": False,
    # oracle
    "limit_n": DEFAULT_LIMIT, "quadratic_only": False,
    # bench
    "kinds": "qkp", "sizes": "10", "ps": "1,2", "ts": None, "count": 10, "jobs": 1,
    "bench_limit": 12,
}


class InputError(Exception):
    pass


# -- argument parsing ----------------------------------------------------------------

def _common() -> argparse.ArgumentParser:
    # defaults are suppressed so that explicitly given flags can be told apart
    # from config-file values
    c = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    c.add_argument("--seed", type=int, help="master seed (default 0)")
    c.add_argument("--out", help="write output here instead of standard output")
    c.add_argument("--quiet", action="store_true", help="suppress warnings and summaries")
    c.add_argument("--config", help="JSON file whose keys mirror the long flags")
    return c


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    top = argparse.ArgumentParser(prog="piqp-approx", parents=[common],
                                  argument_default=argparse.SUPPRESS,
                                  description="Approximation algorithms for positive 0-1 quadratic programs.")
    sub = top.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], argument_default=argparse.SUPPRESS,
                       help="generate an instance file")
    g.add_argument("--kind", choices=["qkp", "dsp", "clique"])
    g.add_argument("--n", type=int, help="number of vertices (random graphs and qkp)")
    g.add_argument("--p", type=int, help="number of constraints (qkp)")
    g.add_argument("--density", type=float, help="edge probability in [0, 1]")
    g.add_argument("--k", type=int, help="subgraph size for dsp")
    g.add_argument("--t", type=int, help="clique size for clique")
    g.add_argument("--graph", help="kN (complete), cN (cycle), sN (star with N leaves), "
                                   "or a JSON file with an edge list")
    g.add_argument("--benefit-range", dest="benefit_range", help="lo,hi for qkp edge benefits")
    g.add_argument("--weight-range", dest="weight_range", help="lo,hi for qkp weights")
    g.add_argument("--linear-range", dest="linear_range", help="lo,hi for qkp linear benefits")

    s = sub.add_parser("solve", parents=[common], argument_default=argparse.SUPPRESS,
                       help="solve an instance and print a JSON report")
    s.add_argument("instance", help="instance file ('-' for standard input)")
    _solver_flags(s)
    s.add_argument("--timing", action="store_true", help="include wall times in the report")

    o = sub.add_parser("oracle", parents=[common], argument_default=argparse.SUPPRESS,
                       help="exact optimum by enumeration")
    o.add_argument("instance")
    o.add_argument("--limit-n", dest="limit_n", type=int, help=f"refuse larger n (default {DEFAULT_LIMIT})")
    o.add_argument("--quadratic-only", dest="quadratic_only", action="store_true")

    m = sub.add_parser("mkp", parents=[common], argument_default=argparse.SUPPRESS,
                       help="LP vertex and (p+1)-rounding of a linear knapsack")
    m.add_argument("instance", help='JSON with "c" (or "b"), "A", "budgets"')

    b = sub.add_parser("bench", parents=[common], argument_default=argparse.SUPPRESS,
                       help="run a suite and write CSV rows")
    b.add_argument("--kinds", help="comma list of qkp, dsp")
    b.add_argument("--sizes", help="comma list of n")
    b.add_argument("--ps", help="comma list of constraint counts (qkp)")
    b.add_argument("--ts", help="comma list of greedy t (default: the --t value)")
    b.add_argument("--count", type=int, help="instances per (kind, n, p)")
    b.add_argument("--density", type=float)
    b.add_argument("--jobs", type=int, help="worker processes")
    b.add_argument("--limit-n", dest="bench_limit", type=int, help="run the oracle up to this n (default 12)")
    b.add_argument("--no-timing", dest="timing", action="store_false", help="leave time columns empty")
    b.add_argument("--timing", dest="timing", action="store_true")
    _solver_flags(b)
    return top


def _solver_flags(p):
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--t", type=int, help="greedy guarantee parameter (groups of up to t+1 vertices)")
    p.add_argument("--trials", type=int, help="rounding trials (default ceil(n^0.6))")
    p.add_argument("--beta", type=float, help="budget lower bound used in lambda (default W)")
    p.add_argument("--gamma", type=float, help="log exponent slack in the case diagnostics")
    p.add_argument("--delta", type=float, help="overshoot tolerance in trial diagnostics")
    p.add_argument("--max-iters", dest="max_iters", type=int)
    p.add_argument("--rel-tol", dest="rel_tol", type=float)
    p.add_argument("--no-repair", dest="repair", action="store_false",
                   help="discard infeasible rounding trials instead of repairing them")
    p.add_argument("--no-extra", dest="extra", action="store_false",
                   help="run only the split pipeline (no unsplit or original-row candidates)")


def resolve(argv=None) -> dict:
    """Parse ``argv`` and merge defaults < config file < explicit flags."""
    ns = vars(build_parser().parse_args(argv))
    opts = dict(DEFAULTS)
    if "config" in ns:
        try:
            cfg = json.loads(Path(ns["config"]).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"config {ns['config']}: {exc}") from None
        if not isinstance(cfg, dict):
            raise InputError("config file must hold a JSON object")
        section = cfg.get(ns["command"], {})
        flat = {k: v for k, v in cfg.items() if not isinstance(v, dict)}
        for key, val in {**flat, **section}.items():
            key = key.replace("-", "_")
            if key not in DEFAULTS:
                raise InputError(f"config: unknown key {key!r}")
            opts[key] = val
    opts.update(ns)
    opts["given"] = sorted(ns)
    return opts


# -- helpers ---------------------------------------------------------------------------

def _pair(text, name):
    try:
        lo, hi = (int(v) for v in str(text).split(","))
    except ValueError:
        raise InputError(f"--{name.replace('_', '-')} expects lo,hi") from None
    return lo, hi


def _ints(text, name):
    if text is None or str(text).strip() == "":
        return []
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise InputError(f"--{name} expects a comma separated list of integers") from None


def parse_graph(spec: str):
    """Edge list for kN / cN / sN or a JSON file holding [[i, j], ...]."""
    head, tail = spec[:1].lower(), spec[1:]
    if head in "kcs" and tail.isdigit():
        m = int(tail)
        if head == "k":
            return ins.complete_graph(m)
        if head == "c":
            if m < 3:
                raise InputError("a cycle needs at least 3 vertices")
            return [(i, (i + 1) % m) if i + 1 < m else (0, m - 1) for i in range(m)]
        return [(0, j) for j in range(1, m + 1)]
    path = Path(spec)
    if not path.exists():
        raise InputError(f"unknown graph {spec!r} (use kN, cN, sN or an edge-list file)")
    try:
        edges = json.loads(path.read_text())
        return [(int(e[0]), int(e[1])) for e in edges]
    except (json.JSONDecodeError, TypeError, ValueError, IndexError) as exc:
        raise InputError(f"{spec}: bad edge list ({exc})") from None


def _write(text: str, out) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _load(path) -> ins.PiqpInstance:
    try:
        if path == "-":
            return ins.instance_from_dict(json.loads(sys.stdin.read()))
        return ins.read_instance(path)
    except FileNotFoundError:
        raise InputError(f"{path}: no such file") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"<stdin>: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    except ins.InstanceError as exc:
        raise InputError(f"{path}: {exc}") from None


def solve_config(o: dict) -> SolveConfig:
    try:
        return SolveConfig(
            greedy=GreedyConfig(t=int(o["t"])),
            solver=SolverConfig(max_iterations=int(o["max_iters"]), rel_tol=float(o["rel_tol"]),
                                seed=int(o["seed"])),
            rounding=RoundingConfig(beta=o["beta"], trials=o["trials"], delta=float(o["delta"]),
                                    seed=int(o["seed"]), gamma=float(o["gamma"]),
                                    repair=bool(o["repair"])),
            method=o["method"],
            extra_candidates=bool(o["extra"]),
        )
    except ValueError as exc:
        raise InputError(str(exc)) from None


# -- commands ------------------------------------------------------------------------

def cmd_gen(o: dict) -> int:
    kind = o["kind"]
    try:
        if kind == "qkp":
            params = dict(n=o["n"], p=o["p"], density=o["density"],
                          benefit_range=_pair(o["benefit_range"], "benefit_range"),
                          weight_range=_pair(o["weight_range"], "weight_range"))
            if o["linear_range"]:
                params["linear_range"] = _pair(o["linear_range"], "linear_range")
        else:
            params = {"edges": parse_graph(o["graph"])} if o["graph"] else dict(n=o["n"], density=o["density"])
            if o["graph"] and "n" in o.get("given", ()):
                params["n"] = o["n"]
            key = "k" if kind == "dsp" else "t"
            if o[key] is None:
                raise InputError(f"--{key} is required for kind {kind}")
            params[key] = o[key]
        inst = ins.generate(kind, seed=o["seed"], **params)
    except ins.InstanceError as exc:
        raise InputError(str(exc)) from None
    _write(ins.dumps_instance(inst), o["out"])
    return EXIT_OK


def cmd_solve(o: dict) -> int:
    inst = _load(o["instance"])
    cfg = solve_config(o)
    try:
        report = solve_auto(inst, cfg)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    _write(report.to_json(timing=bool(o["timing"])), o["out"])
    if not report.converged:
        log.warning("a relaxation did not converge; the report is still valid but the bound may be loose")
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_oracle(o: dict) -> int:
    inst = _load(o["instance"])
    try:
        res = brute_force(inst, limit_n=int(o["limit_n"]), quadratic_only=bool(o["quadratic_only"]))
    except OracleLimitError as exc:
        raise InputError(str(exc)) from None
    sol = res.argmax
    out = {"optimum": res.optimum, "x": list(sol.x), "quadratic": sol.quadratic,
           "linear": sol.linear, "usage": list(sol.usage), "count_explored": res.count_explored}
    _write(json.dumps(out, sort_keys=True, indent=2) + "\n", o["out"])
    return EXIT_OK


def _load_mkp(path) -> MkpProblem:
    try:
        d = json.loads(sys.stdin.read() if path == "-" else Path(path).read_text())
    except FileNotFoundError:
        raise InputError(f"{path}: no such file") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(d, dict):
        raise InputError(f"{path}: expected a JSON object")
    b = d.get("c", d.get("b"))
    for name, val in (("c", b), ("A", d.get("A")), ("budgets", d.get("budgets"))):
        if val is None:
            raise InputError(f"{path}: missing field {name!r}")
    try:
        return MkpProblem(b, d["A"], d["budgets"])
    except (ValueError, TypeError) as exc:
        raise InputError(f"{path}: {exc}") from None


def cmd_mkp(o: dict) -> int:
    prob = _load_mkp(o["instance"])
    r = round_p_plus_1_detail(prob)
    out = {
        "lp_value": str(r.lp.value), "lp_x": [str(v) for v in r.lp.x],
        "fractional_set": list(r.lp.fractional_set), "pivots": r.lp.pivots,
        "value": r.solution.objective, "x": list(r.solution.x), "chose": r.chose,
        "usage": list(r.solution.usage),
    }
    _write(json.dumps(out, sort_keys=True, indent=2) + "\n", o["out"])
    return EXIT_OK


# -- bench -------------------------------------------------------------------------

@dataclass
class BenchRow:
    id: str
    kind: str
    n: int
    p: int
    t: int
    W: int = 0
    a_max: int = 0
    greedy: int | str = ""
    edge: int | str = ""
    local: int | str = ""
    rounding: int | str = ""
    linear: int | str = ""
    auto: int | str = ""
    strategy: str = ""
    oracle: int | str = ""
    upper_bound: float | str = ""
    ratio: float | str = ""
    greedy_factor: float | str = ""
    global_factor: float | str = ""
    time_auto: float | str = ""
    time_oracle: float | str = ""
    error: str = ""


HEADER = [f.name for f in fields(BenchRow)]
NONCONVERGED = "relaxation did not converge"


def global_factor(a_max: int, n: int, gamma: float = 0.1) -> float:
    """a_max sqrt(n) (ln n)^(2 + gamma)."""
    return a_max * math.sqrt(n) * (math.log(n) ** (2 + gamma) if n > 1 else 0.0)


def empirical_ratio(reference, auto) -> float:
    if auto > 0:
        return reference / auto
    return 1.0 if reference <= 0 else math.inf


def suite(o: dict) -> list[tuple]:
    """(id, kind, n, p, t, generator seed, solver seed) for every suite entry.

    Seeds come from SeedSequence(master seed) spawned once per entry, in order;
    entry j uses the two 32-bit words of its child's state for generation and
    solving respectively.
    """
    kinds = [k.strip() for k in str(o["kinds"]).split(",") if k.strip()]
    for k in kinds:
        if k not in ("qkp", "dsp"):
            raise InputError(f"bench kind {k!r} not supported (qkp, dsp)")
    sizes = _ints(o["sizes"], "sizes")
    ps = _ints(o["ps"], "ps") or [1]
    ts = _ints(o["ts"], "ts") or [int(o["t"])]
    count = int(o["count"])
    combos = []
    for kind in kinds:
        for n in sizes:
            for p in (ps if kind == "qkp" else [1]):
                for t in ts:
                    for j in range(count):
                        combos.append((kind, n, p, t, j))
    children = np.random.SeedSequence(int(o["seed"])).spawn(len(combos))
    out = []
    for (kind, n, p, t, j), ch in zip(combos, children):
        gseed, sseed = (int(v) for v in ch.generate_state(2))
        out.append((f"{kind}-n{n}-p{p}-t{t}-{j:04d}", kind, n, p, t, gseed, sseed))
    return out


def bench_row(entry, o: dict) -> BenchRow:
    rid, kind, n, p, t, gseed, sseed = entry
    row = BenchRow(id=rid, kind=kind, n=n, p=p, t=t)
    try:
        if kind == "qkp":
            inst = ins.generate("qkp", seed=gseed, n=n, p=p, density=o["density"])
        else:
            inst = ins.generate("dsp", seed=gseed, n=n, density=o["density"], k=max(2, n // 4))
        s = ins.prune_infeasible_pairs(ins.scale(inst))
        row.W, row.a_max = s.W, s.a_max
        cfg = solve_config({**o, "t": t, "seed": sseed})
        t0 = time.perf_counter()
        rep = solve_auto(inst, cfg)
        dt = time.perf_counter() - t0
        mv = rep.method_values
        row.greedy, row.edge = mv.get("greedy", 0), mv.get("edge", 0)
        row.local, row.rounding = mv.get("local", 0), mv.get("rounding", 0)
        row.linear = mv.get("linear", 0)
        row.auto, row.strategy = rep.value, rep.strategy
        row.upper_bound = round(rep.upper_bound, 9) if rep.upper_bound is not None else ""
        row.greedy_factor = greedy_bound(p, n, s.W, t)
        row.global_factor = round(global_factor(s.a_max, n, float(o["gamma"])), 9)
        ref = rep.upper_bound
        if n <= int(o["bench_limit"]):
            t1 = time.perf_counter()
            row.oracle = brute_force(inst, limit_n=int(o["bench_limit"])).optimum
            if o["timing"]:
                row.time_oracle = round(time.perf_counter() - t1, 6)
            ref = row.oracle
        row.ratio = round(empirical_ratio(ref, rep.value), 9)
        if o["timing"]:
            row.time_auto = round(dt, 6)
        if not rep.converged:
            row.error = NONCONVERGED
    except Exception as exc:  # recorded per row; the run continues
        row.error = f"{type(exc).__name__}: {exc}"
    return row


def _bench_worker(args):
    return bench_row(*args)


def run_bench(o: dict) -> list[BenchRow]:
    entries = suite(o)
    jobs = max(1, int(o["jobs"]))
    if jobs == 1 or len(entries) < 2:
        return [bench_row(e, o) for e in entries]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        # map keeps submission order, so rows stay ordered by id
        return list(pool.map(_bench_worker, [(e, o) for e in entries]))


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=HEADER, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(asdict(r))
    return buf.getvalue()


def bench_summary(rows) -> dict:
    ok = [r for r in rows if r.auto != "" and r.error in ("", NONCONVERGED)]
    with_oracle = [r for r in ok if r.oracle != ""]
    worst = max((r.ratio for r in with_oracle), default=None)
    consts = [r.ratio / r.global_factor for r in with_oracle if r.global_factor]
    return {
        "rows": len(rows),
        "errors": sum(1 for r in rows if r.error),
        "max_ratio": worst,
        "greedy_factor_violations": sum(1 for r in with_oracle if r.ratio > r.greedy_factor),
        "global_factor_violations": sum(1 for r in with_oracle if r.ratio > r.global_factor),
        "max_ratio_over_global_factor": max(consts, default=None),
    }


def cmd_bench(o: dict) -> int:
    rows = run_bench(o)
    _write(rows_to_csv(rows), o["out"])
    summ = bench_summary(rows)
    if not o["quiet"]:
        print(f"bench: {summ['rows']} rows, {summ['errors']} errors, max oracle/auto ratio "
              f"{summ['max_ratio']}, greedy-factor violations {summ['greedy_factor_violations']}, "
              f"global-factor violations {summ['global_factor_violations']}, measured constant "
              f"{summ['max_ratio_over_global_factor']}", file=sys.stderr)
    return EXIT_NONCONVERGED if any(r.error == NONCONVERGED for r in rows) else EXIT_OK


COMMANDS = {"gen": cmd_gen, "solve": cmd_solve, "oracle": cmd_oracle, "mkp": cmd_mkp, "bench": cmd_bench}


def main(argv=None) -> int:
    try:
        o = resolve(argv)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    logging.basicConfig(level=logging.ERROR if o["quiet"] else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[o["command"]](o)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
