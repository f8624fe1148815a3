"""Command-line entry point.

Exit codes: 0 success, 1 infeasible model, 2 invalid case or arguments,
3 solver/enumeration limit or other internal failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import dataclass, field

from .bench import ScenarioSpec, default_out_dir, run_benchmark
from .graphcore import ConnectivityError, EnumerationLimitError, loop_lines, mesh_count
from .heuristics import DEFAULT_TREE_LIMIT, HeuristicFailure, brute_force_oracle, iterative_heuristic
from .netmodel import CaseError, load_case, validate
from .qpsolve import DEFAULT_TOL, INFEASIBLE, OPTIMAL
from .resmodel import evaluate

logger = logging.getLogger("radialrestore")

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_INVALID = 2
EXIT_LIMIT = 3


@dataclass
class CliConfig:
    command: str
    case_path: str | None = None
    out_path: str | None = None
    tol: float = DEFAULT_TOL
    seed: int = 42
    scenarios: int = 10
    sources: int = -1
    critical: int = -1
    methods: list[str] = field(default_factory=lambda: ["ih", "oracle"])
    tree_limit: int = DEFAULT_TREE_LIMIT
    jobs: int = 1
    timing: bool = False

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("--tol must be positive")
        if self.tree_limit <= 0:
            raise ValueError("--tree-limit must be positive")
        if self.jobs < 1:
            raise ValueError("--jobs must be >= 1")


class _InvalidInput(Exception):
    pass


def _load(cfg: CliConfig):
    if not cfg.case_path:
        raise _InvalidInput("--case is required")
    try:
        case = load_case(cfg.case_path)
    except OSError as exc:
        raise _InvalidInput(f"cannot read {cfg.case_path}: {exc.strerror}") from None
    except CaseError as exc:
        raise _InvalidInput(f"{cfg.case_path}: {exc}") from None
    problems = validate(case)
    if problems:
        raise _InvalidInput(f"{cfg.case_path}: " + "; ".join(problems))
    return case


def _emit(doc: dict, out_path: str | None) -> None:
    text = json.dumps(doc, indent=2) + "\n"
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_solve(cfg: CliConfig) -> int:
    case = _load(cfg)
    t0 = time.perf_counter()
    try:
        res = iterative_heuristic(case, cfg.tol)
    except HeuristicFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE if exc.status in ("", INFEASIBLE) else EXIT_LIMIT
    t1 = time.perf_counter()
    sol = evaluate(case, res.topology, cfg.tol)
    t2 = time.perf_counter()
    if sol.status != OPTIMAL:
        print(f"error: radial model {sol.status}", file=sys.stderr)
        return EXIT_INFEASIBLE if sol.status == INFEASIBLE else EXIT_LIMIT
    doc = {
        "case": case.name,
        "closed_lines": list(res.topology.line_ids),
        "cut_lines": list(res.cut_lines),
        "trace": [step.to_dict() for step in res.trace],
        "dispatch": sol.to_dict(),
        "timing_ms": {
            "heuristic": (t1 - t0) * 1e3,
            "build": sol.build_ms,
            "solve": sol.solve_ms,
            "graph": sum(step.graph_ms for step in res.trace),
            "total": (t2 - t0) * 1e3,
        },
    }
    _emit(doc, cfg.out_path)
    return EXIT_OK


def cmd_oracle(cfg: CliConfig) -> int:
    case = _load(cfg)
    try:
        best = brute_force_oracle(case, cfg.tol, cfg.tree_limit, jobs=cfg.jobs)
    except EnumerationLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_LIMIT
    if best.best_topology is None:
        print("error: no spanning tree could be solved", file=sys.stderr)
        return EXIT_INFEASIBLE
    doc = {"case": case.name, **best.to_dict(case), "dispatch": best.best_dispatch.to_dict()}
    _emit(doc, cfg.out_path)
    return EXIT_OK


def cmd_info(cfg: CliConfig) -> int:
    case = _load(cfg)
    topo = case.topology()
    info = {
        "name": case.name,
        "buses": case.n_buses,
        "lines": topo.n_lines,
        "meshes": mesh_count(topo),
        "loop_lines": len(loop_lines(topo)),
        "sources": len(case.sources),
        "storages": len(case.storages),
        "loads": len(case.load_buses),
        "periods": case.n_periods,
    }
    width = max(len(k) for k in info)
    for k, v in info.items():
        print(f"{k.ljust(width)}  {v}")
    return EXIT_OK


def cmd_validate(cfg: CliConfig) -> int:
    _load(cfg)
    print("ok")
    return EXIT_OK


def cmd_bench(cfg: CliConfig) -> int:
    case = _load(cfg)
    n_loads = len(case.load_buses)
    spec = ScenarioSpec(
        seed=cfg.seed,
        n_scenarios=cfg.scenarios,
        n_sources_to_place=len(case.sources) if cfg.sources < 0 else cfg.sources,
        n_critical_loads=max(1, round(0.2 * n_loads)) if cfg.critical < 0 and n_loads > 1 else max(cfg.critical, 0),
    )
    try:
        report = run_benchmark(
            case, spec, cfg.methods, cfg.tol, cfg.tree_limit, jobs=cfg.jobs, timing=cfg.timing
        )
    except ValueError as exc:
        raise _InvalidInput(str(exc)) from None
    out_dir = cfg.out_path or default_out_dir()
    rows_path, summary_path = report.write(out_dir)
    print(report.table())
    print(f"wrote {rows_path} and {summary_path}")
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "oracle": cmd_oracle,
    "bench": cmd_bench,
    "info": cmd_info,
    "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="radialrestore",
        description="Radial topology determination for distribution system restoration.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--case", dest="case_path", required=True, help="case file (JSON)")
        p.add_argument("--tol", type=float, default=DEFAULT_TOL, help="solver tolerance (default 1e-8)")

    p = sub.add_parser("solve", help="iterative heuristic, then evaluate the radial topology")
    common(p)
    p.add_argument("--out", dest="out_path", help="result file (default: stdout)")

    p = sub.add_parser("oracle", help="exhaustive search over spanning trees")
    common(p)
    p.add_argument("--out", dest="out_path")
    p.add_argument("--tree-limit", type=int, default=DEFAULT_TREE_LIMIT)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("bench", help="compare methods over generated scenarios")
    common(p)
    p.add_argument("--out", dest="out_path", help="report directory (default $RADIALRESTORE_OUT or ./bench_out)")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--scenarios", type=int, default=10)
    p.add_argument("--sources", type=int, default=-1,
                   help="sources to relocate per scenario (default: as many as the case has)")
    p.add_argument("--critical", type=int, default=-1,
                   help="critical loads per scenario (default: 20%% of loads)")
    p.add_argument("--methods", default="ih,oracle", help="comma list from ih,mst,oracle")
    p.add_argument("--tree-limit", type=int, default=DEFAULT_TREE_LIMIT)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--timing", action="store_true",
                   help="record wall-clock times (reports are then not byte-reproducible)")

    p = sub.add_parser("info", help="print network statistics")
    p.add_argument("--case", dest="case_path", required=True)

    p = sub.add_parser("validate", help="check a case file")
    p.add_argument("--case", dest="case_path", required=True)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    opts = {k: v for k, v in vars(args).items() if k != "verbose"}
    if "methods" in opts:
        opts["methods"] = [m.strip() for m in opts["methods"].split(",") if m.strip()]
    try:
        cfg = CliConfig(**opts)
        return COMMANDS[cfg.command](cfg)
    except (_InvalidInput, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ConnectivityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001 - exit codes are a closed set
        logger.debug("internal failure", exc_info=True)
        print(f"error: internal failure: {exc}", file=sys.stderr)
        return EXIT_LIMIT


if __name__ == "__main__":
    sys.exit(main())
