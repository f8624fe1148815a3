"""Scenario generation, error-factor scoring and method comparison."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .graphcore import EnumerationLimitError
from .heuristics import (
    DEFAULT_TREE_LIMIT,
    HeuristicFailure,
    brute_force_oracle,
    iterative_heuristic,
    mst_baseline,
)
from .netmodel import NetworkCase, validate
from .qpsolve import DEFAULT_TOL
from .resmodel import evaluate

logger = logging.getLogger(__name__)

METHODS = ("ih", "mst", "oracle")
NEAR_OPTIMUM_SINGLE = 1e-4
NEAR_OPTIMUM_MULTI = 1e-3
# relative slack when deciding that a method restored less weighted load
N_LOAD_RTOL = 1e-6

ROW_FIELDS = ["scenario", "method", "f", "sigma", "n_load", "p_loss", "cut_lines", "time_ms", "status"]


def sigma(f_star: float, f_x: float) -> float:
    """Relative optimality gap ``|f* - f_x| / f*``."""
    if f_star == 0:
        raise ZeroDivisionError("reference objective is zero")
    return abs(f_star - f_x) / f_star


@dataclass
class ScenarioSpec:
    """How restoration scenarios are drawn from a base case.

    ``n_sources_to_place`` sources are moved to buses drawn uniformly without
    replacement (capacities cycle through the base sources); 0 keeps the base
    placement. ``n_critical_loads`` load buses without a source are drawn the
    same way and weighted ``critical_weight``, every other load
    ``normal_weight``; 0 keeps the base weights.
    """

    seed: int = 42
    n_scenarios: int = 10
    n_sources_to_place: int = 0
    n_critical_loads: int = 0
    critical_weight: float = 100.0
    normal_weight: float = 1.0


def _scenario(base: NetworkCase, spec: ScenarioSpec, index: int) -> NetworkCase:
    rng = np.random.default_rng([spec.seed, index])
    bus_ids = [b.id for b in base.buses]
    sources = list(base.sources)
    if spec.n_sources_to_place:
        if spec.n_sources_to_place > len(bus_ids):
            raise ValueError("more sources to place than buses")
        picked = sorted(int(b) for b in rng.choice(bus_ids, size=spec.n_sources_to_place, replace=False))
        templates = base.sources
        sources = [
            replace(templates[k % len(templates)], bus=b) for k, b in enumerate(picked)
        ]
    buses = list(base.buses)
    if spec.n_critical_loads:
        src_buses = {s.bus for s in sources}
        eligible = [b.id for b in base.buses if b.is_load and b.id not in src_buses]
        if spec.n_critical_loads > len(eligible):
            raise ValueError(
                f"scenario {index}: {spec.n_critical_loads} critical loads requested, "
                f"{len(eligible)} eligible buses"
            )
        critical = {int(b) for b in rng.choice(eligible, size=spec.n_critical_loads, replace=False)}
        buses = [
            replace(b, weight=spec.critical_weight if b.id in critical else spec.normal_weight)
            if b.is_load else b
            for b in buses
        ]
    return replace(base, buses=tuple(buses), sources=tuple(sources), name=f"{base.name}#{index}")


def generate_scenarios(base: NetworkCase, spec: ScenarioSpec) -> list[NetworkCase]:
    """Deterministic scenario sequence; scenario ``i`` depends only on ``(seed, i)``."""
    if spec.n_scenarios < 0:
        raise ValueError("n_scenarios must be >= 0")
    if spec.n_sources_to_place < 0 or spec.n_critical_loads < 0:
        raise ValueError("placement counts must be >= 0")
    if spec.n_sources_to_place and not base.sources:
        raise ValueError("base case has no source to relocate")
    n_loads = sum(b.is_load for b in base.buses)
    if spec.n_critical_loads > n_loads:
        raise ValueError(f"{spec.n_critical_loads} critical loads requested, base has {n_loads} loads")
    out = []
    for i in range(spec.n_scenarios):
        sc = _scenario(base, spec, i)
        problems = validate(sc)
        if problems:
            raise ValueError(f"scenario {i} invalid: {problems[0]}")
        out.append(sc)
    return out


@dataclass
class BenchRow:
    scenario: int
    method: str
    f: float | None
    sigma: float | None
    n_load: float | None
    p_loss: float | None
    cut_lines: list[int]
    time_ms: float | None
    status: str

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def _cut_set(case: NetworkCase, closed) -> list[int]:
    closed = set(closed)
    return [ln.id for ln in case.lines if ln.id not in closed]


def _run_method(case: NetworkCase, method: str, tol: float, tree_limit: int):
    """Returns (status, f, n_load, p_loss, cut_lines)."""
    if method == "ih":
        res = iterative_heuristic(case, tol)
        sol = evaluate(case, res.topology, tol)
        cuts = list(res.cut_lines)
    elif method == "mst":
        tree = mst_baseline(case, tol)
        sol = evaluate(case, tree, tol)
        cuts = _cut_set(case, tree.line_ids)
    elif method == "oracle":
        best = brute_force_oracle(case, tol, tree_limit)
        sol = best.best_dispatch
        if sol is None:
            return "failed: no tree solved", None, None, None, []
        cuts = _cut_set(case, best.best_topology.line_ids)
    else:
        raise ValueError(f"unknown method {method!r}")
    if not sol.ok:
        return f"failed: {sol.status}", None, None, None, cuts
    return "ok", sol.f, sol.n_load, sol.p_loss, cuts


def _run_scenario(args) -> list[BenchRow]:
    index, case, methods, tol, tree_limit, timing = args
    rows = []
    for method in methods:
        t0 = time.perf_counter()
        try:
            status, f, n_load, p_loss, cuts = _run_method(case, method, tol, tree_limit)
        except EnumerationLimitError as exc:
            status, f, n_load, p_loss, cuts = f"unscored: {exc}", None, None, None, []
        except HeuristicFailure as exc:
            status, f, n_load, p_loss, cuts = f"failed: {exc}", None, None, None, []
        elapsed = (time.perf_counter() - t0) * 1e3
        rows.append(BenchRow(index, method, f, None, n_load, p_loss, cuts,
                             elapsed if timing else None, status))
    ref = next((r for r in rows if r.method == "oracle"), None)
    if ref is not None:
        for r in rows:
            if r.ok and ref.ok and ref.f:
                r.sigma = sigma(ref.f, r.f)
            elif r.ok and not ref.ok:
                r.status = "unscored: oracle " + ref.status
    return rows


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse_float(s: str):
    return float(s) if s != "" else None


@dataclass
class BenchReport:
    rows: list[BenchRow]
    methods: list[str]
    n_scenarios: int
    near_optimum: float
    tol: float
    meta: dict = field(default_factory=dict)

    @property
    def has_sigma(self) -> bool:
        return "oracle" in self.methods

    @property
    def fieldnames(self) -> list[str]:
        return [f for f in ROW_FIELDS if f != "sigma" or self.has_sigma]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.fieldnames)
        for r in self.rows:
            d = asdict(r)
            d["cut_lines"] = " ".join(str(c) for c in r.cut_lines)
            w.writerow([_fmt(d[k]) for k in self.fieldnames])
        return buf.getvalue()

    def aggregates(self) -> dict:
        """Per-method summary in the categories of the comparison tables."""
        by = {(r.scenario, r.method): r for r in self.rows}
        sigma_zero = 10 * self.tol
        out = {}
        for m in self.methods:
            rows = [by[(s, m)] for s in range(self.n_scenarios) if (s, m) in by]
            times = [r.time_ms for r in rows if r.time_ms is not None]
            agg: dict = {
                "scenarios": len(rows),
                "solved": sum(r.ok for r in rows),
                "failed": sum(r.status.startswith("failed") for r in rows),
                "unscored": sum(r.status.startswith("unscored") for r in rows),
                "t_min_ms": min(times) if times else None,
                "t_max_ms": max(times) if times else None,
                "t_ave_ms": sum(times) / len(times) if times else None,
            }
            if self.has_sigma:
                scored = [r for r in rows if r.sigma is not None]
                sig = [r.sigma for r in scored]
                same = near = less = 0
                for r in scored:
                    ref = by[(r.scenario, "oracle")]
                    same += set(r.cut_lines) == set(ref.cut_lines)
                    near += r.sigma <= self.near_optimum
                    less += r.n_load < ref.n_load - N_LOAD_RTOL * max(1.0, abs(ref.n_load))
                agg.update({
                    "scored": len(scored),
                    "same_topology": same,
                    "near_optimum": near,
                    "n_load_below_reference": less,
                    "sigma_zero": sum(s <= sigma_zero for s in sig),
                    "sigma_within_threshold": sum(sigma_zero < s <= self.near_optimum for s in sig),
                    "sigma_above_threshold": sum(s > self.near_optimum for s in sig),
                    "sigma_ave": sum(sig) / len(sig) if sig else None,
                    "sigma_max": max(sig) if sig else None,
                })
            out[m] = agg
        return out

    def summary(self) -> dict:
        return {
            "meta": dict(self.meta),
            "methods": list(self.methods),
            "n_scenarios": self.n_scenarios,
            "near_optimum_threshold": self.near_optimum,
            "tol": self.tol,
            "aggregates": self.aggregates(),
        }

    def write(self, out_dir) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        rows_path = out / "rows.csv"
        summary_path = out / "summary.json"
        rows_path.write_text(self.to_csv(), encoding="utf-8")
        summary_path.write_text(json.dumps(self.summary(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return rows_path, summary_path

    def table(self) -> str:
        """Plain-text rendering of the aggregates."""
        agg = self.aggregates()
        keys = [k for k in next(iter(agg.values()), {})]
        width = max([len(k) for k in keys] + [10])
        lines = ["".ljust(width) + "".join(m.rjust(14) for m in self.methods)]
        for k in keys:
            cells = []
            for m in self.methods:
                v = agg[m].get(k)
                cells.append(("-" if v is None else f"{v:.4g}" if isinstance(v, float) else str(v)).rjust(14))
            lines.append(k.ljust(width) + "".join(cells))
        return "\n".join(lines)


def load_report(out_dir) -> BenchReport:
    """Read a written report back and check that its aggregates recompute exactly."""
    out = Path(out_dir)
    summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
    rows = []
    with open(out / "rows.csv", newline="", encoding="utf-8") as fh:
        for d in csv.DictReader(fh):
            rows.append(BenchRow(
                scenario=int(d["scenario"]),
                method=d["method"],
                f=_parse_float(d["f"]),
                sigma=_parse_float(d["sigma"]) if "sigma" in d else None,
                n_load=_parse_float(d["n_load"]),
                p_loss=_parse_float(d["p_loss"]),
                cut_lines=[int(c) for c in d["cut_lines"].split()],
                time_ms=_parse_float(d["time_ms"]),
                status=d["status"],
            ))
    report = BenchReport(
        rows=rows,
        methods=summary["methods"],
        n_scenarios=summary["n_scenarios"],
        near_optimum=summary["near_optimum_threshold"],
        tol=summary["tol"],
        meta=summary["meta"],
    )
    recomputed = json.loads(json.dumps(report.aggregates(), sort_keys=True))
    if recomputed != summary["aggregates"]:
        raise ValueError("report aggregates do not match row data")
    return report


def _canonical_methods(methods) -> list[str]:
    methods = list(dict.fromkeys(methods))
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise ValueError(f"unknown methods {unknown}; choose from {list(METHODS)}")
    if not methods:
        raise ValueError("no methods given")
    return [m for m in METHODS if m in methods]


def run_benchmark(
    base: NetworkCase,
    spec: ScenarioSpec,
    methods=("ih", "oracle"),
    tol: float = DEFAULT_TOL,
    tree_limit: int = DEFAULT_TREE_LIMIT,
    jobs: int = 1,
    timing: bool = True,
) -> BenchReport:
    """Run every method on every scenario and score against the oracle.

    Method failures and oracle enumeration overflows are recorded on the
    affected rows. With ``jobs > 1`` scenarios run in worker processes; rows
    are reassembled in scenario order so only timings can differ.
    """
    methods = _canonical_methods(methods)
    scenarios = generate_scenarios(base, spec)
    tasks = [(i, sc, methods, tol, tree_limit, timing) for i, sc in enumerate(scenarios)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            per_scenario = list(pool.map(_run_scenario, tasks))
    else:
        per_scenario = [_run_scenario(t) for t in tasks]
    rows = [r for group in per_scenario for r in group]
    threshold = NEAR_OPTIMUM_MULTI if base.is_multi_period else NEAR_OPTIMUM_SINGLE
    meta = {
        "case": base.name,
        "seed": spec.seed,
        "spec": asdict(spec),
    }
    return BenchReport(rows, methods, len(scenarios), threshold, tol, meta)


def default_out_dir() -> str:
    return os.environ.get("RADIALRESTORE_OUT", "bench_out")


def fraction(report: BenchReport, method: str, key: str) -> float:
    agg = report.aggregates()[method]
    n = agg.get("scored") or 0
    return agg[key] / n if n else math.nan
