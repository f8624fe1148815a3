"""Run the method comparison on the shipped fixtures and print summary tables.

Each case is benchmarked with the iterative heuristic, the MST baseline and
the exhaustive oracle over seeded scenarios (relocated sources, 20% critical
loads). Per-case reports go to ``<out>/<case>/``; the printed tables group the
aggregates into the categories used for comparison: topology agreement and
near-optimum counts, error factors, and timings.

    python3 scripts/run_tables.py --out tables_out
    python3 scripts/run_tables.py --cases mesh12 synth123 --scenarios 20 --jobs 4
"""

import argparse
import time
from pathlib import Path

from radialrestore import load_fixture
from radialrestore.bench import ScenarioSpec, run_benchmark

# per-case scenario counts; the oracle dominates the cost on the larger cases
DEFAULT_SCENARIOS = {
    "mesh12": 100,
    "thermal_stress": 100,
    "synth123": 20,
    "synth32": 3,
    "synth62_mp": 3,
}


def bench_case(name, n_scenarios, seed, jobs, out):
    base = load_fixture(name)
    n_loads = len(base.load_buses)
    spec = ScenarioSpec(
        seed=seed,
        n_scenarios=n_scenarios,
        n_sources_to_place=len(base.sources),
        n_critical_loads=max(1, round(0.2 * n_loads)),
    )
    t0 = time.perf_counter()
    report = run_benchmark(base, spec, ["ih", "mst", "oracle"], jobs=jobs, timing=True)
    report.write(out / name)
    return report, time.perf_counter() - t0


def _cell(v):
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.3g}"
    return str(v)


def print_tables(results):
    quality = ["scored", "same_topology", "near_optimum", "n_load_below_reference"]
    error = ["sigma_zero", "sigma_within_threshold", "sigma_above_threshold", "sigma_ave", "sigma_max"]
    timing = ["t_min_ms", "t_max_ms", "t_ave_ms"]
    for title, keys in (("Solution quality", quality), ("Error factor", error), ("Time (ms)", timing)):
        print(f"\n## {title}\n")
        print("| case | method | " + " | ".join(keys) + " |")
        print("|---|---|" + "---|" * len(keys))
        for name, report in results:
            agg = report.aggregates()
            for m in report.methods:
                print(f"| {name} | {m} | " + " | ".join(_cell(agg[m].get(k)) for k in keys) + " |")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cases", nargs="+", default=list(DEFAULT_SCENARIOS))
    ap.add_argument("--scenarios", type=int, help="override the per-case scenario count")
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="tables_out")
    args = ap.parse_args()

    out = Path(args.out)
    results = []
    for name in args.cases:
        n = args.scenarios or DEFAULT_SCENARIOS.get(name, 10)
        report, elapsed = bench_case(name, n, args.seed, args.jobs, out)
        print(f"{name}: {n} scenarios in {elapsed:.1f} s (threshold {report.near_optimum:g})")
        results.append((name, report))
    print_tables(results)


if __name__ == "__main__":
    main()
