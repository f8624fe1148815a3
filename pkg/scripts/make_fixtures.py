"""Regenerate the shipped case files under src/radialrestore/cases/.

    python scripts/make_fixtures.py [--skip-thermal-search]

Every fixture is synthetic and seeded; rerunning reproduces identical files.
"""

import argparse
from pathlib import Path

import numpy as np

from radialrestore.bench import sigma
from radialrestore.heuristics import brute_force_oracle, iterative_heuristic, mst_baseline
from radialrestore.netmodel import Bus, Line, NetworkCase, Source, save_case, validate
from radialrestore.resmodel import evaluate
from radialrestore.synth import SynthParams, random_case, with_periods

OUT = Path(__file__).resolve().parents[1] / "src" / "radialrestore" / "cases"


def two_bus():
    return NetworkCase(
        buses=(Bus(1), Bus(2, (0.8,), (0.2,), 1.0, True)),
        lines=(Line(1, 1, 2, 0.01, 2.0),),
        sources=(Source(1, 1.0, 1.0),),
        name="two_bus",
    )


def ring4():
    return NetworkCase(
        buses=(Bus(1), Bus(2, (0.3,), (0.0,), 1.0, True), Bus(3, (0.4,), (0.0,), 1.0, True), Bus(4)),
        lines=tuple(Line(k, a, b, 0.01, 1.0) for k, (a, b) in enumerate([(1, 2), (2, 3), (3, 4), (4, 1)], 1)),
        sources=(Source(1, 1.0, 1.0),),
        name="ring4",
    )


def tree5():
    return NetworkCase(
        buses=(
            Bus(1),
            Bus(2, (0.2,), (0.05,), 10.0, True),
            Bus(3, (0.3,), (0.1,), 1.0, True),
            Bus(4, (0.1,), (0.02,), 100.0, True),
            Bus(5, (0.25,), (0.08,), 1.0, True),
        ),
        lines=(
            Line(1, 1, 2, 0.01, 1.0),
            Line(2, 2, 3, 0.02, 1.0),
            Line(3, 2, 4, 0.015, 1.0),
            Line(4, 1, 5, 0.01, 1.0),
        ),
        sources=(Source(1, 0.6, 0.5),),
        name="tree5",
    )


def synth(seed, **kw):
    return random_case(np.random.default_rng(seed), SynthParams(**kw))


def find_thermal_stress(max_seed=400):
    """First seed whose tight-limit case separates IH from MST against the oracle."""
    for seed in range(max_seed):
        case = synth(
            1000 + seed, n_buses=12, n_ties=3, n_sources=2, thermal_range=(0.15, 0.45),
            capacity_ratio=0.9, name="thermal_stress",
        )
        if validate(case):
            continue
        ref = brute_force_oracle(case)
        f_ih = evaluate(case, iterative_heuristic(case).topology).f
        f_mst = evaluate(case, mst_baseline(case)).f
        s_ih, s_mst = sigma(ref.best_objective, f_ih), sigma(ref.best_objective, f_mst)
        if s_ih <= 1e-4 and s_mst > 1e-4:
            print(f"thermal_stress: seed {1000 + seed}, sigma_IH={s_ih:.3g}, sigma_MST={s_mst:.3g}")
            return case
    raise SystemExit("no separating case found")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--skip-thermal-search", action="store_true")
    args = ap.parse_args()
    OUT.mkdir(parents=True, exist_ok=True)
    cases = {
        "two_bus": two_bus(),
        "ring4": ring4(),
        "tree5": tree5(),
        "mesh12": synth(12, n_buses=12, n_ties=3, n_sources=2, name="mesh12"),
        "synth32": synth(32, n_buses=32, n_ties=5, n_sources=3, name="synth32"),
        "synth123": synth(123, n_buses=123, n_ties=2, n_sources=4, n_loads=85, reach=6, name="synth123"),
        "synth62_mp": with_periods(
            np.random.default_rng(620),
            synth(62, n_buses=62, n_ties=4, n_sources=3, name="synth62_mp"),
            n_periods=8,
            n_storages=2,
        ),
    }
    if not args.skip_thermal_search:
        cases["thermal_stress"] = find_thermal_stress()
    for name, case in cases.items():
        problems = validate(case)
        assert not problems, (name, problems)
        save_case(case, OUT / f"{name}.json")
        print(f"wrote {name}: {case.n_buses} buses, {len(case.lines)} lines")


if __name__ == "__main__":
    main()
