"""Acceptance criteria C1-C9.

Each test records one line in the ``acceptance criteria`` section of the
pytest terminal summary (see conftest) and then asserts, so the summary
shows every criterion even when one of them fails.
"""

import time

import numpy as np
import pytest

from radialrestore import fixture_path, load_fixture
from radialrestore.bench import ScenarioSpec, fraction, run_benchmark, sigma
from radialrestore.cli import main as cli_main
from radialrestore.graphcore import Topology, enumerate_spanning_trees, is_radial, loop_lines, mesh_count
from radialrestore.heuristics import brute_force_oracle, iterative_heuristic, mst_baseline
from radialrestore.qpsolve import INFEASIBLE, OPTIMAL, solve_qp
from radialrestore.resmodel import build_clr_mesh, build_mpclr_mesh, evaluate
from radialrestore.synth import suite_case, with_periods

from conftest import TOL, record_criterion
from helpers import dispatch_violations
from qp_fixtures import analytic_fixtures, kkt_residuals
from test_graphcore import brute_loop_lines, kirchhoff_count

SUITE_SEEDS = range(200)


def _slack(f):
    return 10 * TOL * max(1.0, abs(f))


@pytest.fixture(scope="module")
def suite():
    return [suite_case(s) for s in SUITE_SEEDS]


def test_c1_radiality(suite):
    failures = []
    worst = 0.0
    for case in suite:
        topo = case.topology()
        expected = len(case.lines) - case.n_buses + 1
        t0 = time.perf_counter()
        res = iterative_heuristic(case, TOL)
        dt = time.perf_counter() - t0
        worst = max(worst, dt)
        if not is_radial(res.topology):
            failures.append(f"{case.name}: not radial")
        if len(res.trace) != expected or mesh_count(topo) != expected:
            failures.append(f"{case.name}: {len(res.trace)} iterations, expected {expected}")
        if dt >= 1.0:
            failures.append(f"{case.name}: {dt:.2f} s")
    record_criterion(
        "C1 radiality", not failures,
        f"{len(suite)} cases, {len(failures)} failures, slowest {worst * 1e3:.0f} ms",
    )
    assert not failures, failures[:5]


def test_c2_oracle_sandwich(suite):
    subset = [c for c in suite if c.n_buses <= 14 and mesh_count(c.topology()) <= 4]
    violations = []
    trees = 0
    for case in subset:
        f_mesh = evaluate(case, case.topology(), TOL).f
        best = brute_force_oracle(case, TOL)
        trees += best.trees_evaluated
        f_ih = evaluate(case, iterative_heuristic(case, TOL).topology, TOL).f
        f_star = best.best_objective
        if f_mesh < f_star - _slack(f_star):
            violations.append(f"{case.name}: mesh {f_mesh} < oracle {f_star}")
        if f_star < f_ih - _slack(f_star):
            violations.append(f"{case.name}: oracle {f_star} < IH {f_ih}")
        if sigma(f_star, f_ih) < 0:
            violations.append(f"{case.name}: negative sigma")
    ok = not violations and len(subset) > 0
    record_criterion(
        "C2 oracle sandwich", ok,
        f"{len(subset)} cases ({trees} trees), {len(violations)} violations",
    )
    assert ok, violations[:5]


def test_c3_near_optimality_trend():
    base = load_fixture("mesh12")
    n_loads = len(base.load_buses)
    spec = ScenarioSpec(
        seed=42, n_scenarios=100,
        n_sources_to_place=len(base.sources),
        n_critical_loads=max(1, round(0.2 * n_loads)),
    )
    rep = run_benchmark(base, spec, ["ih", "mst", "oracle"], TOL, timing=False)
    frac_ih = fraction(rep, "ih", "near_optimum")
    frac_mst = fraction(rep, "mst", "near_optimum")

    ring = load_fixture("ring4")
    ring_ih = evaluate(ring, iterative_heuristic(ring, TOL).topology, TOL).f
    ring_star = brute_force_oracle(ring, TOL).best_objective
    ring_sigma = sigma(ring_star, ring_ih)
    ok = ring_sigma <= 10 * TOL
    record_criterion(
        "C3 near-optimality trend", ok,
        f"mesh12 x100: IH near-optimum {frac_ih:.2f}, MST {frac_mst:.2f} "
        f"(scored {rep.aggregates()['ih']['scored']}); ring4 sigma_IH {ring_sigma:.1e}",
    )
    assert ok


def test_c4_thermal_stress_separation():
    case = load_fixture("thermal_stress")
    best = brute_force_oracle(case, TOL)
    f_ih = evaluate(case, iterative_heuristic(case, TOL).topology, TOL).f
    f_mst = evaluate(case, mst_baseline(case, TOL), TOL).f
    s_ih = sigma(best.best_objective, f_ih)
    s_mst = sigma(best.best_objective, f_mst)
    ok = s_ih <= 1e-4 < s_mst
    record_criterion(
        "C4 thermal-stress separation", ok,
        f"sigma_IH {s_ih:.2e}, sigma_MST {s_mst:.2e} over {best.trees_evaluated} trees",
    )
    assert ok


def _mp_cases():
    cases = [load_fixture("synth62_mp")]
    for seed in range(10):
        rng = np.random.default_rng([31, seed])
        base = suite_case(1000 + seed, bus_range=(8, 20), tie_range=(0, 4))
        cases.append(with_periods(rng, base, n_periods=int(rng.integers(2, 7)), n_storages=1,
                                  budget_hours=float(rng.uniform(0.2, 0.8))))
    return cases


def test_c5_multi_period_consistency():
    problems = []
    # MPCLR with one period and no budget/SOC rows against CLR
    for case in [load_fixture(n) for n in ("ring4", "mesh12", "synth32")] + [suite_case(s) for s in range(10)]:
        topo = case.topology()
        a = solve_qp(build_clr_mesh(case, topo), TOL)
        b = solve_qp(build_mpclr_mesh(case, topo), TOL)
        if not (a.ok and b.ok) or abs(a.objective - b.objective) > 1e-7:
            problems.append(f"{case.name}: CLR {a.objective} vs MPCLR {b.objective}")
    n_checked = 0
    for case in _mp_cases():
        dt = case.periods.interval_hours
        ih = iterative_heuristic(case, TOL)
        for topo in (case.topology(), ih.topology):
            sol = evaluate(case, topo, TOL)
            if not sol.ok:
                problems.append(f"{case.name}: {sol.status}")
                continue
            n_checked += 1
            for k, src in enumerate(case.sources):
                if src.energy_budget is None:
                    continue
                served = np.cumsum(sol.p_gen[:, k]) * dt
                if served.max() > src.energy_budget + 1e-7:
                    problems.append(f"{case.name}: source {k} uses {served.max()} > {src.energy_budget}")
            for j, st in enumerate(case.storages):
                soc = st.soc_init + st.rho * dt * np.cumsum(sol.p_gen[:, len(case.sources) + j])
                if soc.min() < st.soc_min - 1e-7 or soc.max() > st.soc_max + 1e-7:
                    problems.append(f"{case.name}: storage {j} SOC {soc.min()}..{soc.max()}")
    record_criterion(
        "C5 multi-period consistency", not problems,
        f"13 single-period pairs, {n_checked} multi-period solutions, {len(problems)} problems",
    )
    assert not problems, problems[:5]


def test_c6_conservation(suite):
    problems = []
    n = 0
    cases = list(suite[:60]) + [load_fixture(k) for k in ("ring4", "mesh12", "synth32", "synth123",
                                                          "synth62_mp", "thermal_stress")]
    for case in cases:
        topos = [case.topology(), iterative_heuristic(case, TOL).topology]
        if mesh_count(case.topology()) > 0:
            topos.append(mst_baseline(case, TOL))
        for topo in topos:
            sol = evaluate(case, topo, TOL)
            if sol.status != OPTIMAL:
                continue
            n += 1
            problems += [f"{case.name}: {p}" for p in dispatch_violations(case, sol, TOL)]
    record_criterion("C6 conservation", not problems, f"{n} optimal solutions, {len(problems)} violations")
    assert not problems, problems[:5]


def test_c7_qp_contract():
    problems = []
    fixtures = analytic_fixtures()
    for name, qp, expected in fixtures:
        sol = solve_qp(qp, TOL)
        if expected == "infeasible":
            if sol.status != INFEASIBLE:
                problems.append(f"{name}: {sol.status}")
            continue
        x, obj = expected
        if sol.status != OPTIMAL:
            problems.append(f"{name}: {sol.status}")
            continue
        err = max(float(np.abs(sol.x - x).max()), abs(sol.objective - obj))
        reported = max(sol.primal_inf, sol.dual_inf, sol.gap)
        recomputed = max(kkt_residuals(qp, sol))
        if err > 1e-6:
            problems.append(f"{name}: error {err:.2e}")
        if reported > 1e-8 or recomputed > 1e-8:
            problems.append(f"{name}: KKT residual {max(reported, recomputed):.2e}")
    record_criterion("C7 QP solver contract", not problems,
                     f"{len(fixtures)} fixtures, {len(problems)} problems")
    assert not problems, problems


def test_c8_determinism(tmp_path):
    args = ["bench", "--case", str(fixture_path("mesh12")), "--seed", "42", "--scenarios", "10",
            "--methods", "ih,mst,oracle"]
    dirs = [tmp_path / "a", tmp_path / "b", tmp_path / "par"]
    codes = [
        cli_main(args + ["--out", str(dirs[0])]),
        cli_main(args + ["--out", str(dirs[1])]),
        cli_main(args + ["--out", str(dirs[2]), "--jobs", "4"]),
    ]
    files = ("rows.csv", "summary.json")
    same_serial = all((dirs[0] / f).read_bytes() == (dirs[1] / f).read_bytes() for f in files)
    same_rows = (dirs[0] / "rows.csv").read_text() == (dirs[2] / "rows.csv").read_text()
    ok = codes == [0, 0, 0] and same_serial and same_rows
    record_criterion(
        "C8 determinism", ok,
        f"serial runs byte-identical: {same_serial}; --jobs 4 rows identical: {same_rows}",
    )
    assert ok


def _random_graph(rng, max_buses, max_extra):
    n = int(rng.integers(2, max_buses + 1))
    pairs = [(int(rng.integers(0, k)), k) for k in range(1, n)]
    for _ in range(int(rng.integers(0, max_extra + 1))):
        u, v = (int(a) for a in rng.integers(0, n, size=2))
        if u != v:
            pairs.append((u, v))
    perm = rng.permutation(n)
    order = rng.permutation(len(pairs))
    lines = tuple((k + 1, int(perm[pairs[j][0]]), int(perm[pairs[j][1]])) for k, j in enumerate(order))
    return Topology(n, lines)


def test_c9_graph_oracles():
    rng = np.random.default_rng(2024)
    loop_bad = 0
    for _ in range(100):
        t = _random_graph(rng, 12, 8)
        loop_bad += loop_lines(t) != brute_loop_lines(t)
    count_bad = 0
    total = 0
    for _ in range(20):
        t = _random_graph(rng, 10, 6)
        trees = enumerate_spanning_trees(t, 1_000_000)
        total += len(trees)
        count_bad += len(trees) != kirchhoff_count(t)
    ok = loop_bad == 0 and count_bad == 0
    record_criterion(
        "C9 graph oracles", ok,
        f"loop_lines mismatches {loop_bad}/100; tree-count mismatches {count_bad}/20 ({total} trees)",
    )
    assert ok


def test_thermal_fixture_is_stressed():
    # the separation fixture must actually bind thermal limits under the meshed solve
    case = load_fixture("thermal_stress")
    sol = evaluate(case, case.topology(), TOL)
    pmax = np.array([ln.p_max for ln in case.lines])
    assert np.any(np.abs(sol.P[0]) >= pmax - 1e-6)
