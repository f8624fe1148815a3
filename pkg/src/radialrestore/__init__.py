"""Radial topology determination for distribution system restoration."""

from importlib import resources

from .bench import BenchReport, ScenarioSpec, generate_scenarios, run_benchmark, sigma
from .graphcore import (
    ConnectivityError,
    EnumerationLimitError,
    Topology,
    enumerate_spanning_trees,
    is_radial,
    loop_lines,
    max_spanning_tree,
    mesh_count,
)
from .heuristics import (
    HeuristicFailure,
    OracleLimitError,
    brute_force_oracle,
    iterative_heuristic,
    mst_baseline,
    select_cut,
)
from .netmodel import NetworkCase, load_case, parse_case, serialize_case, validate
from .qpsolve import QPSolution, QuadraticProgram, solve_qp
from .resmodel import DispatchSolution, build_clr_mesh, build_mpclr_mesh, evaluate

__version__ = "0.1.0"

__all__ = [
    "BenchReport", "ScenarioSpec", "generate_scenarios", "run_benchmark", "sigma",
    "ConnectivityError", "EnumerationLimitError", "Topology", "enumerate_spanning_trees",
    "is_radial", "loop_lines", "max_spanning_tree", "mesh_count",
    "HeuristicFailure", "OracleLimitError", "brute_force_oracle", "iterative_heuristic",
    "mst_baseline", "select_cut",
    "NetworkCase", "load_case", "parse_case", "serialize_case", "validate",
    "QPSolution", "QuadraticProgram", "solve_qp",
    "DispatchSolution", "build_clr_mesh", "build_mpclr_mesh", "evaluate",
    "fixture_path", "load_fixture",
]


def fixture_path(name: str):
    """Path of a shipped case file, e.g. ``fixture_path("ring4")``."""
    if not name.endswith(".json"):
        name += ".json"
    return resources.files(__name__) / "cases" / name


def load_fixture(name: str) -> NetworkCase:
    return load_case(fixture_path(name))
