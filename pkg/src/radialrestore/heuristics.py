"""Radial-topology heuristics and the exhaustive radial oracle.

``iterative_heuristic`` repeatedly solves the meshed restoration model and
opens the loop line carrying the least active power until no loop is left.
``mst_baseline`` solves once and keeps a maximum spanning tree weighted by
``|P|``. ``brute_force_oracle`` evaluates every spanning tree.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping

from .graphcore import (
    ConnectivityError,
    EnumerationLimitError,
    Topology,
    is_connected,
    is_radial,
    iter_spanning_trees,
    loop_lines,
    max_spanning_tree,
    mesh_count,
)
from .netmodel import NetworkCase
from .qpsolve import DEFAULT_TOL
from .resmodel import DispatchSolution, evaluate

logger = logging.getLogger(__name__)

DEFAULT_TREE_LIMIT = 200_000


class HeuristicFailure(RuntimeError):
    def __init__(self, message: str, trace=None, status: str = ""):
        self.trace = trace if trace is not None else []
        self.status = status
        super().__init__(message)


class OracleLimitError(EnumerationLimitError):
    def __init__(self, limit: int, partial: "OracleResult"):
        super().__init__(limit, partial.trees_evaluated)
        self.partial = partial


@dataclass
class IHStep:
    """One iteration of the iterative heuristic."""

    n_closed: int
    meshes_left: int
    n_loop_lines: int
    cut_line: int
    cut_flow: float
    solve_ms: float
    graph_ms: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class IHResult:
    topology: Topology
    cut_lines: list[int]
    trace: list[IHStep]

    def __iter__(self):
        # unpacks as (topology, cut set, trace)
        return iter((self.topology, self.cut_lines, self.trace))


@dataclass
class OracleResult:
    best_topology: Topology | None
    best_objective: float
    trees_evaluated: int
    best_index: int = -1
    objectives: list[float] = field(default_factory=list)
    best_dispatch: DispatchSolution | None = None

    def to_dict(self, case: NetworkCase | None = None) -> dict:
        out = {
            "best_objective": self.best_objective,
            "trees_evaluated": self.trees_evaluated,
            "best_index": self.best_index,
            "closed_lines": list(self.best_topology.line_ids) if self.best_topology else None,
            "objectives": list(self.objectives),
        }
        if case is not None and self.best_topology is not None:
            closed = set(self.best_topology.line_ids)
            out["cut_lines"] = [ln.id for ln in case.lines if ln.id not in closed]
        return out


def select_cut(loop: set[int], flows: Mapping[int, float]) -> int:
    """Loop line with the smallest ``|P|``; the lowest id breaks ties."""
    if not loop:
        raise ValueError("loop set is empty")
    missing = [lid for lid in loop if lid not in flows]
    if missing:
        raise ValueError(f"no flow for lines {sorted(missing)}")
    return min(loop, key=lambda lid: (abs(flows[lid]), lid))


def _fixed_lines(case: NetworkCase) -> set[int]:
    return {ln.id for ln in case.lines if not ln.switchable}


def iterative_heuristic(case: NetworkCase, tol: float = DEFAULT_TOL) -> IHResult:
    """Open one loop line per iteration until the topology is radial.

    Each iteration solves the meshed model on the current closed set and
    cuts, among the switchable loop lines, the one with the least active
    power (summed over periods for multi-period cases).

    Raises:
        ConnectivityError: the all-closed network is disconnected.
        HeuristicFailure: a solve did not reach optimality, or a loop has
            no switchable line; carries the trace so far.
    """
    topo = case.topology()
    n_loops = mesh_count(topo)
    fixed = _fixed_lines(case)
    cuts: list[int] = []
    trace: list[IHStep] = []
    while n_loops >= 1:
        sol = evaluate(case, topo, tol)
        if not sol.ok:
            raise HeuristicFailure(
                f"restoration model {sol.status} with {topo.n_lines} closed lines",
                trace, sol.status,
            )
        g0 = time.perf_counter()
        loops = loop_lines(topo)
        candidates = loops - fixed
        if not candidates:
            raise HeuristicFailure("no switchable line left on any loop", trace)
        flows = sol.abs_flow()
        cut = select_cut(candidates, flows)
        topo = topo.without(cut)
        cuts.append(cut)
        n_loops -= 1
        g1 = time.perf_counter()
        trace.append(IHStep(
            n_closed=topo.n_lines + 1,
            meshes_left=n_loops,
            n_loop_lines=len(loops),
            cut_line=cut,
            cut_flow=flows[cut],
            solve_ms=sol.build_ms + sol.solve_ms,
            graph_ms=(g1 - g0) * 1e3,
        ))
        logger.debug("cut line %d (|P|=%.6g), %d loops left", cut, flows[cut], n_loops)
    return IHResult(topo, cuts, trace)


def mst_baseline(case: NetworkCase, tol: float = DEFAULT_TOL) -> Topology:
    """Maximum spanning tree weighted by the meshed solution's ``|P|``."""
    topo = case.topology()
    if mesh_count(topo) == 0:
        return topo
    sol = evaluate(case, topo, tol)
    if not sol.ok:
        raise HeuristicFailure(f"restoration model {sol.status}", status=sol.status)
    weights = sol.abs_flow()
    for lid in _fixed_lines(case):
        weights[lid] = float("inf")
    return max_spanning_tree(topo, weights)


def _score(args) -> tuple[str, float, DispatchSolution]:
    case, tree, tol = args
    sol = evaluate(case, tree, tol)
    return sol.status, sol.f, sol


def brute_force_oracle(
    case: NetworkCase,
    tol: float = DEFAULT_TOL,
    limit: int = DEFAULT_TREE_LIMIT,
    jobs: int = 1,
    keep_objectives: bool = False,
) -> OracleResult:
    """Best radial topology by exhaustive enumeration of spanning trees.

    Trees that fail to solve are skipped. Ties keep the first tree in
    enumeration order, also when ``jobs > 1``.

    Raises:
        OracleLimitError: more than ``limit`` trees; carries the best so far.
    """
    if limit <= 0:
        raise ValueError("limit must be positive")
    topo = case.topology()
    if not is_connected(topo):
        raise ConnectivityError("topology is not connected")
    result = OracleResult(None, float("-inf"), 0)

    def consider(idx, tree, status, f, sol):
        result.trees_evaluated += 1
        if keep_objectives:
            result.objectives.append(f if status == "optimal" else float("nan"))
        if status == "optimal" and f > result.best_objective:
            result.best_objective = f
            result.best_topology = tree
            result.best_index = idx
            result.best_dispatch = sol

    trees = iter_spanning_trees(topo, _fixed_lines(case))
    overflow = False
    if jobs <= 1:
        for idx, tree in enumerate(trees):
            if idx == limit:
                overflow = True
                break
            consider(idx, tree, *_score((case, tree, tol)))
    else:
        batch = []
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for idx, tree in enumerate(trees):
                if idx == limit:
                    overflow = True
                    break
                batch.append(tree)
            # map preserves submission order, so the reduction is deterministic
            for idx, (tree, scored) in enumerate(
                zip(batch, pool.map(_score, [(case, t, tol) for t in batch], chunksize=8))
            ):
                consider(idx, tree, *scored)
    if overflow:
        raise OracleLimitError(limit, result)
    assert result.best_topology is None or is_radial(result.best_topology)
    return result
