"""Restoration models for a fixed (possibly meshed) topology.

Single-period model, maximized::

    f = sum_i w_i gamma_i - w0 * sum_ij R_ij (P_ij^2 + Q_ij^2) / V_rate^2

subject to lossless active/reactive balance at every bus, source capacity
limits and ``|P_ij| <= P_ij,max``. The multi-period model replicates this per
period and adds cumulative energy-budget and state-of-charge rows. Both are
built as minimization problems (objective negated) for :func:`solve_qp`.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .graphcore import Topology
from .netmodel import NetworkCase
from .qpsolve import DEFAULT_TOL, OPTIMAL, QPSolution, QuadraticProgram, solve_qp


@dataclass(frozen=True)
class Unit:
    """A generating unit: a source or a storage."""

    kind: str
    index: int
    bus: int
    p_min: float
    p_max: float
    q_max: float


def generating_units(case: NetworkCase) -> list[Unit]:
    units = [Unit("source", k, s.bus, 0.0, s.p_max, s.q_max) for k, s in enumerate(case.sources)]
    units += [Unit("storage", k, s.bus, s.p_min, s.p_max, s.q_max) for k, s in enumerate(case.storages)]
    return units


@dataclass
class ModelLayout:
    """Column positions of every model variable.

    Per period the block is ``[P (lines), Q (lines), p_gen (units),
    q_gen (units), gamma (loads)]``.
    """

    line_ids: list[int]
    units: list[Unit]
    load_buses: list[int]
    n_periods: int
    multi_period: bool

    @property
    def n_lines(self) -> int:
        return len(self.line_ids)

    @property
    def block(self) -> int:
        return 2 * self.n_lines + 2 * len(self.units) + len(self.load_buses)

    @property
    def n_vars(self) -> int:
        return self.block * self.n_periods

    def P(self, t: int) -> slice:
        o = t * self.block
        return slice(o, o + self.n_lines)

    def Q(self, t: int) -> slice:
        o = t * self.block + self.n_lines
        return slice(o, o + self.n_lines)

    def pg(self, t: int) -> slice:
        o = t * self.block + 2 * self.n_lines
        return slice(o, o + len(self.units))

    def qg(self, t: int) -> slice:
        o = t * self.block + 2 * self.n_lines + len(self.units)
        return slice(o, o + len(self.units))

    def gamma(self, t: int) -> slice:
        o = t * self.block + 2 * self.n_lines + 2 * len(self.units)
        return slice(o, o + len(self.load_buses))


def _check_topology(case: NetworkCase, topo: Topology) -> None:
    if topo.n_buses != case.n_buses:
        raise ValueError(f"topology has {topo.n_buses} buses, case has {case.n_buses}")
    idx = case.bus_index
    for lid, u, v in topo.lines:
        line = case.line_by_id.get(lid)
        if line is None:
            raise ValueError(f"topology references unknown line {lid}")
        if {u, v} != {idx[line.from_bus], idx[line.to_bus]}:
            raise ValueError(f"line {lid} endpoints disagree with the case")


def _build(case: NetworkCase, topo: Topology, n_periods: int, multi_period: bool):
    _check_topology(case, topo)
    bidx = case.bus_index
    lines = [case.line_by_id[lid] for lid in topo.line_ids]
    units = generating_units(case)
    loads = [k for k, b in enumerate(case.buses) if b.is_load]
    lay = ModelLayout(list(topo.line_ids), units, loads, n_periods, multi_period)
    nL, nU, nB = len(lines), len(units), case.n_buses
    N = lay.n_vars

    r = np.array([ln.resistance for ln in lines])
    loss = 2.0 * case.w0 * r / case.v_rate ** 2
    hdiag = np.zeros(N)
    c = np.zeros(N)
    lb = np.zeros(N)
    ub = np.zeros(N)

    eq_r, eq_c, eq_v = [], [], []
    ub_r, ub_c, ub_v, ub_b = [], [], [], []

    frm = np.array([bidx[ln.from_bus] for ln in lines], dtype=int)
    to = np.array([bidx[ln.to_bus] for ln in lines], dtype=int)
    pmax = np.array([ln.p_max for ln in lines])
    unit_bus = np.array([bidx[u.bus] for u in units], dtype=int)
    weights = np.array([case.buses[k].weight for k in loads])
    load_pos = np.array(loads, dtype=int)
    n_ub = 0

    for t in range(n_periods):
        P, Q, pg, qg, gm = lay.P(t), lay.Q(t), lay.pg(t), lay.qg(t), lay.gamma(t)
        hdiag[P] = loss
        hdiag[Q] = loss
        c[gm] = -weights
        lb[P], ub[P] = -np.inf, np.inf
        lb[Q], ub[Q] = -np.inf, np.inf
        lb[pg] = [u.p_min for u in units]
        ub[pg] = [u.p_max for u in units]
        lb[qg], ub[qg] = 0.0, [u.q_max for u in units]
        lb[gm], ub[gm] = 0.0, 1.0

        p_dem = np.array([case.buses[k].p_at(t) for k in loads])
        q_dem = np.array([case.buses[k].q_at(t) for k in loads])
        # active rows 2*nB*t + bus, reactive rows 2*nB*t + nB + bus
        for kind, flow, gen, dem in ((0, P, pg, p_dem), (1, Q, qg, q_dem)):
            row0 = 2 * nB * t + kind * nB
            cols = np.arange(flow.start, flow.stop)
            # flow i->j leaves i (-1) and enters j (+1)
            eq_r += [row0 + frm, row0 + to]
            eq_c += [cols, cols]
            eq_v += [-np.ones(nL), np.ones(nL)]
            eq_r.append(row0 + unit_bus)
            eq_c.append(np.arange(gen.start, gen.stop))
            eq_v.append(np.ones(nU))
            eq_r.append(row0 + load_pos)
            eq_c.append(np.arange(gm.start, gm.stop))
            eq_v.append(-dem)

        # |P| <= P_max as two rows
        cols = np.arange(P.start, P.stop)
        rows = n_ub + np.arange(nL)
        ub_r += [rows, rows + nL]
        ub_c += [cols, cols]
        ub_v += [np.ones(nL), -np.ones(nL)]
        ub_b += [pmax, pmax]
        n_ub += 2 * nL

    if multi_period:
        dt = case.periods.interval_hours
        for k, u in enumerate(units):
            if u.kind == "source":
                budget = case.sources[u.index].energy_budget
                if budget is None:
                    continue
                for t in range(n_periods):
                    cols = np.array([lay.pg(tau).start + k for tau in range(t + 1)])
                    ub_r.append(np.full(t + 1, n_ub))
                    ub_c.append(cols)
                    ub_v.append(np.full(t + 1, dt))
                    ub_b.append(np.array([budget]))
                    n_ub += 1
            else:
                st = case.storages[u.index]
                for t in range(n_periods):
                    cols = np.array([lay.pg(tau).start + k for tau in range(t + 1)])
                    coef = st.rho * dt
                    # soc_init + rho*dt*sum <= soc_max ; -(...) <= -soc_min
                    ub_r += [np.full(t + 1, n_ub), np.full(t + 1, n_ub + 1)]
                    ub_c += [cols, cols]
                    ub_v += [np.full(t + 1, coef), np.full(t + 1, -coef)]
                    ub_b.append(np.array([st.soc_max - st.soc_init, st.soc_init - st.soc_min]))
                    n_ub += 2

    def cat(parts, dtype=float):
        return np.concatenate(parts).astype(dtype) if parts else np.zeros(0, dtype=dtype)

    A_eq = sp.csr_matrix((cat(eq_v), (cat(eq_r, int), cat(eq_c, int))), shape=(2 * nB * n_periods, N))
    A_ub = sp.csr_matrix((cat(ub_v), (cat(ub_r, int), cat(ub_c, int))), shape=(n_ub, N))
    qp = QuadraticProgram(
        H=sp.diags(hdiag, format="csr"),
        c=c,
        A_eq=A_eq,
        b_eq=np.zeros(2 * nB * n_periods),
        A_ub=A_ub,
        b_ub=cat(ub_b),
        lb=lb,
        ub=ub,
    )
    return qp, lay


def build_clr_mesh(case: NetworkCase, topo: Topology) -> QuadraticProgram:
    """Single-period restoration QP; demand is taken from the first period."""
    return _build(case, topo, 1, multi_period=False)[0]


def build_mpclr_mesh(case: NetworkCase, topo: Topology) -> QuadraticProgram:
    """Multi-period restoration QP with cumulative energy and SOC rows."""
    return _build(case, topo, case.periods.n_periods, multi_period=True)[0]


@dataclass
class DispatchSolution:
    """Unpacked restoration solution.

    Flow arrays have shape ``(n_periods, n_case_lines)`` in case line order,
    zero on open lines. ``f`` carries the maximization sign.
    """

    status: str
    line_ids: list[int]
    closed: list[int]
    P: np.ndarray
    Q: np.ndarray
    unit_buses: list[int]
    unit_kinds: list[str]
    p_gen: np.ndarray
    q_gen: np.ndarray
    load_buses: list[int]
    gamma: np.ndarray
    f: float
    n_load: float
    p_loss: float
    build_ms: float = 0.0
    solve_ms: float = 0.0
    residuals: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL

    def abs_flow(self) -> dict[int, float]:
        """Active-flow magnitude per closed line, summed over periods."""
        pos = {lid: k for k, lid in enumerate(self.line_ids)}
        return {lid: float(np.abs(self.P[:, pos[lid]]).sum()) for lid in self.closed}

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "f": self.f,
            "n_load": self.n_load,
            "p_loss": self.p_loss,
            "closed_lines": list(self.closed),
            "line_ids": list(self.line_ids),
            "P": self.P.tolist(),
            "Q": self.Q.tolist(),
            "units": [{"bus": b, "kind": k} for b, k in zip(self.unit_buses, self.unit_kinds)],
            "p_gen": self.p_gen.tolist(),
            "q_gen": self.q_gen.tolist(),
            "load_buses": list(self.load_buses),
            "gamma": self.gamma.tolist(),
            "build_ms": self.build_ms,
            "solve_ms": self.solve_ms,
            "residuals": dict(self.residuals),
        }


def unpack(case: NetworkCase, lay: ModelLayout, sol: QPSolution) -> DispatchSolution:
    T = lay.n_periods
    all_ids = [ln.id for ln in case.lines]
    pos = {lid: k for k, lid in enumerate(all_ids)}
    cols = np.array([pos[lid] for lid in lay.line_ids], dtype=int)
    P = np.zeros((T, len(all_ids)))
    Q = np.zeros((T, len(all_ids)))
    x = sol.x
    for t in range(T):
        P[t, cols] = x[lay.P(t)]
        Q[t, cols] = x[lay.Q(t)]
    p_gen = np.array([x[lay.pg(t)] for t in range(T)]).reshape(T, len(lay.units))
    q_gen = np.array([x[lay.qg(t)] for t in range(T)]).reshape(T, len(lay.units))
    gamma = np.array([x[lay.gamma(t)] for t in range(T)]).reshape(T, len(lay.load_buses))

    weights = np.array([case.buses[k].weight for k in lay.load_buses])
    r = np.array([ln.resistance for ln in case.lines])
    n_load = float((gamma * weights).sum())
    p_loss = float(((P ** 2 + Q ** 2) * r).sum() / case.v_rate ** 2)
    return DispatchSolution(
        status=sol.status,
        line_ids=all_ids,
        closed=list(lay.line_ids),
        P=P,
        Q=Q,
        unit_buses=[u.bus for u in lay.units],
        unit_kinds=[u.kind for u in lay.units],
        p_gen=p_gen,
        q_gen=q_gen,
        load_buses=[case.buses[k].id for k in lay.load_buses],
        gamma=gamma,
        f=n_load - case.w0 * p_loss,
        n_load=n_load,
        p_loss=p_loss,
        residuals={
            "primal_inf": sol.primal_inf,
            "dual_inf": sol.dual_inf,
            "gap": sol.gap,
            "iterations": sol.iterations,
        },
    )


def evaluate(case: NetworkCase, topo: Topology, tol: float = DEFAULT_TOL) -> DispatchSolution:
    """Build and solve the restoration model for ``topo`` and unpack it.

    The multi-period model is used when the case has several periods, energy
    budgets or storages; otherwise the single-period one. A non-optimal solver
    status is reported on the returned solution, not raised.
    """
    t0 = time.perf_counter()
    multi = case.is_multi_period
    qp, lay = _build(case, topo, case.periods.n_periods if multi else 1, multi)
    t1 = time.perf_counter()
    sol = solve_qp(qp, tol)
    t2 = time.perf_counter()
    out = unpack(case, lay, sol)
    out.build_ms = (t1 - t0) * 1e3
    out.solve_ms = (t2 - t1) * 1e3
    return out
