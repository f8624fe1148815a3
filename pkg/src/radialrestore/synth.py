"""Seeded synthetic distribution networks.

Feeder-like trees (each new bus hangs off one of the few most recent buses)
plus tie lines between non-adjacent buses. Used for the shipped fixtures and
for randomized testing; none of these are replicas of published test systems.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .netmodel import Bus, Line, NetworkCase, PeriodSpec, Source, Storage


@dataclass
class SynthParams:
    n_buses: int
    n_ties: int
    n_sources: int = 1
    load_range: tuple[float, float] = (0.02, 0.15)
    pf_q_range: tuple[float, float] = (0.3, 0.6)
    r_range: tuple[float, float] = (0.005, 0.03)
    thermal_range: tuple[float, float] = (0.8, 1.5)
    capacity_ratio: float = 0.7
    weight_levels: tuple[float, float, float] = (100.0, 10.0, 1.0)
    weight_probs: tuple[float, float, float] = (0.15, 0.25, 0.60)
    reach: int = 4
    n_loads: int | None = None
    name: str = "synthetic"


def _tree_edges(rng, n: int, reach: int) -> list[tuple[int, int]]:
    edges = []
    for k in range(1, n):
        parent = int(rng.integers(max(0, k - reach), k))
        edges.append((parent, k))
    return edges


def _tie_edges(rng, n: int, existing, n_ties: int) -> list[tuple[int, int]]:
    taken = {frozenset(e) for e in existing}
    ties = []
    candidates = [(a, b) for a in range(n) for b in range(a + 1, n) if frozenset((a, b)) not in taken]
    if n_ties > len(candidates):
        raise ValueError(f"cannot add {n_ties} tie lines to {n} buses")
    for k in rng.choice(len(candidates), size=n_ties, replace=False):
        ties.append(candidates[int(k)])
    return ties


def random_case(rng: np.random.Generator, p: SynthParams) -> NetworkCase:
    """A connected case with ``n_buses - 1 + n_ties`` lines, bus ids from 1."""
    n = p.n_buses
    tree = _tree_edges(rng, n, p.reach)
    ties = _tie_edges(rng, n, tree, p.n_ties)
    src_pos = sorted(int(k) for k in rng.choice(n, size=p.n_sources, replace=False))

    others = [k for k in range(n) if k not in src_pos]
    if p.n_loads is None:
        load_pos = set(others)
    else:
        load_pos = {int(k) for k in rng.choice(others, size=p.n_loads, replace=False)}

    buses = []
    total_p = total_q = 0.0
    for k in range(n):
        if k not in load_pos:
            buses.append(Bus(id=k + 1))
            continue
        pl = float(rng.uniform(*p.load_range))
        ql = pl * float(rng.uniform(*p.pf_q_range))
        w = float(rng.choice(p.weight_levels, p=p.weight_probs))
        buses.append(Bus(id=k + 1, p_load=(round(pl, 4),), q_load=(round(ql, 4),), weight=w, is_load=True))
        total_p += round(pl, 4)
        total_q += round(ql, 4)

    lines = []
    for lid, (a, b) in enumerate(tree + ties, start=1):
        lines.append(Line(
            id=lid,
            from_bus=a + 1,
            to_bus=b + 1,
            resistance=round(float(rng.uniform(*p.r_range)), 5),
            p_max=round(float(rng.uniform(*p.thermal_range)), 3),
        ))

    shares = rng.dirichlet(np.full(p.n_sources, 4.0))
    sources = [
        Source(
            bus=pos + 1,
            p_max=round(float(p.capacity_ratio * total_p * s), 4),
            q_max=round(float(p.capacity_ratio * total_q * s + 0.05), 4),
        )
        for pos, s in zip(src_pos, shares)
    ]
    return NetworkCase(buses=tuple(buses), lines=tuple(lines), sources=tuple(sources), name=p.name)


def with_periods(
    rng: np.random.Generator,
    case: NetworkCase,
    n_periods: int,
    interval_hours: float = 1.0,
    n_storages: int = 1,
    budget_hours: float = 0.6,
) -> NetworkCase:
    """Turn a single-period case into a multi-period one.

    Demand follows a random daily-shaped profile, every source gets an energy
    budget covering ``budget_hours`` of the horizon at full output, and
    storages are placed at random non-source buses.
    """
    shape = 0.8 + 0.4 * np.sin(np.linspace(0, np.pi, n_periods)) * rng.uniform(0.7, 1.0)
    buses = []
    for b in case.buses:
        if b.is_load:
            prof = tuple(round(b.p_load[0] * float(s), 4) for s in shape)
            qprof = tuple(round(b.q_load[0] * float(s), 4) for s in shape)
            buses.append(Bus(b.id, prof, qprof, b.weight, True))
        else:
            buses.append(b)
    horizon = n_periods * interval_hours
    sources = tuple(
        Source(s.bus, s.p_max, s.q_max, energy_budget=round(s.p_max * horizon * budget_hours, 4))
        for s in case.sources
    )
    src_buses = {s.bus for s in case.sources}
    free = [b.id for b in case.buses if b.id not in src_buses]
    storages = []
    for bid in sorted(int(x) for x in rng.choice(free, size=n_storages, replace=False)):
        cap = round(float(rng.uniform(0.1, 0.3)), 3)
        storages.append(Storage(
            bus=bid, soc_init=0.9, soc_min=0.1, soc_max=1.0,
            rho=-round(1.0 / (cap * horizon * 0.5), 4), p_max=cap, q_max=round(cap * 0.5, 3),
        ))
    return NetworkCase(
        buses=tuple(buses),
        lines=case.lines,
        sources=sources,
        storages=tuple(storages),
        periods=PeriodSpec(n_periods, interval_hours),
        w0=case.w0,
        name=case.name,
    )


def suite_case(seed: int, bus_range=(8, 40), tie_range=(0, 8), max_sources: int = 3) -> NetworkCase:
    """One member of the seeded randomized test population."""
    rng = np.random.default_rng([7919, seed])
    n = int(rng.integers(bus_range[0], bus_range[1] + 1))
    ties = int(rng.integers(tie_range[0], tie_range[1] + 1))
    n_src = int(rng.integers(1, max_sources + 1))
    thermal = (0.3, 1.2) if rng.random() < 0.3 else (0.8, 1.5)
    return random_case(rng, SynthParams(
        n_buses=n, n_ties=ties, n_sources=n_src, thermal_range=thermal,
        capacity_ratio=float(rng.uniform(0.5, 1.2)), name=f"suite{seed}",
    ))
