"""Network data model and case-file reader/writer.

All quantities are per-unit on a single common base. Case files are JSON
documents; ``parse_case`` and ``serialize_case`` are the only reader/writer
pair used anywhere in the package.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Any

DEFAULT_W0 = 0.001
V_RATE = 1.0


class CaseError(ValueError):
    """Base class for problems with a case document or instance."""


class CaseParseError(CaseError):
    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


class CaseReferenceError(CaseError):
    def __init__(self, field_name: str, bus: int):
        self.field = field_name
        self.bus = bus
        super().__init__(f"{field_name}: unknown bus {bus}")


@dataclass(frozen=True)
class Bus:
    """A bus with (possibly time-varying) demand.

    ``p_load``/``q_load`` hold one value per period, or a single value that
    is broadcast to every period.
    """

    id: int
    p_load: tuple[float, ...] = (0.0,)
    q_load: tuple[float, ...] = (0.0,)
    weight: float = 1.0
    is_load: bool = False

    def p_at(self, t: int) -> float:
        return self.p_load[t] if len(self.p_load) > 1 else self.p_load[0]

    def q_at(self, t: int) -> float:
        return self.q_load[t] if len(self.q_load) > 1 else self.q_load[0]


@dataclass(frozen=True)
class Line:
    id: int
    from_bus: int
    to_bus: int
    resistance: float
    p_max: float
    switchable: bool = True


@dataclass(frozen=True)
class Source:
    bus: int
    p_max: float
    q_max: float
    energy_budget: float | None = None


@dataclass(frozen=True)
class Storage:
    """Energy storage; discharging is positive ``p_gen``.

    ``rho`` is applied exactly as given: SOC after t periods is
    ``soc_init + rho * T_int * cumulative p_gen``, so a negative value makes
    discharge deplete the state of charge. ``p_min`` < 0 permits charging.
    """

    bus: int
    soc_init: float
    soc_min: float
    soc_max: float
    rho: float
    p_max: float
    q_max: float
    p_min: float = 0.0


@dataclass(frozen=True)
class PeriodSpec:
    n_periods: int = 1
    interval_hours: float = 1.0


@dataclass(frozen=True)
class NetworkCase:
    buses: tuple[Bus, ...]
    lines: tuple[Line, ...]
    sources: tuple[Source, ...]
    storages: tuple[Storage, ...] = ()
    periods: PeriodSpec = field(default_factory=PeriodSpec)
    w0: float = DEFAULT_W0
    v_rate: float = V_RATE
    name: str = ""
    base_mva: float | None = None

    @cached_property
    def bus_index(self) -> dict[int, int]:
        """Map bus id to its position in ``buses``."""
        return {b.id: k for k, b in enumerate(self.buses)}

    @cached_property
    def line_by_id(self) -> dict[int, Line]:
        return {ln.id: ln for ln in self.lines}

    @property
    def n_buses(self) -> int:
        return len(self.buses)

    @property
    def n_periods(self) -> int:
        return self.periods.n_periods

    @property
    def load_buses(self) -> list[Bus]:
        return [b for b in self.buses if b.is_load]

    @property
    def is_multi_period(self) -> bool:
        """True when the multi-period model is required.

        That is the case for more than one period, or whenever energy budgets
        or storage state-of-charge limits are present.
        """
        return (
            self.periods.n_periods > 1
            or bool(self.storages)
            or any(s.energy_budget is not None for s in self.sources)
        )

    def topology(self, line_ids=None):
        """Topology over this case's buses with the given lines closed (all by default)."""
        from .graphcore import Topology

        if line_ids is None:
            chosen = self.lines
        else:
            wanted = set(line_ids)
            unknown = wanted - self.line_by_id.keys()
            if unknown:
                raise ValueError(f"unknown line ids {sorted(unknown)}")
            chosen = [ln for ln in self.lines if ln.id in wanted]
        idx = self.bus_index
        return Topology(
            self.n_buses,
            tuple(sorted((ln.id, idx[ln.from_bus], idx[ln.to_bus]) for ln in chosen)),
        )


# ---------------------------------------------------------------------------
# reading

def _req(obj: dict, key: str, where: str) -> Any:
    if not isinstance(obj, dict):
        raise CaseParseError(where, "expected an object")
    if key not in obj:
        raise CaseParseError(f"{where}.{key}", "missing required field")
    return obj[key]


def _num(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise CaseParseError(where, f"expected a number, got {value!r}")
    if not math.isfinite(value):
        raise CaseParseError(where, "must be finite")
    return float(value)


def _int(value: Any, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise CaseParseError(where, f"expected an integer, got {value!r}")
    return value


def _series(value: Any, where: str, n_periods: int) -> tuple[float, ...]:
    if isinstance(value, list):
        if len(value) not in (1, n_periods):
            raise CaseParseError(where, f"expected 1 or {n_periods} values, got {len(value)}")
        return tuple(_num(v, f"{where}[{k}]") for k, v in enumerate(value))
    return (_num(value, where),)


def case_from_dict(doc: dict) -> NetworkCase:
    if not isinstance(doc, dict):
        raise CaseParseError("<root>", "expected an object")

    meta = doc.get("meta", {}) or {}
    if not isinstance(meta, dict):
        raise CaseParseError("meta", "expected an object")
    name = str(meta.get("name", ""))
    base_mva = meta.get("base_mva")
    if base_mva is not None:
        base_mva = _num(base_mva, "meta.base_mva")

    w0 = _num(doc.get("w0", DEFAULT_W0), "w0")

    per = doc.get("periods", {}) or {}
    if not isinstance(per, dict):
        raise CaseParseError("periods", "expected an object")
    periods = PeriodSpec(
        n_periods=_int(per.get("n", 1), "periods.n"),
        interval_hours=_num(per.get("interval_hours", 1.0), "periods.interval_hours"),
    )
    if periods.n_periods < 1:
        raise CaseParseError("periods.n", "must be >= 1")
    if periods.interval_hours <= 0:
        raise CaseParseError("periods.interval_hours", "must be > 0")
    T = periods.n_periods

    raw_buses = _req(doc, "buses", "<root>")
    if not isinstance(raw_buses, list) or not raw_buses:
        raise CaseParseError("buses", "expected a non-empty array")
    buses = []
    for k, rb in enumerate(raw_buses):
        where = f"buses[{k}]"
        bid = _int(_req(rb, "id", where), f"{where}.id")
        p = _series(rb.get("p_load", 0.0), f"{where}.p_load", T)
        q = _series(rb.get("q_load", 0.0), f"{where}.q_load", T)
        is_load = rb.get("is_load")
        if is_load is None:
            is_load = any(v > 0 for v in p + q)
        elif not isinstance(is_load, bool):
            raise CaseParseError(f"{where}.is_load", "expected a boolean")
        buses.append(Bus(bid, p, q, _num(rb.get("weight", 1.0), f"{where}.weight"), is_load))
    ids = [b.id for b in buses]
    if len(set(ids)) != len(ids):
        raise CaseParseError("buses", "duplicate bus id")
    known = set(ids)

    def bus_ref(value, where):
        bid = _int(value, where)
        if bid not in known:
            raise CaseReferenceError(where, bid)
        return bid

    raw_lines = _req(doc, "lines", "<root>")
    if not isinstance(raw_lines, list):
        raise CaseParseError("lines", "expected an array")
    lines = []
    for k, rl in enumerate(raw_lines):
        where = f"lines[{k}]"
        sw = rl.get("switchable", True)
        if not isinstance(sw, bool):
            raise CaseParseError(f"{where}.switchable", "expected a boolean")
        lines.append(Line(
            id=_int(_req(rl, "id", where), f"{where}.id"),
            from_bus=bus_ref(_req(rl, "from", where), f"{where}.from"),
            to_bus=bus_ref(_req(rl, "to", where), f"{where}.to"),
            resistance=_num(_req(rl, "r", where), f"{where}.r"),
            p_max=_num(_req(rl, "p_max", where), f"{where}.p_max"),
            switchable=sw,
        ))
    if len({ln.id for ln in lines}) != len(lines):
        raise CaseParseError("lines", "duplicate line id")

    raw_sources = doc.get("sources", [])
    if not isinstance(raw_sources, list):
        raise CaseParseError("sources", "expected an array")
    sources = []
    for k, rs in enumerate(raw_sources):
        where = f"sources[{k}]"
        budget = rs.get("energy_budget") if isinstance(rs, dict) else None
        sources.append(Source(
            bus=bus_ref(_req(rs, "bus", where), f"{where}.bus"),
            p_max=_num(_req(rs, "p_max", where), f"{where}.p_max"),
            q_max=_num(_req(rs, "q_max", where), f"{where}.q_max"),
            energy_budget=None if budget is None else _num(budget, f"{where}.energy_budget"),
        ))

    raw_storages = doc.get("storages", [])
    if not isinstance(raw_storages, list):
        raise CaseParseError("storages", "expected an array")
    storages = []
    for k, rs in enumerate(raw_storages):
        where = f"storages[{k}]"
        storages.append(Storage(
            bus=bus_ref(_req(rs, "bus", where), f"{where}.bus"),
            soc_init=_num(_req(rs, "soc_init", where), f"{where}.soc_init"),
            soc_min=_num(_req(rs, "soc_min", where), f"{where}.soc_min"),
            soc_max=_num(_req(rs, "soc_max", where), f"{where}.soc_max"),
            rho=_num(_req(rs, "rho", where), f"{where}.rho"),
            p_max=_num(_req(rs, "p_max", where), f"{where}.p_max"),
            q_max=_num(_req(rs, "q_max", where), f"{where}.q_max"),
            p_min=_num(rs.get("p_min", 0.0), f"{where}.p_min"),
        ))

    return NetworkCase(
        buses=tuple(buses),
        lines=tuple(lines),
        sources=tuple(sources),
        storages=tuple(storages),
        periods=periods,
        w0=w0,
        v_rate=V_RATE,
        name=name,
        base_mva=base_mva,
    )


def parse_case(text: str) -> NetworkCase:
    """Parse a JSON case document into a :class:`NetworkCase`.

    Raises:
        CaseParseError: malformed JSON or a field violating the schema.
        CaseReferenceError: a line/source/storage names a bus that does not exist.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CaseParseError("<document>", f"invalid JSON ({exc.msg} at line {exc.lineno})") from None
    return case_from_dict(doc)


def load_case(path) -> NetworkCase:
    with open(path, encoding="utf-8") as fh:
        return parse_case(fh.read())


# ---------------------------------------------------------------------------
# writing

def _series_out(values: tuple[float, ...]):
    return values[0] if len(values) == 1 else list(values)


def case_to_dict(case: NetworkCase) -> dict:
    meta: dict[str, Any] = {"name": case.name}
    if case.base_mva is not None:
        meta["base_mva"] = case.base_mva
    sources = []
    for s in case.sources:
        d = {"bus": s.bus, "p_max": s.p_max, "q_max": s.q_max}
        if s.energy_budget is not None:
            d["energy_budget"] = s.energy_budget
        sources.append(d)
    return {
        "meta": meta,
        "w0": case.w0,
        "periods": {"n": case.periods.n_periods, "interval_hours": case.periods.interval_hours},
        "buses": [
            {
                "id": b.id,
                "p_load": _series_out(b.p_load),
                "q_load": _series_out(b.q_load),
                "weight": b.weight,
                "is_load": b.is_load,
            }
            for b in case.buses
        ],
        "lines": [
            {
                "id": ln.id,
                "from": ln.from_bus,
                "to": ln.to_bus,
                "r": ln.resistance,
                "p_max": ln.p_max,
                **({} if ln.switchable else {"switchable": False}),
            }
            for ln in case.lines
        ],
        "sources": sources,
        "storages": [
            {
                "bus": s.bus,
                "soc_init": s.soc_init,
                "soc_min": s.soc_min,
                "soc_max": s.soc_max,
                "rho": s.rho,
                "p_max": s.p_max,
                "q_max": s.q_max,
                **({"p_min": s.p_min} if s.p_min != 0.0 else {}),
            }
            for s in case.storages
        ],
    }


def serialize_case(case: NetworkCase) -> str:
    return json.dumps(case_to_dict(case), indent=2) + "\n"


def save_case(case: NetworkCase, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_case(case))


# ---------------------------------------------------------------------------
# validation

def validate(case: NetworkCase) -> list[str]:
    """Return human-readable invariant violations; empty means the case is usable."""
    from .graphcore import is_connected

    out = []
    T = case.periods.n_periods
    if T < 1:
        out.append("periods: n_periods must be >= 1")
    if case.periods.interval_hours <= 0:
        out.append("periods: interval_hours must be > 0")
    if case.w0 < 0:
        out.append("w0 must be >= 0")

    ids = [b.id for b in case.buses]
    if len(set(ids)) != len(ids):
        out.append("buses: duplicate bus id")
    for b in case.buses:
        if b.id < 0:
            out.append(f"bus {b.id}: id must be >= 0")
        if b.weight < 0:
            out.append(f"bus {b.id}: weight w_i must be >= 0")
        for name, arr in (("p_load", b.p_load), ("q_load", b.q_load)):
            if len(arr) not in (1, T):
                out.append(f"bus {b.id}: {name} must have 1 or {T} values")
        if any(v < 0 for v in b.p_load):
            out.append(f"bus {b.id}: p_load must be >= 0")

    known = set(ids)
    seen = set()
    for ln in case.lines:
        if ln.id in seen:
            out.append(f"line {ln.id}: duplicate line id")
        seen.add(ln.id)
        if ln.from_bus not in known or ln.to_bus not in known:
            out.append(f"line {ln.id}: endpoint references unknown bus")
        if ln.from_bus == ln.to_bus:
            out.append(f"line {ln.id}: from_bus must differ from to_bus")
        if not ln.resistance > 0:
            out.append(f"line {ln.id}: resistance R_ij must be > 0")
        if not ln.p_max > 0:
            out.append(f"line {ln.id}: thermal limit P_ij,max must be > 0")

    if not case.sources:
        out.append("case: at least one source is required")
    for k, s in enumerate(case.sources):
        if s.bus not in known:
            out.append(f"source {k}: unknown bus {s.bus}")
        if s.p_max < 0 or s.q_max < 0:
            out.append(f"source {k} at bus {s.bus}: capacities must be >= 0")
        if s.energy_budget is not None and s.energy_budget < 0:
            out.append(f"source {k} at bus {s.bus}: energy_budget must be >= 0")
    for k, s in enumerate(case.storages):
        if s.bus not in known:
            out.append(f"storage {k}: unknown bus {s.bus}")
        if not s.soc_min <= s.soc_init <= s.soc_max:
            out.append(f"storage {k} at bus {s.bus}: need soc_min <= soc_init <= soc_max")
        if s.rho == 0:
            out.append(f"storage {k} at bus {s.bus}: rho must be nonzero")
        if s.p_max < 0 or s.q_max < 0:
            out.append(f"storage {k} at bus {s.bus}: capacities must be >= 0")
        if s.p_min > s.p_max:
            out.append(f"storage {k} at bus {s.bus}: p_min must not exceed p_max")

    endpoints_ok = all(ln.from_bus in known and ln.to_bus in known for ln in case.lines)
    if endpoints_ok and len(set(ids)) == len(ids) and not is_connected(case.topology()):
        out.append("case: network with all lines closed is not connected")
    return out


def with_sources(case: NetworkCase, sources) -> NetworkCase:
    return replace(case, sources=tuple(sources))


def with_buses(case: NetworkCase, buses) -> NetworkCase:
    return replace(case, buses=tuple(buses))
