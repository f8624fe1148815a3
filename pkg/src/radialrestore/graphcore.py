"""Graph algorithms over network topologies.

A :class:`Topology` is the set of closed lines over a fixed bus set. Buses are
addressed by position ``0..n_buses-1``; lines keep their case ids. Wherever a
choice between lines is otherwise arbitrary, the lowest line id wins.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Mapping


class ConnectivityError(ValueError):
    pass


class EnumerationLimitError(RuntimeError):
    def __init__(self, limit: int, partial_count: int):
        self.limit = limit
        self.partial_count = partial_count
        super().__init__(f"more than {limit} spanning trees (stopped after {partial_count})")


@dataclass(frozen=True)
class Topology:
    """Closed lines as ``(line_id, u, v)`` triples, sorted by line id."""

    n_buses: int
    lines: tuple[tuple[int, int, int], ...]

    def __post_init__(self):
        ids = [e[0] for e in self.lines]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate line id in topology")
        for lid, u, v in self.lines:
            if not (0 <= u < self.n_buses and 0 <= v < self.n_buses):
                raise ValueError(f"line {lid} endpoint outside 0..{self.n_buses - 1}")
        if list(ids) != sorted(ids):
            object.__setattr__(self, "lines", tuple(sorted(self.lines)))

    @property
    def line_ids(self) -> tuple[int, ...]:
        return tuple(e[0] for e in self.lines)

    @property
    def n_lines(self) -> int:
        return len(self.lines)

    @cached_property
    def adjacency(self) -> list[list[tuple[int, int]]]:
        """Per bus, the ``(neighbour, line_id)`` pairs in line-id order."""
        adj: list[list[tuple[int, int]]] = [[] for _ in range(self.n_buses)]
        for lid, u, v in self.lines:
            adj[u].append((v, lid))
            adj[v].append((u, lid))
        return adj

    def without(self, line_id: int) -> "Topology":
        if line_id not in self.line_ids:
            raise KeyError(line_id)
        return Topology(self.n_buses, tuple(e for e in self.lines if e[0] != line_id))

    def restricted(self, line_ids) -> "Topology":
        keep = set(line_ids)
        return Topology(self.n_buses, tuple(e for e in self.lines if e[0] in keep))


class _DisjointSet:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, a: int) -> int:
        parent = self.parent
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        return True


def _n_components(n: int, edges) -> int:
    ds = _DisjointSet(n)
    comps = n
    for _, u, v in edges:
        if ds.union(u, v):
            comps -= 1
    return comps


def is_connected(t: Topology) -> bool:
    return t.n_buses <= 1 or _n_components(t.n_buses, t.lines) == 1


def _require_connected(t: Topology) -> None:
    if not is_connected(t):
        raise ConnectivityError("topology is not connected")


def mesh_count(t: Topology) -> int:
    """Number of independent loops, ``|E'| - |N| + 1`` for a single island."""
    _require_connected(t)
    return t.n_lines - t.n_buses + 1


def bridges(t: Topology) -> set[int]:
    """Line ids whose removal disconnects their component.

    One iterative depth-first pass computing discovery times and low-links.
    Parallel lines are told apart by id, so a doubled line is never a bridge.
    """
    n = t.n_buses
    adj = t.adjacency
    disc = [-1] * n
    low = [0] * n
    found: set[int] = set()
    clock = 0
    for root in range(n):
        if disc[root] != -1:
            continue
        disc[root] = low[root] = clock
        clock += 1
        # frame: (vertex, line id used to enter it, next adjacency index)
        stack = [(root, -1, 0)]
        while stack:
            u, via, k = stack[-1]
            if k < len(adj[u]):
                stack[-1] = (u, via, k + 1)
                w, lid = adj[u][k]
                if lid == via:
                    continue
                if disc[w] == -1:
                    disc[w] = low[w] = clock
                    clock += 1
                    stack.append((w, lid, 0))
                elif disc[w] < low[u]:
                    low[u] = disc[w]
            else:
                stack.pop()
                if stack:
                    p = stack[-1][0]
                    if low[u] < low[p]:
                        low[p] = low[u]
                    if low[u] > disc[p]:
                        found.add(via)
    return found


def loop_lines(t: Topology) -> set[int]:
    """Lines lying on at least one cycle, i.e. every non-bridge line."""
    _require_connected(t)
    return set(t.line_ids) - bridges(t)


def is_radial(t: Topology) -> bool:
    return t.n_lines == t.n_buses - 1 and is_connected(t)


def max_spanning_tree(t: Topology, weights: Mapping[int, float]) -> Topology:
    """Kruskal on descending weight.

    Among equal weights the higher line id is taken first, so when a cycle
    must lose one of several equally weighted lines the lowest id is left out.
    """
    _require_connected(t)
    missing = [lid for lid in t.line_ids if lid not in weights]
    if missing:
        raise ValueError(f"no weight for lines {missing}")
    order = sorted(t.lines, key=lambda e: (-weights[e[0]], -e[0]))
    ds = _DisjointSet(t.n_buses)
    kept = [e for e in order if ds.union(e[1], e[2])]
    return Topology(t.n_buses, tuple(sorted(kept)))


def iter_spanning_trees(t: Topology, required=()) -> Iterator[Topology]:
    """Yield every spanning tree of ``t`` containing all ``required`` lines.

    Branches on lines in id order, include before exclude. A branch is only
    entered when it still admits at least one tree, so the work per tree is
    polynomial and no dead ends are explored.
    """
    _require_connected(t)
    n = t.n_buses
    edges = list(t.lines)
    forced = set(required)
    if not forced <= set(t.line_ids):
        raise ValueError("required lines are not in the topology")
    if n <= 1:
        yield Topology(n, ())
        return

    # forced lines are pre-merged so no optional line can close a cycle with
    # a forced line that comes later in id order
    ds0 = _DisjointSet(n)
    for e in edges:
        if e[0] in forced and not ds0.union(e[1], e[2]):
            return
    if _n_components(n, edges) != 1:
        return

    def rec(idx, chosen, parent):
        if len(chosen) == n - 1:
            yield Topology(n, tuple(chosen))
            return
        e = edges[idx]
        if e[0] in forced:
            yield from rec(idx + 1, chosen + [e], parent)
            return
        ds = _DisjointSet(n)
        ds.parent = parent.copy()
        if ds.union(e[1], e[2]):
            yield from rec(idx + 1, chosen + [e], ds.parent)
        if _n_components(n, chosen + edges[idx + 1:]) == 1:
            yield from rec(idx + 1, chosen, parent)

    yield from rec(0, [], ds0.parent)


def enumerate_spanning_trees(t: Topology, limit: int, required=()) -> list[Topology]:
    """All spanning trees of ``t`` in a deterministic order.

    Raises:
        EnumerationLimitError: there are more than ``limit`` trees.
    """
    if limit <= 0:
        raise ValueError("limit must be positive")
    out = []
    for tree in iter_spanning_trees(t, required):
        if len(out) == limit:
            raise EnumerationLimitError(limit, len(out))
        out.append(tree)
    return out
