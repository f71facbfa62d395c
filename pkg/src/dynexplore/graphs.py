"""Per-round port-labelled snapshots and connectivity checkers for dynamic graphs.

A dynamic graph is a static node set ``[0, n)`` together with one snapshot per
round.  Each snapshot independently assigns ports ``0 .. deg(v)-1`` at every
node; labels of different rounds are unrelated, so every snapshot carries its
own fresh port arrays.
"""
from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

NodeId = int


class ScheduleError(ValueError):
    """Raised when a connectivity check is asked about a window the history cannot cover."""


@dataclass(frozen=True)
class SnapshotViolation:
    rule: str
    node: Optional[int] = None
    port: Optional[int] = None
    detail: str = ""

    def __str__(self) -> str:
        where = "" if self.node is None else f" at node {self.node}"
        where += "" if self.port is None else f", port {self.port}"
        return f"{self.rule}{where}: {self.detail}" if self.detail else f"{self.rule}{where}"


class Snapshot:
    """One round's undirected port-labelled graph over a fixed node set.

    Immutable after construction.  The constructor accepts arbitrary (possibly
    malformed) port maps so that :func:`validate_snapshot` can be exercised on
    bad inputs; all factory helpers produce valid snapshots.
    """

    __slots__ = ("n", "_ports", "_edges")

    def __init__(self, n: int, port_of: Sequence[Mapping[int, int]]):
        if len(port_of) != n:
            raise ValueError(f"expected {n} port maps, got {len(port_of)}")
        self.n = n
        self._ports = tuple(
            tuple(sorted(dict(m).items())) for m in port_of
        )
        edges = set()
        for v, items in enumerate(self._ports):
            for _, u in items:
                if 0 <= u < n and u != v:
                    edges.add((min(u, v), max(u, v)))
        self._edges = frozenset(edges)

    # -- construction helpers -------------------------------------------------

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int, int, int]]) -> "Snapshot":
        """Build from explicit ``(u, v, port_u, port_v)`` quadruples."""
        maps: list[dict[int, int]] = [dict() for _ in range(n)]
        for u, v, pu, pv in edges:
            if pu in maps[u] or pv in maps[v]:
                raise ValueError(f"duplicate port in edge ({u},{v},{pu},{pv})")
            maps[u][pu] = v
            maps[v][pv] = u
        return cls(n, maps)

    @classmethod
    def from_adjacency(
        cls,
        n: int,
        edges: Iterable[tuple[int, int]],
        rng: Optional[random.Random] = None,
    ) -> "Snapshot":
        """Build from an edge list, assigning ports per node.

        Without ``rng``, ports follow sorted neighbor order; with ``rng`` each
        node's port assignment is an independent random permutation, matching
        the model's freedom to relabel ports every round.
        """
        nbrs: list[list[int]] = [[] for _ in range(n)]
        for u, v in edges:
            if u == v:
                raise ValueError(f"self-loop at {u}")
            nbrs[u].append(v)
            nbrs[v].append(u)
        maps: list[dict[int, int]] = []
        for v in range(n):
            order = sorted(set(nbrs[v]))
            if len(order) != len(nbrs[v]):
                raise ValueError(f"parallel edge at node {v}")
            if rng is not None:
                rng.shuffle(order)
            maps.append({p: u for p, u in enumerate(order)})
        return cls(n, maps)

    # -- accessors ------------------------------------------------------------

    @property
    def edges(self) -> frozenset[tuple[int, int]]:
        return self._edges

    def degree(self, v: int) -> int:
        return len(self._ports[v])

    def port_map(self, v: int) -> dict[int, int]:
        return dict(self._ports[v])

    def ports(self, v: int) -> tuple[tuple[int, int], ...]:
        """Sorted ``(port, neighbor)`` pairs at ``v``."""
        return self._ports[v]

    def neighbor(self, v: int, port: int) -> int:
        for p, u in self._ports[v]:
            if p == port:
                return u
        raise KeyError(f"node {v} has no port {port}")

    def has_port(self, v: int, port: int) -> bool:
        return any(p == port for p, _ in self._ports[v])

    def neighbors(self, v: int) -> tuple[int, ...]:
        return tuple(u for _, u in self._ports[v])

    def port_to(self, v: int, u: int) -> int:
        for p, w in self._ports[v]:
            if w == u:
                return p
        raise KeyError(f"no edge from {v} to {u}")

    def edge_quads(self) -> list[tuple[int, int, int, int]]:
        """All edges as ``(u, v, port_u, port_v)`` with ``u < v``, sorted."""
        quads = []
        for u, v in sorted(self._edges):
            quads.append((u, v, self.port_to(u, v), self.port_to(v, u)))
        return quads

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Snapshot):
            return NotImplemented
        return self.n == other.n and self._ports == other._ports

    def __hash__(self) -> int:
        return hash((self.n, self._ports))

    def __repr__(self) -> str:
        return f"Snapshot(n={self.n}, edges={sorted(self._edges)})"


def validate_snapshot(s: Snapshot) -> Optional[SnapshotViolation]:
    """Check every port-label invariant; return the first violation or None."""
    n = s.n
    for v in range(n):
        items = s.ports(v)
        ports = [p for p, _ in items]
        deg = len(items)
        for p in ports:
            if not (0 <= p < deg):
                return SnapshotViolation(
                    "non-consecutive ports", v, p,
                    f"ports must be exactly 0..{deg - 1}",
                )
        seen_targets: set[int] = set()
        for p, u in items:
            if u == v:
                return SnapshotViolation("self-loop", v, p)
            if not (0 <= u < n):
                return SnapshotViolation("neighbor out of range", v, p, f"target {u}")
            if u in seen_targets:
                return SnapshotViolation("parallel edge", v, p, f"two ports to {u}")
            seen_targets.add(u)
    # Every incident edge must carry exactly one port at each endpoint.
    for v in range(n):
        for p, u in s.ports(v):
            back = [q for q, w in s.ports(u) if w == v]
            if len(back) != 1:
                return SnapshotViolation(
                    "asymmetric edge", v, p,
                    f"edge ({v},{u}) has {len(back)} ports at {u}",
                )
    return None


def bfs_distances(s: Snapshot, source: int, limit: Optional[int] = None) -> dict[int, int]:
    """Hop distances from ``source`` within its component, optionally capped."""
    dist = {source: 0}
    queue = deque([source])
    while queue:
        v = queue.popleft()
        if limit is not None and dist[v] >= limit:
            continue
        for u in s.neighbors(v):
            if u not in dist:
                dist[u] = dist[v] + 1
                queue.append(u)
    return dist


@dataclass(frozen=True)
class ComponentDecomposition:
    """Partition of V into maximal connected node sets with induced edges."""

    components: tuple[frozenset[int], ...]
    edges: tuple[frozenset[tuple[int, int]], ...]
    diameters: tuple[int, ...]

    @property
    def diameter(self) -> int:
        """Max component diameter; disconnection never yields infinity."""
        return max(self.diameters) if self.diameters else 0

    def index_of(self, v: int) -> int:
        for i, comp in enumerate(self.components):
            if v in comp:
                return i
        raise KeyError(v)

    def component_of(self, v: int) -> frozenset[int]:
        return self.components[self.index_of(v)]


def connected_components(s: Snapshot) -> ComponentDecomposition:
    seen: set[int] = set()
    comps: list[frozenset[int]] = []
    edges: list[frozenset[tuple[int, int]]] = []
    diams: list[int] = []
    for start in range(s.n):
        if start in seen:
            continue
        dist = bfs_distances(s, start)
        comp = frozenset(dist)
        seen |= comp
        comps.append(comp)
        edges.append(frozenset(e for e in s.edges if e[0] in comp))
        diam = 0
        for v in comp:
            diam = max(diam, max(bfs_distances(s, v).values()))
        diams.append(diam)
    return ComponentDecomposition(tuple(comps), tuple(edges), tuple(diams))


def _edges_connected(n: int, edges: Iterable[tuple[int, int]]) -> bool:
    adj: list[list[int]] = [[] for _ in range(n)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    seen = {0}
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for u in adj[v]:
            if u not in seen:
                seen.add(u)
                queue.append(u)
    return len(seen) == n


def check_interval_connectivity(history: Sequence[Snapshot], T: int) -> bool:
    """True iff every window of T consecutive rounds shares a connected subgraph
    (intersection of the edge sets is connected)."""
    if T < 1:
        raise ScheduleError(f"window must be >= 1, got {T}")
    if T > len(history):
        raise ScheduleError(f"window {T} longer than history of {len(history)} rounds")
    n = history[0].n
    for r in range(len(history) - T + 1):
        inter = set(history[r].edges)
        for i in range(r + 1, r + T):
            inter &= history[i].edges
        if not _edges_connected(n, inter):
            return False
    return True


def check_connectivity_time(history: Sequence[Snapshot], T: int) -> bool:
    """True iff the union of every T consecutive edge sets is connected."""
    if T < 1:
        raise ScheduleError(f"window must be >= 1, got {T}")
    if T > len(history):
        raise ScheduleError(f"window {T} longer than history of {len(history)} rounds")
    n = history[0].n
    for r in range(len(history) - T + 1):
        union: set[tuple[int, int]] = set()
        for i in range(r, r + T):
            union |= history[i].edges
        if not _edges_connected(n, union):
            return False
    return True


@dataclass(frozen=True)
class OccupiedSubgraph:
    """One maximal connected subgraph over occupied nodes (a member of the
    hole-free decomposition of a component)."""

    nodes: frozenset[int]
    edges: frozenset[tuple[int, int, int, int]]  # (u, v, port_u, port_v), u < v
    hole_ports: Mapping[int, frozenset[int]]  # occupied node -> ports leading to holes


@dataclass(frozen=True)
class HoleFreeDecomposition:
    subgraphs: tuple[OccupiedSubgraph, ...]
    component_index: tuple[int, ...]  # parallel to subgraphs: which component each lives in

    def subgraph_of(self, v: int) -> OccupiedSubgraph:
        for sg in self.subgraphs:
            if v in sg.nodes:
                return sg
        raise KeyError(v)


def cc_without_holes(s: Snapshot, alpha: Sequence[int]) -> HoleFreeDecomposition:
    """Delete holes (and incident edges) from each component of ``s``.

    Returns the maximal connected subgraphs over occupied nodes, each carrying
    the set of ports (per occupied node) that lead to holes.
    """
    if len(alpha) != s.n:
        raise ValueError("occupancy vector length mismatch")
    comps = connected_components(s)
    subgraphs: list[OccupiedSubgraph] = []
    comp_idx: list[int] = []
    seen: set[int] = set()
    for v in range(s.n):
        if alpha[v] == 0 or v in seen:
            continue
        # BFS over occupied nodes only.
        nodes = {v}
        queue = deque([v])
        while queue:
            w = queue.popleft()
            for u in s.neighbors(w):
                if alpha[u] > 0 and u not in nodes:
                    nodes.add(u)
                    queue.append(u)
        seen |= nodes
        edges = frozenset(
            (a, b, s.port_to(a, b), s.port_to(b, a))
            for a, b in s.edges
            if a in nodes and b in nodes
        )
        hp = {
            w: frozenset(p for p, u in s.ports(w) if alpha[u] == 0)
            for w in nodes
        }
        subgraphs.append(
            OccupiedSubgraph(frozenset(nodes), edges, {k: v2 for k, v2 in hp.items()})
        )
        comp_idx.append(comps.index_of(v))
    order = sorted(range(len(subgraphs)), key=lambda i: min(subgraphs[i].nodes))
    return HoleFreeDecomposition(
        tuple(subgraphs[i] for i in order),
        tuple(comp_idx[i] for i in order),
    )


class Schedule:
    """Records the per-round snapshots produced by a provider for later checks."""

    def __init__(self, T: int = 1):
        self.T = T
        self.history: list[Snapshot] = []

    def record(self, snapshot: Snapshot) -> None:
        self.history.append(snapshot)

    def interval_connected(self, T: Optional[int] = None) -> bool:
        return check_interval_connectivity(self.history, self.T if T is None else T)

    def connectivity_time(self, T: Optional[int] = None) -> bool:
        return check_connectivity_time(self.history, self.T if T is None else T)
