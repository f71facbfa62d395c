"""Map reconstruction from shared 1-hop views and the exploration decision rule.

Occupied nodes are identified by the minimum agent id present on them.  Each
round the minimum-id agent of a node publishes one record per port; collecting
those records lets every agent rebuild the occupied part of its component,
including which ports lead to unoccupied nodes, and derive a common movement
plan from it.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional

from .graphs import Snapshot
from .runtime import (
    Algorithm,
    CommSpec,
    Configuration,
    MoveDecision,
    STAY,
    SpecError,
    VisibilityRegion,
    move_via,
)

HOLE = None  # neighbor marker for a port leading to an unoccupied node


class ReconstructionError(RuntimeError):
    """A one-sided view record could not be matched; honest views never trigger this."""


@dataclass(frozen=True)
class ViewRecord:
    """One port observation: who owns the node, which port, who is across it."""

    occupancy: int
    owner_id: int
    port: int
    neighbor_id: Optional[int]  # None marks a hole behind this port


def map_phase1(snapshot: Snapshot, config: Configuration, node: int) -> tuple[ViewRecord, ...]:
    """Records published by the minimum-id agent at an occupied node."""
    if config.alpha(node) == 0:
        raise ValueError(f"node {node} is unoccupied")
    owner = config.min_id_at(node)
    occ = config.alpha(node)
    records = []
    for port, u in snapshot.ports(node):
        nbr = config.min_id_at(u) if config.alpha(u) > 0 else HOLE
        records.append(ViewRecord(occ, owner, port, nbr))
    return tuple(records)


def views_from_region(region: VisibilityRegion) -> tuple[ViewRecord, ...]:
    """Phase-1 records computed locally from a 1-hop (or wider) visibility region."""
    center = region.center
    if not center.agents:
        raise ValueError("region center is unoccupied")
    owner = center.agents[0]
    occ = len(center.agents)
    targets = region.port_targets(0)
    records = []
    for port in range(center.degree):
        if port not in targets:
            raise ValueError("region too narrow to observe all ports of the center")
        nbr_node = region.nodes[targets[port]]
        nbr = nbr_node.agents[0] if nbr_node.agents else HOLE
        records.append(ViewRecord(occ, owner, port, nbr))
    return tuple(records)


@dataclass(frozen=True)
class ReconstructedMap:
    """Occupied subgraph rebuilt from view records.

    Nodes are minimum agent ids; ``adjacency`` maps each node to its known
    neighbors with the outgoing port; ``hole_ports`` lists ports that lead to
    unoccupied nodes.
    """

    nodes: tuple[int, ...]
    occupancy: dict[int, int]
    edges: frozenset[tuple[int, int, int, int]]  # (a, b, port_a, port_b), a < b
    hole_ports: dict[int, frozenset[int]]
    adjacency: dict[int, dict[int, int]] = field(repr=False)

    @cached_property
    def components(self) -> tuple[frozenset[int], ...]:
        seen: set[int] = set()
        comps = []
        for start in self.nodes:
            if start in seen:
                continue
            comp = {start}
            stack = [start]
            while stack:
                v = stack.pop()
                for u in self.adjacency[v]:
                    if u not in comp:
                        comp.add(u)
                        stack.append(u)
            seen |= comp
            comps.append(frozenset(comp))
        return tuple(comps)

    def component_of(self, v: int) -> frozenset[int]:
        for comp in self.components:
            if v in comp:
                return comp
        raise KeyError(v)

    def port_between(self, a: int, b: int) -> int:
        return self.adjacency[a][b]


def map_phase2(
    views: Iterable[ViewRecord],
    self_node: Optional[tuple[int, int]] = None,
    strict: bool = True,
) -> ReconstructedMap:
    """Rebuild the occupied subgraph from a collection of phase-1 records.

    ``self_node`` is an ``(owner_id, occupancy)`` pair for the reconstructing
    agent's own node; it matters only when that node has no ports (an isolated
    node publishes no records).  With ``strict`` a record claiming an occupied
    neighbor that published no matching reverse record raises
    :class:`ReconstructionError`; otherwise such records are dropped, which is
    the right behavior when views were gathered over limited communication.
    """
    occupancy: dict[int, int] = {}
    hole_ports: dict[int, set[int]] = {}
    pending: list[ViewRecord] = []
    back_port: dict[tuple[int, int], int] = {}  # (owner, neighbor) -> port
    for rec in views:
        prev = occupancy.setdefault(rec.owner_id, rec.occupancy)
        if prev != rec.occupancy:
            raise ReconstructionError(
                f"conflicting occupancy for node {rec.owner_id}: {prev} vs {rec.occupancy}"
            )
        hole_ports.setdefault(rec.owner_id, set())
        if rec.neighbor_id is HOLE:
            hole_ports[rec.owner_id].add(rec.port)
        else:
            pending.append(rec)
            back_port[(rec.owner_id, rec.neighbor_id)] = rec.port
    if self_node is not None:
        owner, occ = self_node
        occupancy.setdefault(owner, occ)
        hole_ports.setdefault(owner, set())

    edges: set[tuple[int, int, int, int]] = set()
    adjacency: dict[int, dict[int, int]] = {v: {} for v in occupancy}
    for rec in pending:
        a, b = rec.owner_id, rec.neighbor_id
        q = back_port.get((b, a))
        if b not in occupancy or q is None:
            if strict:
                raise ReconstructionError(
                    f"record {rec} has no matching reverse record from node {b}"
                )
            continue
        adjacency[a][b] = rec.port
        adjacency[b][a] = q
        if a < b:
            edges.add((a, b, rec.port, q))
        else:
            edges.add((b, a, q, rec.port))

    return ReconstructedMap(
        nodes=tuple(sorted(occupancy)),
        occupancy=dict(occupancy),
        edges=frozenset(edges),
        hole_ports={v: frozenset(ps) for v, ps in hole_ports.items()},
        adjacency=adjacency,
    )


def lex_shortest_path(rmap: ReconstructedMap, src: int, dst: int) -> list[int]:
    """Among the shortest src-dst paths, the one with the smallest node-id sequence."""
    if src == dst:
        return [src]
    dist = {dst: 0}
    frontier = [dst]
    while frontier and src not in dist:
        nxt = []
        for v in frontier:
            for u in rmap.adjacency[v]:
                if u not in dist:
                    dist[u] = dist[v] + 1
                    nxt.append(u)
        frontier = nxt
    if src not in dist:
        raise ValueError(f"no path from {src} to {dst}")
    path = [src]
    cur = src
    while cur != dst:
        cur = min(u for u in rmap.adjacency[cur] if dist.get(u) == dist[cur] - 1)
        path.append(cur)
    return path


def plan_moves(rmap: ReconstructedMap) -> dict[int, int]:
    """Map each moving node (keyed by its minimum agent id) to the exit port.

    The plan is a pure function of the reconstructed map, so every agent that
    rebuilt the same map derives the same plan.
    """
    multinodes = [v for v in rmap.nodes if rmap.occupancy[v] >= 2]
    hole_adjacent = [v for v in rmap.nodes if rmap.hole_ports.get(v)]

    if not multinodes and not hole_adjacent:
        return {}

    if not multinodes:
        # Single mover: the smallest-id hole-adjacent node fills via its
        # smallest hole port.
        chooser = min(hole_adjacent)
        return {chooser: min(rmap.hole_ports[chooser])}

    if hole_adjacent:
        # Pipeline from the smallest-id multinode toward the smallest-id
        # hole-adjacent node of its own component; everyone else stays.
        u1 = min(multinodes)
        comp = rmap.component_of(u1)
        targets = [v for v in hole_adjacent if v in comp]
        if not targets:
            return {}
        ubar = min(targets)
        path = lex_shortest_path(rmap, u1, ubar)
        plan = {path[j]: rmap.port_between(path[j], path[j + 1]) for j in range(len(path) - 1)}
        plan[path[-1]] = min(rmap.hole_ports[ubar])
        return plan

    # No holes anywhere: shift one agent from the most crowded node toward the
    # least crowded one when their counts differ by at least two.
    plan: dict[int, int] = {}
    for comp in rmap.components:
        hi = max(rmap.occupancy[v] for v in comp)
        lo = min(rmap.occupancy[v] for v in comp)
        if hi < lo + 2:
            continue
        v1 = min(v for v in comp if rmap.occupancy[v] == hi)
        w1 = min(v for v in comp if rmap.occupancy[v] == lo)
        path = lex_shortest_path(rmap, v1, w1)
        for j in range(len(path) - 1):
            plan[path[j]] = rmap.port_between(path[j], path[j + 1])
    return plan


class ExpAlgo(Algorithm):
    """Hole-filling exploration via shared views and pipelined moves.

    Requires 1-hop visibility.  Designed for global communication, under which
    all agents of a component reconstruct the same map; it degrades gracefully
    under narrower communication by planning on whatever views arrived.
    Agents keep no state between rounds.
    """

    def __init__(self):
        self._plans: dict = {}

    def check_spec(self, spec: CommSpec) -> None:
        if spec.ell_v != 1:
            raise SpecError("this algorithm requires exactly 1-hop visibility")

    def begin_round(self, round_index: int) -> None:
        self._plans.clear()

    def communicate(self, agent_id: int, memory, region: VisibilityRegion):
        if agent_id != region.center.agents[0]:
            return None
        return views_from_region(region)

    def decide(self, agent_id, memory, region, inbox) -> tuple[MoveDecision, object]:
        if agent_id != region.center.agents[0]:
            return STAY, None
        own = views_from_region(region)
        received = [rec for _, msg in inbox for rec in msg]
        self_node = (agent_id, len(region.center.agents))
        key = (frozenset(own) | frozenset(received), self_node)
        plan = self._plans.get(key)
        if plan is None:
            rmap = map_phase2(list(own) + received, self_node=self_node, strict=False)
            plan = plan_moves(rmap)
            self._plans[key] = plan
        port = plan.get(agent_id)
        return (move_via(port) if port is not None else STAY), None
