"""Synchronous Communicate-Compute-Move engine.

Each round: every agent first composes an outgoing message from its visibility
region, messages are delivered within the communication radius, then every
agent decides a move against the frozen round-start state, and all moves are
applied simultaneously.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .graphs import Snapshot, bfs_distances, connected_components

GLOBAL = "global"  # communication reaching the whole current component
FULL = "full"      # visibility covering the whole current component


class SimulationError(RuntimeError):
    pass


class SpecError(ValueError):
    """Algorithm/communication-spec incompatibility."""


@dataclass(frozen=True)
class CommSpec:
    ell_c: int | str = 0
    ell_v: int | str = 0

    def __post_init__(self):
        for name, val, kw in (("ell_c", self.ell_c, GLOBAL), ("ell_v", self.ell_v, FULL)):
            if isinstance(val, str):
                if val != kw:
                    raise SpecError(f"{name} must be a hop count or {kw!r}, got {val!r}")
            elif val < 0:
                raise SpecError(f"{name} must be >= 0, got {val}")


@dataclass(frozen=True)
class MoveDecision:
    port: Optional[int] = None

    @property
    def stays(self) -> bool:
        return self.port is None


STAY = MoveDecision()


def move_via(port: int) -> MoveDecision:
    return MoveDecision(port)


class Configuration:
    """Per-node multisets of agent ids; immutable."""

    __slots__ = ("placement",)

    def __init__(self, placement: Iterable[Iterable[int]]):
        self.placement = tuple(tuple(sorted(ids)) for ids in placement)
        all_ids = [a for ids in self.placement for a in ids]
        if len(set(all_ids)) != len(all_ids):
            raise ValueError("duplicate agent id in placement")

    @classmethod
    def from_counts(cls, counts: Sequence[int], first_id: int = 1) -> "Configuration":
        placement = []
        next_id = first_id
        for c in counts:
            placement.append(range(next_id, next_id + c))
            next_id += c
        return cls(placement)

    @property
    def n(self) -> int:
        return len(self.placement)

    def alpha(self, v: int) -> int:
        return len(self.placement[v])

    def alpha_vector(self) -> tuple[int, ...]:
        return tuple(len(ids) for ids in self.placement)

    def agents_at(self, v: int) -> tuple[int, ...]:
        return self.placement[v]

    def min_id_at(self, v: int) -> int:
        return self.placement[v][0]

    @property
    def total(self) -> int:
        return sum(len(ids) for ids in self.placement)

    def node_of(self) -> dict[int, int]:
        return {a: v for v, ids in enumerate(self.placement) for a in ids}

    def agent_ids(self) -> list[int]:
        return sorted(a for ids in self.placement for a in ids)

    def holes(self) -> list[int]:
        return [v for v, ids in enumerate(self.placement) if not ids]

    def multinodes(self) -> list[int]:
        return [v for v, ids in enumerate(self.placement) if len(ids) >= 2]

    def is_dispersed(self) -> bool:
        return all(len(ids) <= 1 for ids in self.placement)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Configuration):
            return NotImplemented
        return self.placement == other.placement

    def __hash__(self) -> int:
        return hash(self.placement)

    def __repr__(self) -> str:
        return f"Configuration({self.alpha_vector()})"


@dataclass(frozen=True)
class RegionNode:
    local: int
    degree: int
    agents: tuple[int, ...]


@dataclass(frozen=True)
class VisibilityRegion:
    """BFS ball around an agent's node, canonically relabelled.

    Local id 0 is the viewing node; further ids are assigned by breadth-first
    discovery following increasing port numbers, so two regions compare equal
    exactly when they look identical to an agent.  The engine-side mapping back
    to true node ids is excluded from comparisons.
    """

    nodes: tuple[RegionNode, ...]
    edges: frozenset[tuple[int, int, int, int]]  # (lu, pu, lv, pv), lu < lv
    node_ids: tuple[int, ...] = field(compare=False, repr=False, default=())

    @property
    def center(self) -> RegionNode:
        return self.nodes[0]

    def port_targets(self, local: int) -> dict[int, int]:
        """Known ports of ``local`` within the region: port -> local neighbor."""
        out: dict[int, int] = {}
        for lu, pu, lv, pv in self.edges:
            if lu == local:
                out[pu] = lv
            if lv == local:
                out[pv] = lu
        return out


def visibility_region(
    snapshot: Snapshot,
    config: Configuration,
    node: int,
    ell_v: int | str,
) -> VisibilityRegion:
    limit = None if ell_v == FULL else int(ell_v)
    ball = set(bfs_distances(snapshot, node, limit))
    # Canonical labelling: BFS from the center following increasing ports.
    label = {node: 0}
    order = [node]
    i = 0
    while i < len(order):
        v = order[i]
        i += 1
        for _, u in snapshot.ports(v):
            if u in ball and u not in label:
                label[u] = len(order)
                order.append(u)
    nodes = tuple(
        RegionNode(label[v], snapshot.degree(v), config.agents_at(v)) for v in order
    )
    edges = set()
    for v in order:
        for p, u in snapshot.ports(v):
            if u in ball:
                lu, lv = label[v], label[u]
                if lu < lv:
                    edges.add((lu, p, lv, snapshot.port_to(u, v)))
    return VisibilityRegion(nodes, frozenset(edges), tuple(order))


def deliver_messages(
    snapshot: Snapshot,
    config: Configuration,
    outboxes: Mapping[int, object],
    ell_c: int | str,
) -> dict[int, tuple[tuple[int, object], ...]]:
    """Inboxes per agent: ``(sender_id, message)`` pairs sorted by sender id.

    A message reaches every agent within ``ell_c`` hops of the sender in the
    sender's current component (GLOBAL covers the whole component, never
    crossing components).  Senders do not receive their own message.
    """
    node_of = config.node_of()
    inboxes: dict[int, list[tuple[int, object]]] = {a: [] for a in node_of}
    limit = None if ell_c == GLOBAL else int(ell_c)
    reach_cache: dict[int, set[int]] = {}
    for sender in sorted(outboxes):
        msg = outboxes[sender]
        if msg is None:
            continue
        src = node_of[sender]
        if src not in reach_cache:
            reach_cache[src] = set(bfs_distances(snapshot, src, limit))
        for receiver, v in node_of.items():
            if receiver != sender and v in reach_cache[src]:
                inboxes[receiver].append((sender, msg))
    return {a: tuple(box) for a, box in inboxes.items()}


class Algorithm:
    """Plug-in contract for agent behavior.

    Both hooks are pure functions of their arguments; the engine evaluates
    them against the frozen round-start state in ascending agent-id order.
    Persistent memory is whatever ``decide`` returns as its second element.
    """

    def check_spec(self, spec: CommSpec) -> None:
        """Raise SpecError if the algorithm cannot run under ``spec``."""

    def begin_round(self, round_index: int) -> None:
        """Round marker; lets implementations drop per-round caches."""

    def communicate(self, agent_id: int, memory: object, region: VisibilityRegion) -> object:
        return None

    def decide(
        self,
        agent_id: int,
        memory: object,
        region: VisibilityRegion,
        inbox: tuple[tuple[int, object], ...],
    ) -> tuple[MoveDecision, object]:
        raise NotImplementedError


@dataclass(frozen=True)
class Move:
    agent: int
    src: int
    port: int
    dst: int


@dataclass
class RoundResult:
    config: Configuration
    moves: tuple[Move, ...]
    memories: dict[int, object]
    decisions: dict[int, MoveDecision]


def step_round(
    snapshot: Snapshot,
    config: Configuration,
    algorithm: Algorithm,
    comm_spec: CommSpec,
    memories: Optional[Mapping[int, object]] = None,
    round_index: int = 0,
) -> RoundResult:
    """Run one Communicate-Compute-Move cycle and apply all moves at once."""
    node_of = config.node_of()
    mem = {a: (memories or {}).get(a) for a in node_of}
    algorithm.begin_round(round_index)

    regions = {
        v: visibility_region(snapshot, config, v, comm_spec.ell_v)
        for v in range(config.n)
        if config.alpha(v) > 0
    }
    outboxes = {
        a: algorithm.communicate(a, mem[a], regions[node_of[a]])
        for a in sorted(node_of)
    }
    inboxes = deliver_messages(snapshot, config, outboxes, comm_spec.ell_c)

    decisions: dict[int, MoveDecision] = {}
    for a in sorted(node_of):
        decision, new_mem = algorithm.decide(a, mem[a], regions[node_of[a]], inboxes[a])
        decisions[a] = decision
        mem[a] = new_mem

    placement = [list(ids) for ids in config.placement]
    moves: list[Move] = []
    for a in sorted(node_of):
        decision = decisions[a]
        if decision.stays:
            continue
        src = node_of[a]
        if not snapshot.has_port(src, decision.port):
            raise SimulationError(
                f"agent {a} chose port {decision.port} at node {src} "
                f"(degree {snapshot.degree(src)}) in round {round_index}"
            )
        dst = snapshot.neighbor(src, decision.port)
        placement[src].remove(a)
        placement[dst].append(a)
        moves.append(Move(a, src, decision.port, dst))

    return RoundResult(Configuration(placement), tuple(moves), mem, decisions)
