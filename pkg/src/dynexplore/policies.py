"""Simple plug-in algorithms: baselines, 0-hop heuristics, and scripted moves."""
from __future__ import annotations

from collections import deque
from typing import Mapping

from .runtime import (
    Algorithm,
    CommSpec,
    FULL,
    MoveDecision,
    STAY,
    SpecError,
    VisibilityRegion,
    move_via,
)


class StayAlgorithm(Algorithm):
    """Every agent stays forever."""

    def decide(self, agent_id, memory, region, inbox):
        return STAY, None


class Greedy0Hop(Algorithm):
    """0-hop heuristic: the minimum-id agent of a crowded node exits via port 0."""

    def check_spec(self, spec: CommSpec) -> None:
        if spec.ell_v != 0:
            raise SpecError("this algorithm is defined for 0-hop visibility")

    def decide(self, agent_id, memory, region, inbox):
        center = region.center
        if len(center.agents) >= 2 and agent_id == center.agents[0] and center.degree > 0:
            return move_via(0), None
        return STAY, None


class Restless0Hop(Algorithm):
    """0-hop heuristic that never lets a lone agent sit still.

    Crowded nodes shed their minimum-id agent via port 0; a lone agent leaves
    via the highest port of its node.
    """

    def check_spec(self, spec: CommSpec) -> None:
        if spec.ell_v != 0:
            raise SpecError("this algorithm is defined for 0-hop visibility")

    def decide(self, agent_id, memory, region, inbox):
        center = region.center
        if center.degree == 0:
            return STAY, None
        if len(center.agents) >= 2 and agent_id == center.agents[0]:
            return move_via(0), None
        if len(center.agents) == 1:
            return move_via(center.degree - 1), None
        return STAY, None


class FullVisibilityGreedy(Algorithm):
    """Full-visibility heuristic: walk one agent from the most crowded node
    toward the nearest hole of its component, one step per round."""

    def check_spec(self, spec: CommSpec) -> None:
        if spec.ell_v != FULL:
            raise SpecError("this algorithm requires full visibility")

    def decide(self, agent_id, memory, region: VisibilityRegion, inbox):
        holes = [node.local for node in region.nodes if not node.agents]
        if not holes:
            return STAY, None
        # Hop distance to the nearest hole, for every node of the component.
        dist = {h: 0 for h in holes}
        frontier = deque(holes)
        adj = {node.local: region.port_targets(node.local) for node in region.nodes}
        while frontier:
            v = frontier.popleft()
            for u in adj[v].values():
                if u not in dist:
                    dist[u] = dist[v] + 1
                    frontier.append(u)
        occupied = [node for node in region.nodes if node.agents and node.local in dist]
        if not occupied:
            return STAY, None
        mover = min(occupied, key=lambda node: (-len(node.agents), node.agents[0]))
        me = region.center
        if me.local != mover.local or agent_id != me.agents[0]:
            return STAY, None
        step = min(
            (port for port, u in adj[0].items() if dist.get(u) == dist[0] - 1),
            default=None,
        )
        return (move_via(step) if step is not None else STAY), None


class ScriptAlgorithm(Algorithm):
    """Replays a fixed move script: ``{round: {agent_id: port}}``."""

    def __init__(self, moves: Mapping[int, Mapping[int, int]]):
        self._moves = {int(r): dict(m) for r, m in moves.items()}
        self._round = 0

    def begin_round(self, round_index: int) -> None:
        self._round = round_index

    def decide(self, agent_id, memory, region, inbox):
        port = self._moves.get(self._round, {}).get(agent_id)
        return (move_via(port) if port is not None else STAY), None
