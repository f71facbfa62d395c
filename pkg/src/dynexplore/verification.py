"""Runtime invariant monitors and small-instance brute-force oracles.

Everything here is a pure observer: monitors read (previous state, new state)
pairs produced by the engine and report violations without ever influencing a
run.  The occupancy-count partition, prefix-sum inequality, gap condition, and
hole-dynamics checks mirror the quantities the correctness arguments track.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .graphs import Snapshot, connected_components
from .runtime import Configuration


def max_agents(n: int) -> int:
    """The largest agent count the impossibility constructions tolerate."""
    return (n - 2) * (n - 1) // 2


@dataclass(frozen=True)
class SSetPartition:
    """Nodes grouped by current occupancy count: S_i holds the nodes with
    exactly i agents."""

    sets: tuple[frozenset[int], ...]

    @classmethod
    def from_config(cls, config: Configuration) -> "SSetPartition":
        top = max(config.alpha_vector(), default=0)
        buckets: list[set[int]] = [set() for _ in range(top + 1)]
        for v in range(config.n):
            buckets[config.alpha(v)].add(v)
        return cls(tuple(frozenset(b) for b in buckets))

    @property
    def L(self) -> int:
        """Largest occupancy present."""
        return len(self.sets) - 1

    def size(self, i: int) -> int:
        return len(self.sets[i]) if i < len(self.sets) else 0

    def holes(self) -> frozenset[int]:
        return self.sets[0]


def check_movement_inequality(
    config: Configuration, ordering: Sequence[int], n: int
) -> bool:
    """Prefix occupancy sums of the ordering never drop below the staircase
    start: sum of the first l counts >= sum_{i=1..l} (n-i-1) for l <= n-2."""
    prefix = 0
    floor = 0
    for l in range(1, n - 1):
        prefix += config.alpha(ordering[l - 1])
        floor += n - l - 1
        if prefix < floor:
            return False
    return True


def check_gap_condition(partition: SSetPartition) -> Optional[tuple[int, int]]:
    """With at least two holes, find i < j with S_i and S_j occupied, j >= i+2,
    and every set strictly between them empty.  Returns the witness or None."""
    if partition.size(0) < 2:
        return None
    occupied = [i for i in range(len(partition.sets)) if partition.size(i) > 0]
    for a, b in zip(occupied, occupied[1:]):
        if b >= a + 2:
            return (a, b)
    return None


def check_agent_bound(L: int, n: int) -> int:
    """Largest agent total compatible with top occupancy L; always within the
    global ceiling (n-2)(n-1)/2."""
    if not 1 <= L <= n - 2:
        raise ValueError(f"need 1 <= L <= n-2, got L={L}, n={n}")
    bound = L * (2 * n - L - 3) // 2
    assert bound <= max_agents(n)
    return bound


def monitor_hole_dynamics(
    snapshot: Snapshot, before: Configuration, after: Configuration
) -> list[str]:
    """Check one round transition of the hole-filling exploration algorithm.

    Per snapshot component: (a) a component holding both a hole and a multinode
    must fill at least one hole; (b) a hole-free component whose occupancy
    spread is >= 2 must perform exactly one unit transfer from a maximum- to a
    minimum-occupancy node; (c) a hole may only appear where a single agent sat
    in a hole-bearing, multinode-free component.
    """
    violations: list[str] = []
    for comp in connected_components(snapshot).components:
        a = {v: before.alpha(v) for v in comp}
        b = {v: after.alpha(v) for v in comp}
        holes = [v for v in comp if a[v] == 0]
        multi = [v for v in comp if a[v] >= 2]
        if holes and multi:
            if not any(b[v] > 0 for v in holes):
                violations.append(f"component {sorted(comp)}: no hole filled")
        elif multi:
            hi = max(a.values())
            lo = min(a.values())
            if hi >= lo + 2:
                down = [v for v in comp if b[v] == a[v] - 1 and a[v] == hi]
                up = [v for v in comp if b[v] == a[v] + 1 and a[v] == lo]
                rest = [v for v in comp if b[v] != a[v]]
                if len(down) != 1 or len(up) != 1 or len(rest) != 2:
                    violations.append(
                        f"component {sorted(comp)}: expected one max-to-min "
                        f"transfer, occupancies {a} -> {b}"
                    )
        for v in comp:
            if a[v] >= 1 and b[v] == 0:
                if a[v] != 1 or not holes or multi:
                    violations.append(
                        f"node {v}: hole created from occupancy {a[v]} in a "
                        f"component with holes={bool(holes)} multinodes={bool(multi)}"
                    )
    return violations


@dataclass
class CoverageTracker:
    """Visit bookkeeping across a run: first/last visit per node, convergence
    of the hole count to <= 1, post-convergence unoccupied streaks, and
    occupancy-set membership churn."""

    n: int
    T: int
    first_visit: list[Optional[int]] = field(default_factory=list)
    last_visit: list[Optional[int]] = field(default_factory=list)
    convergence_round: Optional[int] = None
    full_coverage_round: Optional[int] = None
    relapse_rounds: list[int] = field(default_factory=list)
    max_post_gap: int = 0
    join_events: int = 0
    leave_events: int = 0
    rounds: int = 0
    _streak: list[int] = field(default_factory=list)
    _prev_alpha: Optional[tuple[int, ...]] = None

    def __post_init__(self):
        self.first_visit = [None] * self.n
        self.last_visit = [None] * self.n
        self._streak = [0] * self.n

    def record(self, r: int, config: Configuration) -> None:
        alpha = config.alpha_vector()
        holes = sum(1 for c in alpha if c == 0)
        for v in range(self.n):
            if alpha[v] > 0:
                if self.first_visit[v] is None:
                    self.first_visit[v] = r
                self.last_visit[v] = r
                self._streak[v] = 0
            elif self.convergence_round is not None:
                self._streak[v] += 1
                self.max_post_gap = max(self.max_post_gap, self._streak[v])
        if self.convergence_round is None:
            if holes <= 1:
                self.convergence_round = r
        elif holes > 1:
            self.relapse_rounds.append(r)
        if self.full_coverage_round is None and all(
            f is not None for f in self.first_visit
        ):
            self.full_coverage_round = r
        if self._prev_alpha is not None:
            for old, new in zip(self._prev_alpha, alpha):
                if old != new:
                    self.join_events += 1
                    self.leave_events += 1
        self._prev_alpha = alpha
        self.rounds = r + 1


@dataclass(frozen=True)
class CoverageStatus:
    ok: bool
    ceiling: int
    convergence_round: Optional[int]
    full_coverage_round: Optional[int]
    max_post_gap: int
    problems: tuple[str, ...]


def monitor_coverage(tracker: CoverageTracker, c0: int = 1) -> CoverageStatus:
    """Judge a finished run: the hole count must drop to <= 1 and every node
    must be visited within c0 * n^4 * T rounds, the hole count must never
    rebound, and after convergence no node may sit unoccupied for more than T
    consecutive rounds."""
    ceiling = c0 * tracker.n ** 4 * tracker.T
    problems: list[str] = []
    if tracker.convergence_round is None:
        problems.append(f"hole count never reached <= 1 in {tracker.rounds} rounds")
    elif tracker.convergence_round > ceiling:
        problems.append(
            f"hole count reached <= 1 at round {tracker.convergence_round}, "
            f"past the ceiling {ceiling}"
        )
    if tracker.full_coverage_round is None:
        unvisited = [v for v in range(tracker.n) if tracker.first_visit[v] is None]
        problems.append(f"nodes never visited: {unvisited}")
    elif tracker.full_coverage_round > ceiling:
        problems.append(
            f"full coverage at round {tracker.full_coverage_round}, "
            f"past the ceiling {ceiling}"
        )
    if tracker.relapse_rounds:
        problems.append(
            f"hole count rebounded above 1 at rounds {tracker.relapse_rounds[:5]}"
        )
    if tracker.max_post_gap > tracker.T:
        problems.append(
            f"post-convergence visit gap {tracker.max_post_gap} exceeds T={tracker.T}"
        )
    return CoverageStatus(
        ok=not problems,
        ceiling=ceiling,
        convergence_round=tracker.convergence_round,
        full_coverage_round=tracker.full_coverage_round,
        max_post_gap=tracker.max_post_gap,
        problems=tuple(problems),
    )
