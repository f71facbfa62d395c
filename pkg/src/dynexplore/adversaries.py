"""Algorithm-adaptive worst-case schedule generators.

Three constructions: a two-graph flip that keeps one node out of reach on an
always-connected graph, and two phase-based path shufflers for the
union-connectivity setting (one pure occupancy-counting, one that additionally
re-labels ports against 0-hop-visibility agents).  Each may consult a what-if
oracle: it simulates one full round of the deterministic target algorithm on a
candidate snapshot, inspects the outcome, and discards the copy.
"""
from __future__ import annotations

import copy
import random
from typing import Optional, Sequence

from .graphs import Snapshot
from .runtime import Algorithm, CommSpec, Configuration, RoundResult, step_round


class AdversaryError(ValueError):
    pass


def what_if(
    snapshot: Snapshot,
    config: Configuration,
    algorithm: Algorithm,
    comm_spec: CommSpec,
    memories,
    round_index: int,
) -> RoundResult:
    """Simulate one round on a candidate snapshot without committing anything."""
    return step_round(
        snapshot, config, algorithm, comm_spec,
        copy.deepcopy(dict(memories or {})), round_index,
    )


def order_nodes_by_occupancy(
    config: Configuration,
    paths: Sequence[Sequence[int]],
    orient_triple: bool = False,
) -> list[int]:
    """Flatten a path family into the occupancy ordering w_1, w_2, ...

    Within every 2-node path the higher-occupancy node comes first; ties keep
    the stored orientation.  Singletons keep their place.  A 3-node path keeps
    its stored orientation unless ``orient_triple`` is set, in which case its
    first two nodes are likewise ordered by occupancy.
    """
    out: list[int] = []
    for path in paths:
        if len(path) == 1:
            out.extend(path)
        elif len(path) == 2:
            a, b = path
            out.extend((a, b) if config.alpha(a) >= config.alpha(b) else (b, a))
        elif len(path) == 3:
            a, b, c = path
            if orient_triple and config.alpha(a) < config.alpha(b):
                a, b = b, a
            out.extend((a, b, c))
        else:
            raise AdversaryError(f"unsupported path length {len(path)}")
    return out


# ---------------------------------------------------------------------------
# Two-graph flip on an always-connected topology
# ---------------------------------------------------------------------------

def _check_flip_params(n: int, p: int, ordering: Sequence[int]) -> None:
    if n < 7:
        raise AdversaryError(f"need n >= 7, got {n}")
    if not 6 <= p <= n - 1:
        raise AdversaryError(f"need 6 <= p <= n-1, got p={p}, n={n}")
    if sorted(ordering) != list(range(n)):
        raise AdversaryError("ordering must be a permutation of the node set")


def build_G1(ordering: Sequence[int], n: int, p: int) -> Snapshot:
    """Spine w1 - w_{n-p+1} - ... - w_n with the star Q hanging off w_{n-p+1}."""
    _check_flip_params(n, p, ordering)
    w = lambda i: ordering[i - 1]
    edges = [(w(1), w(n - p + 1), 0, 0)]
    for i in range(n - p + 1, n):
        edges.append((w(i), w(i + 1), 1, 0))
    for i in range(2, n - p + 1):
        edges.append((w(n - p + 1), w(i), i, 0))
    return Snapshot.from_edges(n, edges)


def build_G2(ordering: Sequence[int], n: int, p: int) -> Snapshot:
    """Spine w1 - w_{n-2} - ... - w_{n-p+1} - w_{n-1} - w_n, same star Q.

    The induced subgraph, occupancies, and outgoing ports on the shared stretch
    w_{n-p+1} .. w_{n-2} are identical to those of ``build_G1``.
    """
    _check_flip_params(n, p, ordering)
    w = lambda i: ordering[i - 1]
    edges = [(w(1), w(n - 2), 0, 1)]
    for i in range(n - p + 2, n - 1):
        edges.append((w(i), w(i - 1), 0, 1))
    edges.append((w(n - p + 1), w(n - 1), 0, 0))
    edges.append((w(n - 1), w(n), 1, 0))
    for i in range(2, n - p + 1):
        edges.append((w(n - p + 1), w(i), i, 0))
    return Snapshot.from_edges(n, edges)


class IntervalFlipAdversary:
    """Keeps the last-ordered node two hops from every agent, forever.

    Each round it sorts nodes by occupancy (a designated permanent hole last),
    pre-computes the target algorithm on the first graph variant, and emits
    that variant exactly when it does NOT lead to a dispersed configuration;
    otherwise it emits the second variant, in which the same moves fail to
    disperse.
    """

    def __init__(self, n: int, p: int, hole: Optional[int] = None):
        _check_flip_params(n, p, list(range(n)))
        self.n = n
        self.p = p
        self.hole = (n - 1) if hole is None else hole
        self.conceded = False
        self.last_graph: Optional[str] = None
        self.last_ordering: Optional[tuple[int, ...]] = None

    def ordering(self, config: Configuration) -> list[int]:
        others = sorted(
            (v for v in range(self.n) if v != self.hole),
            key=lambda v: (-config.alpha(v), v),
        )
        return others + [self.hole]

    def next_snapshot(self, r, config, algorithm, comm_spec, memories) -> Snapshot:
        order = self.ordering(config)
        self.last_ordering = tuple(order)
        g1 = build_G1(order, self.n, self.p)
        if config.is_dispersed():
            self.conceded = True
            self.last_graph = "G1"
            return g1
        probe = what_if(g1, config, algorithm, comm_spec, memories, r)
        if probe.config.is_dispersed():
            self.last_graph = "G2"
            return build_G2(order, self.n, self.p)
        self.last_graph = "G1"
        return g1


# ---------------------------------------------------------------------------
# Phase-based path shufflers for union connectivity
# ---------------------------------------------------------------------------

def _split(pairs, beta):
    """Per pair: (winner, loser) by end-of-round counts, ties keep stored order."""
    oriented = [(a, b) if beta[a] >= beta[b] else (b, a) for a, b in pairs]
    return [w for w, _ in oriented], [l for _, l in oriented]


def _expected_initial(n: int, extra_agent: bool) -> tuple[int, ...]:
    counts = [n - i - 2 for i in range(n - 2)]
    counts += [1, 0] if extra_agent else [0, 0]
    return tuple(counts)


class _PhasedPathAdversary:
    """Common machinery: pair phases alternating with head/pairs/triple phases.

    Node roles: ``pairs`` during even phases (the last pair, or the trailing
    singleton and isolated node, covering the permanently unvisited node);
    ``head``/``mid_pairs``/``triple`` during odd phases.  Boundary rounds
    re-wire paths from the observed end-of-round occupancies: each new path
    couples the loser of one old pair with the winner of the next, so prefix
    occupancy sums never drop below their initial values.
    """

    def __init__(self, n: int, T: int, extra_agent: bool):
        if n < 4 or n % 2:
            raise AdversaryError(f"need even n >= 4, got {n}")
        if T < 2:
            raise AdversaryError(f"need T >= 2, got {T}")
        self.n = n
        self.T = T
        self.k = n // 2
        self.extra_agent = extra_agent
        self.vn = n - 1
        self.state = "pairs"
        self.head: Optional[int] = None
        self.mid_pairs: list[tuple[int, int]] = []
        self.triple: Optional[tuple[int, int, int]] = None
        self.last_boundary: Optional[tuple[str, int]] = None
        self.flipped = False
        if extra_agent:
            self.pairs = [(2 * j, 2 * j + 1) for j in range(self.k - 1)]
            self.single: Optional[int] = n - 2
        else:
            self.pairs = [(2 * j, 2 * j + 1) for j in range(self.k)]
            self.single = None

    # -- hooks ---------------------------------------------------------------

    def _precompute_flip(self, r, config, algorithm, comm_spec, memories) -> None:
        """Override to re-label triple ports from a what-if run."""

    def _check_target(self, comm_spec: CommSpec) -> None:
        pass

    # -- public --------------------------------------------------------------

    def current_paths(self) -> list[tuple[int, ...]]:
        if self.state == "pairs":
            paths: list[tuple[int, ...]] = [tuple(p) for p in self.pairs]
            if self.single is not None:
                paths.append((self.single,))
                paths.append((self.vn,))
            return paths
        paths = [(self.head,)] + [tuple(p) for p in self.mid_pairs]
        paths.append(self.triple)
        return paths

    def current_ordering(self, config: Configuration) -> list[int]:
        return order_nodes_by_occupancy(
            config, self.current_paths(), orient_triple=self.extra_agent
        )

    def next_snapshot(self, r, config, algorithm, comm_spec, memories) -> Snapshot:
        self.last_boundary = None
        if r == 0:
            self._check_target(comm_spec)
            expected = _expected_initial(self.n, self.extra_agent)
            if config.alpha_vector() != expected:
                raise AdversaryError(
                    f"initial occupancy must be {expected}, got {config.alpha_vector()}"
                )
        # Phase blocks last T-1 rounds, so every window of T consecutive
        # rounds straddles a boundary; the union of the graphs on the two
        # sides of any boundary is a spanning path.
        period = self.T - 1
        i = r // period
        at_boundary = r % period == 0 and i >= 1
        beta = config.alpha_vector()
        if i % 2 == 1:
            if at_boundary:
                self._to_triple_phase(beta)
                self.last_boundary = ("odd", r)
            else:
                self._mid_phase(beta)
            self.flipped = False
            self._precompute_flip(r, config, algorithm, comm_spec, memories)
            return self._triple_snapshot()
        if at_boundary:
            self._to_pairs_phase(beta)
            self.last_boundary = ("even", r)
        return self._pairs_snapshot()

    # -- phase transitions ---------------------------------------------------

    def _to_triple_phase(self, beta) -> None:
        if self.single is None:
            working = list(self.pairs[:-1])  # drop the all-hole last pair
            mid = self.pairs[-1][0]
        else:
            working = list(self.pairs)
            mid = self.single
        winners, losers = _split(working, beta)
        self.head = winners[0]
        self.mid_pairs = [
            (losers[j - 1], winners[j]) for j in range(1, len(working))
        ]
        self.triple = (losers[-1], mid, self.vn)
        self.state = "triple"

    def _mid_phase(self, beta) -> None:
        far, mid, end = self.triple
        if beta[mid] > beta[far]:
            self.triple = (mid, far, end)

    def _to_pairs_phase(self, beta) -> None:
        far, mid, end = self.triple
        partner = mid if beta[mid] > beta[far] else far
        leftover = far if partner == mid else mid
        winners, losers = _split(self.mid_pairs, beta)
        if self.mid_pairs:
            new_pairs = [(self.head, winners[0])]
            new_pairs += [
                (losers[j - 1], winners[j]) for j in range(1, len(self.mid_pairs))
            ]
            new_pairs.append((losers[-1], partner))
        else:
            new_pairs = [(self.head, partner)]
        if self.extra_agent:
            self.single = leftover
        else:
            new_pairs.append((leftover, self.vn))
        self.pairs = new_pairs
        self.state = "pairs"

    # -- snapshots -----------------------------------------------------------

    def _pairs_snapshot(self) -> Snapshot:
        edges = [(a, b, 0, 0) for a, b in self.pairs]
        return Snapshot.from_edges(self.n, edges)

    def _triple_snapshot(self) -> Snapshot:
        far, mid, end = self.triple
        edges = [(a, b, 0, 0) for a, b in self.mid_pairs]
        if self.flipped:
            edges += [(far, mid, 0, 1), (mid, end, 0, 0)]
        else:
            edges += [(far, mid, 0, 0), (mid, end, 1, 0)]
        return Snapshot.from_edges(self.n, edges)


class CTImpossibilityAdversary(_PhasedPathAdversary):
    """Keeps one node unvisited against any algorithm, by occupancy counting.

    Requires the staircase start: node i holds n-i-2 agents, the last two nodes
    empty.  Needs no what-if oracle; only observed end-of-round occupancies.
    During odd phases the lone agent of the 3-node path (there is at most one)
    is kept at the far end by re-wiring after every crossing.
    """

    def __init__(self, n: int, T: int):
        super().__init__(n, T, extra_agent=False)


class CTPortFlipAdversary(_PhasedPathAdversary):
    """Defeats one extra agent by re-labelling ports at the 3-node path middle.

    Requires the staircase start plus one agent on the second-to-last node.
    Before committing an odd-phase snapshot it what-if simulates the round; if
    an agent at the middle would step onto the protected end node, the middle's
    two port labels are swapped.  The swap is invisible to 0-hop-visibility
    agents, so the construction refuses targets with wider visibility.
    """

    def __init__(self, n: int, T: int):
        super().__init__(n, T, extra_agent=True)

    def _check_target(self, comm_spec: CommSpec) -> None:
        if comm_spec.ell_v != 0:
            raise AdversaryError(
                "port re-labelling is only sound against 0-hop visibility"
            )

    def _precompute_flip(self, r, config, algorithm, comm_spec, memories) -> None:
        far, mid, end = self.triple
        if config.alpha(mid) == 0:
            return
        probe = what_if(
            self._triple_snapshot(), config, algorithm, comm_spec, memories, r
        )
        if any(m.src == mid and m.dst == end for m in probe.moves):
            self.flipped = True


class RandomCTAdversary:
    """Seeded random schedule satisfying union connectivity with window T.

    Every T-th round is a uniformly random spanning path (so every window of T
    consecutive rounds unions to a connected graph); other rounds carry a
    random partial matching.  Port labels are freshly randomized each round.
    """

    def __init__(self, n: int, T: int, seed: int):
        if n < 2 or T < 1:
            raise AdversaryError("need n >= 2 and T >= 1")
        self.n = n
        self.T = T
        self.rng = random.Random(seed)

    def next_snapshot(self, r, config, algorithm, comm_spec, memories) -> Snapshot:
        if r % self.T == self.T - 1:
            perm = list(range(self.n))
            self.rng.shuffle(perm)
            edges = list(zip(perm, perm[1:]))
        else:
            nodes = list(range(self.n))
            self.rng.shuffle(nodes)
            edges = [
                (a, b)
                for a, b in zip(nodes[::2], nodes[1::2])
                if self.rng.random() < 0.5
            ]
        return Snapshot.from_adjacency(self.n, edges, rng=self.rng)
