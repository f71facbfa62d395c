import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from dynexplore.exploration import ExpAlgo
from dynexplore.graphs import Snapshot
from dynexplore.policies import StayAlgorithm
from dynexplore.runtime import CommSpec, Configuration, GLOBAL, step_round
from dynexplore.verification import (
    CoverageTracker,
    SSetPartition,
    check_agent_bound,
    check_gap_condition,
    check_movement_inequality,
    max_agents,
    monitor_coverage,
    monitor_hole_dynamics,
)


def staircase(n):
    return Configuration.from_counts([n - i - 2 for i in range(n - 2)] + [0, 0])


class TestMaxAgents:
    def test_values(self):
        assert max_agents(4) == 3
        assert max_agents(6) == 10
        assert max_agents(9) == 28

    def test_matches_staircase_total(self):
        for n in range(4, 12):
            assert staircase(n).total == max_agents(n)


class TestSSetPartition:
    def test_buckets_by_occupancy(self):
        p = SSetPartition.from_config(Configuration.from_counts([3, 0, 1, 1]))
        assert p.L == 3
        assert p.holes() == frozenset({1})
        assert p.sets[1] == frozenset({2, 3})
        assert p.sets[2] == frozenset()
        assert p.sets[3] == frozenset({0})
        assert p.size(7) == 0

    def test_partition_covers_all_nodes(self):
        c = Configuration.from_counts([2, 2, 0, 1, 0])
        p = SSetPartition.from_config(c)
        seen = sorted(v for s in p.sets for v in s)
        assert seen == list(range(5))


class TestMovementInequality:
    def test_staircase_meets_floor_with_equality(self):
        for n in (5, 6, 9):
            c = staircase(n)
            assert check_movement_inequality(c, list(range(n)), n)

    def test_redistribution_toward_the_front_still_passes(self):
        c = Configuration.from_counts([5, 2, 2, 1, 0, 0])
        order = [0, 1, 2, 3, 4, 5]
        assert check_movement_inequality(c, order, 6)

    def test_drained_prefix_fails(self):
        # one agent leaked from the heaviest node to the tail
        c = Configuration.from_counts([3, 3, 2, 1, 0, 1])
        order = sorted(range(6), key=lambda v: (-c.alpha(v), v))
        assert not check_movement_inequality(c, order, 6)

    def test_only_prefixes_up_to_n_minus_2_matter(self):
        # last two positions carry no constraint
        c = Configuration.from_counts([4, 3, 2, 1, 0, 0])
        assert check_movement_inequality(c, [0, 1, 2, 3, 5, 4], 6)


class TestGapCondition:
    def test_witness_brackets_the_empty_band(self):
        p = SSetPartition.from_config(Configuration.from_counts([3, 1, 0, 0]))
        assert check_gap_condition(p) == (1, 3)

    def test_no_gap_when_counts_are_consecutive(self):
        p = SSetPartition.from_config(Configuration.from_counts([2, 1, 0, 0]))
        assert check_gap_condition(p) is None

    def test_requires_two_holes(self):
        p = SSetPartition.from_config(Configuration.from_counts([4, 1, 1, 0]))
        assert check_gap_condition(p) is None

    def test_exhaustive_overload_always_gaps(self):
        # Any way to cram more than max_agents(4) agents onto at most two of
        # four nodes leaves an empty occupancy band between 0 and the top.
        n, agents = 4, max_agents(4) + 1
        for occupied in itertools.combinations(range(n), 2):
            for split in range(1, agents):
                counts = [0] * n
                counts[occupied[0]] = split
                counts[occupied[1]] = agents - split
                p = SSetPartition.from_config(Configuration.from_counts(counts))
                assert check_gap_condition(p) is not None

    def test_no_false_positive_within_budget(self):
        # the dense staircase with two holes has every level filled
        p = SSetPartition.from_config(staircase(6))
        assert check_gap_condition(p) is None


class TestAgentBound:
    def test_closed_form_values(self):
        assert check_agent_bound(1, 6) == 4  # n - 2
        assert check_agent_bound(4, 6) == max_agents(6)
        assert check_agent_bound(2, 9) == 13

    def test_monotone_in_top_occupancy(self):
        for n in range(4, 10):
            values = [check_agent_bound(L, n) for L in range(1, n - 1)]
            assert values == sorted(values)
            assert values[-1] == max_agents(n)

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            check_agent_bound(0, 6)
        with pytest.raises(ValueError):
            check_agent_bound(5, 6)


class TestHoleDynamics:
    def spec(self):
        return CommSpec(ell_c=GLOBAL, ell_v=1)

    @given(st.integers(3, 8), st.integers(0, 2**32 - 1))
    @settings(max_examples=60, deadline=None)
    def test_exploration_rounds_never_violate(self, n, seed):
        rng = random.Random(seed)
        extra = {tuple(sorted(rng.sample(range(n), 2)))
                 for _ in range(rng.randint(0, n))}
        s = Snapshot.from_adjacency(
            n, {(i, i + 1) for i in range(n - 1)} | extra, rng=rng)
        counts = [rng.randint(0, 3) for _ in range(n)]
        if not any(counts):
            counts[0] = 2
        before = Configuration.from_counts(counts)
        after = step_round(s, before, ExpAlgo(), self.spec()).config
        assert monitor_hole_dynamics(s, before, after) == []

    def test_flags_unfilled_hole(self):
        s = Snapshot.from_adjacency(3, [(0, 1), (1, 2)])
        before = Configuration.from_counts([2, 1, 0])
        after = step_round(s, before, StayAlgorithm(), CommSpec()).config
        violations = monitor_hole_dynamics(s, before, after)
        assert any("no hole filled" in v for v in violations)

    def test_flags_missing_balance_transfer(self):
        s = Snapshot.from_adjacency(2, [(0, 1)])
        before = Configuration.from_counts([3, 1])
        violations = monitor_hole_dynamics(s, before, before)
        assert any("max-to-min transfer" in v for v in violations)

    def test_flags_double_transfer(self):
        s = Snapshot.from_adjacency(2, [(0, 1)])
        before = Configuration.from_counts([4, 1])
        after = Configuration([(1, 2), (3, 4, 5)])
        violations = monitor_hole_dynamics(s, before, after)
        assert any("max-to-min transfer" in v for v in violations)

    def test_flags_hole_created_from_multinode(self):
        s = Snapshot.from_adjacency(3, [(0, 1), (1, 2)])
        before = Configuration([(1, 2), (), (3,)])
        after = Configuration([(), (1,), (2, 3)])
        violations = monitor_hole_dynamics(s, before, after)
        assert any("hole created" in v for v in violations)

    def test_allows_travelling_hole(self):
        # a lone agent stepping into the hole of its component just moves the
        # hole; that is the one sanctioned way to create one
        s = Snapshot.from_adjacency(3, [(0, 1), (1, 2)])
        before = Configuration([(1,), (2,), ()])
        after = Configuration([(1,), (), (2,)])
        assert monitor_hole_dynamics(s, before, after) == []

    def test_spread_below_two_needs_no_motion(self):
        s = Snapshot.from_adjacency(2, [(0, 1)])
        before = Configuration.from_counts([2, 1])
        assert monitor_hole_dynamics(s, before, before) == []


class TestCoverage:
    def feed(self, tracker, rounds):
        for r, counts in enumerate(rounds):
            tracker.record(r, Configuration.from_counts(counts))

    def test_convergence_and_full_coverage_rounds(self):
        t = CoverageTracker(n=3, T=2)
        self.feed(t, [[2, 0, 0], [1, 1, 0], [1, 0, 1]])
        assert t.convergence_round == 1
        assert t.full_coverage_round == 2
        assert t.first_visit == [0, 1, 2]
        status = monitor_coverage(t)
        assert status.ok
        assert status.ceiling == 3 ** 4 * 2

    def test_gap_counts_only_after_convergence(self):
        t = CoverageTracker(n=3, T=3)
        self.feed(t, [[2, 0, 0], [2, 0, 0], [1, 1, 0], [1, 0, 1], [1, 0, 1]])
        # node 2 was empty for the first three rounds, but only the
        # post-convergence stretch counts; node 1's single empty round does
        assert t.max_post_gap == 2
        assert monitor_coverage(t).ok

    def test_rebound_is_flagged(self):
        t = CoverageTracker(n=3, T=1)
        self.feed(t, [[1, 1, 0], [2, 0, 0]])
        assert t.relapse_rounds == [1]
        status = monitor_coverage(t)
        assert not status.ok
        assert any("rebounded" in p for p in status.problems)

    def test_long_gap_is_flagged(self):
        t = CoverageTracker(n=3, T=1)
        self.feed(t, [[1, 1, 0], [1, 1, 0], [1, 1, 0], [1, 0, 1]])
        status = monitor_coverage(t)
        assert status.max_post_gap == 2
        assert any("visit gap" in p for p in status.problems)

    def test_never_converging_run_fails(self):
        t = CoverageTracker(n=3, T=1)
        self.feed(t, [[2, 0, 0], [2, 0, 0]])
        status = monitor_coverage(t)
        assert not status.ok
        assert any("never reached" in p for p in status.problems)
        assert any("never visited" in p for p in status.problems)

    def test_churn_counting(self):
        t = CoverageTracker(n=2, T=1)
        self.feed(t, [[1, 0], [0, 1], [0, 1]])
        assert t.join_events == 2
        assert t.leave_events == 2
