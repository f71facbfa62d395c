import random

import pytest
from hypothesis import given, settings, strategies as st

from dynexplore.graphs import Snapshot
from dynexplore.policies import ScriptAlgorithm, StayAlgorithm
from dynexplore.runtime import (
    Algorithm,
    CommSpec,
    Configuration,
    FULL,
    GLOBAL,
    STAY,
    SimulationError,
    SpecError,
    deliver_messages,
    move_via,
    step_round,
    visibility_region,
)


def path(n):
    return Snapshot.from_adjacency(n, [(i, i + 1) for i in range(n - 1)])


class TestCommSpec:
    def test_accepts_keywords_and_hops(self):
        CommSpec(ell_c=GLOBAL, ell_v=2)
        CommSpec(ell_c=0, ell_v=FULL)

    def test_rejects_bad_values(self):
        with pytest.raises(SpecError):
            CommSpec(ell_c=-1)
        with pytest.raises(SpecError):
            CommSpec(ell_v="everything")


class TestConfiguration:
    def test_from_counts_assigns_consecutive_ids(self):
        c = Configuration.from_counts([2, 0, 1])
        assert c.placement == ((1, 2), (), (3,))
        assert c.alpha_vector() == (2, 0, 1)
        assert c.min_id_at(0) == 1
        assert c.holes() == [1]
        assert c.multinodes() == [0]
        assert not c.is_dispersed()
        assert c.total == 3

    def test_duplicate_ids_rejected(self):
        with pytest.raises(ValueError):
            Configuration([(1,), (1,)])

    def test_equality_and_hash(self):
        a = Configuration([(2, 1), ()])
        b = Configuration([(1, 2), ()])
        assert a == b and hash(a) == hash(b)


class TestVisibilityRegion:
    def test_zero_hop_sees_degree_but_not_neighbors(self):
        s = path(3)
        c = Configuration.from_counts([1, 2, 0])
        region = visibility_region(s, c, 1, 0)
        assert region.center.degree == 2
        assert region.center.agents == (2, 3)
        assert len(region.nodes) == 1
        assert region.edges == frozenset()

    def test_one_hop_sees_ports_both_ways(self):
        s = path(3)
        c = Configuration.from_counts([1, 2, 0])
        region = visibility_region(s, c, 1, 1)
        assert len(region.nodes) == 3
        targets = region.port_targets(0)
        assert set(targets) == {0, 1}
        left = region.nodes[targets[0]]
        assert left.agents == (1,)

    def test_full_visibility_stops_at_component(self):
        s = Snapshot.from_adjacency(5, [(0, 1), (2, 3)])
        c = Configuration.from_counts([1, 1, 1, 1, 1])
        region = visibility_region(s, c, 0, FULL)
        assert len(region.nodes) == 2

    def test_canonical_labels_ignore_node_identity(self):
        # Two paths with mirrored node ids but identical port structure and
        # occupancies look the same to the agents.
        a = Snapshot.from_edges(3, [(0, 1, 0, 0), (1, 2, 1, 0)])
        b = Snapshot.from_edges(3, [(2, 1, 0, 0), (1, 0, 1, 0)])
        ca = Configuration([(1,), (2,), (3,)])
        cb = Configuration([(3,), (2,), (1,)])
        assert visibility_region(a, ca, 1, 1) == visibility_region(b, cb, 1, 1)
        assert visibility_region(a, ca, 1, 1).node_ids != \
            visibility_region(b, cb, 1, 1).node_ids

    def test_regions_differ_when_ports_differ(self):
        a = Snapshot.from_edges(3, [(0, 1, 0, 0), (1, 2, 1, 0)])
        b = Snapshot.from_edges(3, [(0, 1, 0, 1), (1, 2, 0, 0)])
        c = Configuration.from_counts([1, 1, 1])
        assert visibility_region(a, c, 1, 1) != visibility_region(b, c, 1, 1)


class TestMessaging:
    def test_zero_hop_is_colocation_only(self):
        s = path(3)
        c = Configuration([(1, 2), (3,), ()])
        inboxes = deliver_messages(s, c, {1: "x", 3: "y"}, 0)
        assert inboxes[2] == ((1, "x"),)
        assert inboxes[1] == ()
        assert inboxes[3] == ()

    def test_global_stays_within_component(self):
        s = Snapshot.from_adjacency(4, [(0, 1), (2, 3)])
        c = Configuration([(1,), (2,), (3,), ()])
        inboxes = deliver_messages(s, c, {1: "a", 3: "b"}, GLOBAL)
        assert inboxes[2] == ((1, "a"),)
        assert inboxes[3] == ()
        assert inboxes[1] == ()

    def test_inboxes_sorted_by_sender(self):
        s = path(2)
        c = Configuration([(3, 5), (1,)])
        inboxes = deliver_messages(s, c, {5: "v", 3: "u", 1: "w"}, 1)
        assert inboxes[1] == ((3, "u"), (5, "v"))

    def test_none_messages_dropped(self):
        s = path(2)
        c = Configuration([(1,), (2,)])
        inboxes = deliver_messages(s, c, {1: None, 2: "m"}, 1)
        assert inboxes[1] == ((2, "m"),)
        assert inboxes[2] == ()


class TestStepRound:
    def test_simultaneous_swap(self):
        s = path(2)
        c = Configuration([(1,), (2,)])
        algo = ScriptAlgorithm({0: {1: 0, 2: 0}})
        result = step_round(s, c, algo, CommSpec(), round_index=0)
        assert result.config == Configuration([(2,), (1,)])
        assert len(result.moves) == 2

    def test_moves_use_frozen_round_start_state(self):
        # Both agents at node 0 decide from the same snapshot of the world;
        # the first mover does not change what the second one saw.
        s = path(3)
        c = Configuration([(1, 2), (), ()])
        algo = ScriptAlgorithm({0: {1: 0, 2: 0}})
        result = step_round(s, c, algo, CommSpec())
        assert result.config.alpha_vector() == (0, 2, 0)

    def test_invalid_port_raises(self):
        s = path(2)
        c = Configuration([(1,), ()])
        algo = ScriptAlgorithm({0: {1: 5}})
        with pytest.raises(SimulationError):
            step_round(s, c, algo, CommSpec())

    def test_memory_round_trip(self):
        class Counter(Algorithm):
            def decide(self, agent_id, memory, region, inbox):
                return STAY, (memory or 0) + 1

        s = path(2)
        c = Configuration([(1,), (2,)])
        algo = Counter()
        mem = {}
        for r in range(3):
            result = step_round(s, c, algo, CommSpec(), mem, r)
            mem = result.memories
        assert mem == {1: 3, 2: 3}

    def test_same_round_communication_reaches_decide(self):
        class Echo(Algorithm):
            def communicate(self, agent_id, memory, region):
                return agent_id

            def decide(self, agent_id, memory, region, inbox):
                return STAY, tuple(sender for sender, _ in inbox)

        s = path(2)
        c = Configuration([(1,), (2,)])
        result = step_round(s, c, Echo(), CommSpec(ell_c=1))
        assert result.memories == {1: (2,), 2: (1,)}

    @given(st.integers(2, 8), st.integers(0, 2**32 - 1))
    @settings(max_examples=40, deadline=None)
    def test_agents_conserved_under_random_moves(self, n, seed):
        rng = random.Random(seed)
        s = Snapshot.from_adjacency(
            n, {(min(u, v), max(u, v))
                for u, v in (rng.sample(range(n), 2) for _ in range(n))},
            rng=rng)
        counts = [rng.randint(0, 2) for _ in range(n)]
        c = Configuration.from_counts(counts)
        moves = {}
        for v in range(n):
            for a in c.agents_at(v):
                if s.degree(v) and rng.random() < 0.5:
                    moves[a] = rng.randrange(s.degree(v))
        result = step_round(s, c, ScriptAlgorithm({0: moves}), CommSpec())
        assert result.config.total == c.total
        assert sorted(result.config.agent_ids()) == sorted(c.agent_ids())


class TestAlgorithmContract:
    def test_stay_never_moves(self):
        s = path(4)
        c = Configuration.from_counts([2, 1, 0, 1])
        result = step_round(s, c, StayAlgorithm(), CommSpec())
        assert result.moves == ()
        assert result.config == c

    def test_script_respects_rounds(self):
        s = path(2)
        c = Configuration([(1,), ()])
        algo = ScriptAlgorithm({1: {1: 0}})
        r0 = step_round(s, c, algo, CommSpec(), round_index=0)
        assert r0.moves == ()
        r1 = step_round(s, c, algo, CommSpec(), round_index=1)
        assert len(r1.moves) == 1
