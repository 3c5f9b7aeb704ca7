import random

import pytest
from hypothesis import given, settings, strategies as st

from sigmado import fixtures
from sigmado.graphs import ALLOW_CLUSTER_LEVEL, GraphError, MixedGraph, Step, Walk
from sigmado.separation import (
    SeparationQuery,
    d_separated,
    find_active_walk,
    sigma_blocked,
    sigma_separated,
    sigma_separated_oracle,
)

from _oracles import random_dag_mixed, random_mixed_graph


def walk_of(g, *hops):
    """hops: (frm, to, kind) with kind 'f' forward, 'r' reverse, 'b' bidirected."""
    vertices = [hops[0][0]] + [h[1] for h in hops]
    steps = []
    for frm, to, kind in hops:
        if kind == "f":
            steps.append(Step("directed", frm, to, True))
        elif kind == "r":
            steps.append(Step("directed", to, frm, False))
        else:
            steps.append(Step("bidirected", frm, to, True))
    return Walk(tuple(vertices), tuple(steps))


class TestSigmaBlocked:
    def test_chain_blocked_by_middle(self):
        g = MixedGraph(["A", "B", "C"], [("A", "B"), ("B", "C")], [])
        walk = walk_of(g, ("A", "B", "f"), ("B", "C", "f"))
        assert sigma_blocked(g, walk, {"B"}) is True
        assert sigma_blocked(g, walk, set()) is False

    def test_chain_inside_cycle_not_blocked(self):
        g = MixedGraph(["A", "B", "C"], [("A", "B"), ("B", "C"), ("C", "A")], [])
        walk = walk_of(g, ("A", "B", "f"), ("B", "C", "f"))
        # the head-in/tail-out side condition: C is in B's component
        assert sigma_blocked(g, walk, {"B"}) is False

    def test_collider_blocked_without_conditioning(self):
        g = MixedGraph(["A", "B", "C"], [("A", "B"), ("C", "B")], [])
        walk = walk_of(g, ("A", "B", "f"), ("B", "C", "r"))
        assert sigma_blocked(g, walk, set()) is True
        assert sigma_blocked(g, walk, {"B"}) is False

    def test_endpoint_clause(self):
        g = MixedGraph(["A", "B"], [("A", "B")], [])
        walk = walk_of(g, ("A", "B", "f"))
        assert sigma_blocked(g, walk, {"A"}) is True
        assert sigma_blocked(g, walk, {"B"}) is True

    def test_malformed_walk(self):
        g = MixedGraph(["A", "B"], [("A", "B")], [])
        bad = walk_of(g, ("B", "A", "f"))
        with pytest.raises(GraphError):
            sigma_blocked(g, bad, set())


class TestSigmaSeparated:
    def test_example_fig2a(self):
        g = fixtures.load("fig2a")
        assert sigma_separated(g, SeparationQuery.of("C_W", "C_Y", ["C_X"]))

    def test_example_fig2c(self):
        g = fixtures.load("fig2c")
        assert sigma_separated(g, SeparationQuery.of("C_Z", "C_Y", ["C_X", "C_W"]))

    def test_edgeless_graph_separated(self):
        g = MixedGraph(["A", "B", "C"], [], [])
        assert sigma_separated(g, SeparationQuery.of("A", "B"))
        assert sigma_separated(g, SeparationQuery.of("A", "B", ["C"]))

    def test_conditioning_can_open_and_close(self):
        g = MixedGraph(["A", "B", "C"], [("A", "B"), ("C", "B")], [])
        assert sigma_separated(g, SeparationQuery.of("A", "C"))
        assert not sigma_separated(g, SeparationQuery.of("A", "C", ["B"]))

    def test_do_convention_mutilates_then_conditions(self):
        # conditioning via do() removes incoming arrows before testing
        g = MixedGraph(["A", "B", "C"], [("A", "B"), ("B", "C")], [("A", "B")])
        assert not sigma_separated(g, SeparationQuery.of("A", "C"))
        assert sigma_separated(g, SeparationQuery.of("A", "C", z_do=["B"]))

    def test_overlapping_sets_rejected(self):
        g = MixedGraph(["A", "B"], [("A", "B")], [])
        with pytest.raises(GraphError, match="overlap"):
            sigma_separated(g, SeparationQuery.of("A", "B", ["A"]))
        with pytest.raises(GraphError, match="nonempty"):
            sigma_separated(g, SeparationQuery.of([], "B"))

    def test_cluster_self_loops_change_verdicts(self):
        # without self-loop, conditioning the middle blocks the chain; with a
        # directed self-loop d-sep style blocking still holds under sigma
        plain = MixedGraph(["A", "B", "C"], [("A", "B"), ("B", "C")], [],
                           ALLOW_CLUSTER_LEVEL)
        looped = MixedGraph(["A", "B", "C"],
                            [("A", "B"), ("B", "C"), ("B", "B")], [],
                            ALLOW_CLUSTER_LEVEL)
        q = SeparationQuery.of("A", "C", ["B"])
        assert sigma_separated(plain, q)
        # B's own self-loop keeps B in its own component only; the side
        # condition needs the *neighbour* in B's component, so still blocked
        assert sigma_separated(looped, q)


class TestOracle:
    def test_chain(self):
        g = MixedGraph(["A", "B", "C"], [("A", "B"), ("B", "C")], [])
        assert sigma_separated_oracle(g, SeparationQuery.of("A", "C", ["B"]))

    def test_two_cycle_connected(self):
        g = MixedGraph(["A", "B"], [("A", "B"), ("B", "A")], [])
        assert not sigma_separated_oracle(g, SeparationQuery.of("A", "B"))

    def test_bound(self):
        g = random_mixed_graph(random.Random(1), 9, p_dir=0.1)
        with pytest.raises(GraphError, match="bound"):
            sigma_separated_oracle(g, SeparationQuery.of("V0", "V1"))

    def test_agrees_with_machine_on_random_instances(self):
        rng = random.Random(4242)
        for trial in range(300):
            g = random_mixed_graph(rng, rng.randint(2, 6), p_dir=0.25, p_bi=0.15,
                                   self_loops=bool(trial % 2))
            pool = list(g.vertices)
            rng.shuffle(pool)
            x, y = {pool[0]}, {pool[1]}
            w = {v for v in pool[2:] if rng.random() < 0.35}
            z = {v for v in pool[2:] if v not in w and rng.random() < 0.25}
            q = SeparationQuery.of(x, y, w, z)
            assert sigma_separated(g, q) == sigma_separated_oracle(g, q)


class TestDSeparation:
    def test_collider(self):
        g = MixedGraph(["A", "B", "C"], [("A", "B"), ("C", "B")], [])
        assert d_separated(g, SeparationQuery.of("A", "C"))
        assert not d_separated(g, SeparationQuery.of("A", "C", ["B"]))

    def test_cyclic_input_rejected(self):
        g = MixedGraph(["A", "B"], [("A", "B"), ("B", "A")], [])
        with pytest.raises(GraphError, match="acyclic"):
            d_separated(g, SeparationQuery.of("A", "B"))
        looped = MixedGraph(["A", "B"], [("A", "B"), ("A", "A")], [],
                            ALLOW_CLUSTER_LEVEL)
        with pytest.raises(GraphError, match="acyclic"):
            d_separated(looped, SeparationQuery.of("A", "B"))

    def test_matches_sigma_on_random_dags(self):
        rng = random.Random(77)
        for _ in range(150):
            g = random_dag_mixed(rng, rng.randint(3, 7))
            pool = list(g.vertices)
            rng.shuffle(pool)
            q = SeparationQuery.of(
                {pool[0]}, {pool[1]},
                {v for v in pool[2:] if rng.random() < 0.4},
                {v for v in pool[2:] if rng.random() < 0.2
                 and v not in pool[2:][:0]} - {v for v in pool[2:] if rng.random() < 0.4})
            try:
                q.validate(g)
            except GraphError:
                continue
            assert d_separated(g, q) == sigma_separated(g, q)


class TestWitness:
    def test_two_cycle_walk(self):
        g = MixedGraph(["A", "B"], [("A", "B"), ("B", "A")], [])
        walk = find_active_walk(g, SeparationQuery.of("A", "B"))
        assert walk.vertices == ("A", "B")

    def test_fig3a_extended_witness_through_cycle(self):
        g = fixtures.load("fig3a").extend(["C_X"])
        walk = find_active_walk(g, SeparationQuery.of("I_C_X", "C_Y", ["C_X"]))
        assert walk is not None
        assert walk.vertices[0] == "I_C_X"
        assert walk.vertices[-1] == "C_Y"
        assert "C_X" in walk.vertices
        # and it is genuinely active, clause by clause
        assert sigma_blocked(g, walk, {"C_X"}) is False

    def test_separated_query_has_no_witness(self):
        g = fixtures.load("fig2a")
        assert find_active_walk(g, SeparationQuery.of("C_W", "C_Y", ["C_X"])) is None

    def test_witnesses_are_always_active(self):
        rng = random.Random(31337)
        for _ in range(200):
            g = random_mixed_graph(rng, rng.randint(3, 6), self_loops=True)
            pool = list(g.vertices)
            rng.shuffle(pool)
            w = {v for v in pool[2:] if rng.random() < 0.3}
            z = {v for v in pool[2:] if v not in w and rng.random() < 0.2}
            q = SeparationQuery.of({pool[0]}, {pool[1]}, w, z)
            walk = find_active_walk(g, q)
            if walk is None:
                assert sigma_separated(g, q)
            else:
                cut = g.intervene(z) if z else g
                assert not sigma_blocked(cut, walk, w | z)


class TestMonotoneSanity:
    def test_adding_edges_never_separates(self):
        rng = random.Random(55)
        for _ in range(25):
            names = [f"V{i}" for i in range(5)]
            g = MixedGraph(names, [], [], ALLOW_CLUSTER_LEVEL)
            q = SeparationQuery.of("V0", "V1", {"V2"}, {"V3"})
            connected = not sigma_separated(g, q)
            directed, bidirected = set(), set()
            for _ in range(10):
                a, b = rng.choice(names), rng.choice(names)
                if rng.random() < 0.7:
                    directed.add((a, b))
                else:
                    bidirected.add(tuple(sorted((a, b))))
                g = MixedGraph(names, sorted(directed), sorted(bidirected),
                               ALLOW_CLUSTER_LEVEL)
                now_connected = not sigma_separated(g, q)
                assert now_connected or not connected
                connected = now_connected


# hypothesis strategies: small random mixed graphs plus a disjoint query
@st.composite
def graph_and_query(draw):
    n = draw(st.integers(min_value=2, max_value=5))
    names = [f"V{i}" for i in range(n)]
    pairs = [(a, b) for a in names for b in names if a != b]
    directed = draw(st.sets(st.sampled_from(pairs), max_size=8)) if pairs else set()
    bipairs = [(a, b) for i, a in enumerate(names) for b in names[i + 1:]]
    bidirected = draw(st.sets(st.sampled_from(bipairs), max_size=5)) if bipairs else set()
    g = MixedGraph(names, sorted(directed), sorted(bidirected), ALLOW_CLUSTER_LEVEL)
    shuffled = draw(st.permutations(names))
    x, y = shuffled[0], shuffled[1]
    w = set(draw(st.sets(st.sampled_from(shuffled[2:]), max_size=3))) if n > 2 else set()
    z = {v for v in shuffled[2:] if v not in w and draw(st.booleans())}
    return g, SeparationQuery.of({x}, {y}, w, z)


@given(graph_and_query())
@settings(max_examples=120, deadline=None)
def test_property_machine_equals_oracle(gq):
    g, q = gq
    assert sigma_separated(g, q) == sigma_separated_oracle(g, q)


@given(graph_and_query())
@settings(max_examples=120, deadline=None)
def test_property_separation_is_symmetric(gq):
    g, q = gq
    swapped = SeparationQuery(q.y, q.x, q.w, q.z_do)
    assert sigma_separated(g, q) == sigma_separated(g, swapped)
