import io
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridplc.channel import PathLossTable
from gridplc.grid import Branch, Bus, DisconnectedGraphError, GridGraph, dump_grid
from gridplc.planner import (
    MV_DEGREE_MIX,
    GeneratorSpec,
    InfeasibleSpec,
    LinkBudget,
    coverage,
    edge_loss_db,
    generate_topology,
    load_generator_spec,
    load_link_budget,
    place_repeaters,
    verify_plan,
)
from gridplc.planner.config import dump_generator_spec
from gridplc.planner.coverage import CoveragePlan
from gridplc.planner.generate import prufer_tree, quota_counts, tree_feasible_pmf
from gridplc.topology import algebraic_connectivity, clustering_coefficient, degree_pmf, n_components

TABLE = PathLossTable()
LV = LinkBudget(max_loss_db=10.0, segment_class_map={"*": "LV"})
LV_DB_PER_KM = 2.25  # at 100 kHz


def tv_distance(p, q):
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


def chain_with_losses(losses_db, kinds=None):
    """Path graph whose i-th LV branch costs losses_db[i] dB at 100 kHz."""
    n = len(losses_db) + 1
    buses = {str(i + 1): Bus(str(i + 1), 0.4) for i in range(n)}
    kinds = kinds or ["line"] * len(losses_db)
    branches = tuple(
        Branch(str(i + 1), str(i + 2), 1000.0 * loss / LV_DB_PER_KM, kind=kind)
        for i, (loss, kind) in enumerate(zip(losses_db, kinds))
    )
    return GridGraph(buses, branches)


def all_pairs_loss(g, budget):
    """Floyd-Warshall on dB weights; the test-side oracle for reachability."""
    ids = list(g.bus_ids)
    ix = {b: i for i, b in enumerate(ids)}
    d = np.full((len(ids), len(ids)), np.inf)
    np.fill_diagonal(d, 0.0)
    for br in g.active_branches():
        w = edge_loss_db(br, budget, TABLE)
        a, b = ix[br.bus_a], ix[br.bus_b]
        d[a, b] = d[b, a] = min(d[a, b], w)
    for k in range(len(ids)):
        d = np.minimum(d, d[:, [k]] + d[[k], :])
    return ids, d


def brute_force_min_repeaters(g, concentrator, budget):
    ids, d = all_pairs_loss(g, budget)
    within = d <= budget.max_loss_db + 1e-9
    c = ids.index(concentrator)
    others = [i for i in range(len(ids)) if i != c]
    for size in range(len(ids)):
        for subset in itertools.combinations(others, size):
            sources = {c}
            pending = set(subset)
            # repeaters must chain: grow the served set until no repeater can join
            grew = True
            while grew:
                grew = False
                served = within[sorted(sources)].any(axis=0)
                for r in list(pending):
                    if served[r]:
                        sources.add(r)
                        pending.discard(r)
                        grew = True
            if not pending and within[sorted(sources)].any(axis=0).all():
                return size
    raise AssertionError("unreachable")


def test_radial_is_connected_tree():
    for seed in range(10):
        g = generate_topology(GeneratorSpec(n_nodes=120, seed=seed))
        assert g.n_branches == 119 and n_components(g) == 1
        assert clustering_coefficient(g) == 0.0


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 300), st.integers(0, 10**6))
def test_radial_property(n, seed):
    g = generate_topology(GeneratorSpec(n_nodes=n, seed=seed))
    assert g.n_branches == n - 1 and n_components(g) == 1


def test_degree_mix_close_to_target():
    tvs = [tv_distance(degree_pmf(generate_topology(GeneratorSpec(n_nodes=396, seed=s))), MV_DEGREE_MIX)
           for s in range(30)]
    assert max(tvs) <= 0.05


def test_projected_pmf_has_tree_mean():
    q = tree_feasible_pmf(MV_DEGREE_MIX, 396)
    assert sum(q.values()) == pytest.approx(1.0)
    assert sum(k * p for k, p in q.items()) == pytest.approx(2 * 395 / 396)
    counts = quota_counts(q, 396)
    assert sum(counts.values()) == 396
    assert sum(k * c for k, c in counts.items()) == 2 * 395


def test_conditioned_method_still_builds_trees():
    g = generate_topology(GeneratorSpec(n_nodes=200, seed=3, degree_method="conditioned"))
    assert g.n_branches == 199 and n_components(g) == 1


def test_prufer_tree_realizes_degrees(rng):
    degs = np.array([1, 1, 1, 3, 2])
    edges = prufer_tree(degs, rng)
    got = np.zeros(5, dtype=int)
    for a, b in edges:
        got[a] += 1
        got[b] += 1
    assert np.array_equal(got, degs)


def test_pure_ring():
    g = generate_topology(GeneratorSpec(n_nodes=10, topology_kind="ring", seed=0))
    assert g.n_branches == 10
    assert degree_pmf(g) == {2: 1.0}
    L = np.diag([2.0] * 10) - np.roll(np.eye(10), 1, 0) - np.roll(np.eye(10), -1, 0)
    oracle = np.linalg.eigvalsh(L)[1]
    assert algebraic_connectivity(g) == pytest.approx(oracle, abs=1e-9)
    assert oracle == pytest.approx(2 * (1 - math.cos(2 * math.pi / 10)), abs=1e-12)


def test_ring_with_hangers_and_interconnected():
    g = generate_topology(GeneratorSpec(n_nodes=50, topology_kind="ring", ring_size=12, seed=4))
    assert g.n_branches == 50 and n_components(g) == 1
    g = generate_topology(GeneratorSpec(n_nodes=200, topology_kind="interconnected", chord_fraction=0.1, seed=4))
    assert g.n_branches == 199 + 20 and n_components(g) == 1


def test_branch_lengths_exponential():
    g = generate_topology(GeneratorSpec(n_nodes=10_001, branch_length_mean=300.0, seed=11))
    lengths = np.array([b.length for b in g.branches])
    assert 1 / lengths.mean() == pytest.approx(1 / 300, rel=0.05)


def test_generation_is_deterministic():
    spec = GeneratorSpec(n_nodes=300, topology_kind="interconnected", chord_fraction=0.2, seed=99)
    assert dump_grid(generate_topology(spec)) == dump_grid(generate_topology(spec))
    other = GeneratorSpec(n_nodes=300, topology_kind="interconnected", chord_fraction=0.2, seed=100)
    assert dump_grid(generate_topology(spec)) != dump_grid(generate_topology(other))


@pytest.mark.parametrize("kw", [
    dict(n_nodes=10, degree_pmf_target={1: 0.5, 2: 0.4}),
    dict(n_nodes=10, degree_pmf_target={3: 1.0}),
    dict(n_nodes=10, topology_kind="mesh"),
    dict(n_nodes=1),
    dict(n_nodes=10, chord_fraction=0.5),
    dict(n_nodes=10, topology_kind="ring", ring_size=2),
])
def test_infeasible_specs(kw):
    with pytest.raises(InfeasibleSpec):
        generate_topology(GeneratorSpec(**kw))


def test_spec_file_round_trip():
    spec = GeneratorSpec(n_nodes=42, topology_kind="ring", ring_size=8, chord_fraction=0.1, seed=5)
    back = load_generator_spec(io.StringIO(dump_generator_spec(spec)))
    assert back == spec
    assert load_generator_spec(io.StringIO("n_nodes = 5\n"), seed=7).seed == 7
    with pytest.raises(InfeasibleSpec):
        load_generator_spec(io.StringIO("n_nodes = 5\ncolour = red\n"))


def test_edge_loss_examples():
    line = Branch("1", "2", 1000.0)
    assert edge_loss_db(line, LV, TABLE) == pytest.approx(2.25)
    switch = Branch("1", "2", 0.0, kind="switch")
    budget = LinkBudget(max_loss_db=10.0, per_coupler_loss_db=6.0)
    assert edge_loss_db(switch, budget, TABLE) == pytest.approx(6.0)
    blocked = LinkBudget(max_loss_db=10.0, transformer_mode="blocked")
    assert edge_loss_db(Branch("1", "2", 10.0, kind="transformer"), blocked, TABLE) == math.inf
    with pytest.raises(KeyError):
        edge_loss_db(line, LinkBudget(1.0, segment_class_map={"switch": "LV"}), TABLE)


def test_loss_additive_along_path():
    g = chain_with_losses([1.3, 2.9])
    plan = coverage(g, "1", LV, TABLE)
    per = [edge_loss_db(b, LV, TABLE) for b in g.branches]
    assert plan.losses["3"] == pytest.approx(sum(per), abs=1e-12)


def test_three_bus_path_budget_four():
    g = chain_with_losses([2.0, 3.0])
    budget = LinkBudget(4.0, segment_class_map={"*": "LV"})
    plan = coverage(g, "1", budget, TABLE)
    ids, d = all_pairs_loss(g, budget)
    assert plan.reachable == frozenset({"1", "2"})
    assert plan.uncovered == frozenset({"3"})
    assert plan.losses["3"] == pytest.approx(5.0) == pytest.approx(d[0, 2])


def test_budget_extremes(rng):
    g = generate_topology(GeneratorSpec(n_nodes=60, seed=2))
    assert coverage(g, "1", LinkBudget(1e9), TABLE).uncovered == frozenset()
    zero = coverage(g, "1", LinkBudget(0.0), TABLE)
    assert zero.reachable == frozenset({"1"})
    with pytest.raises(KeyError):
        coverage(g, "nope", LinkBudget(1.0), TABLE)


def test_coverage_monotone_in_budget():
    g = generate_topology(GeneratorSpec(n_nodes=80, topology_kind="interconnected", chord_fraction=0.1, seed=8))
    prev = frozenset()
    for budget in np.linspace(0, 20, 21):
        reach = coverage(g, "5", LinkBudget(float(budget), segment_class_map={"*": "LV"}), TABLE).reachable
        assert prev <= reach
        prev = reach


def test_coverage_matches_floyd(rng):
    g = generate_topology(GeneratorSpec(n_nodes=40, topology_kind="interconnected", chord_fraction=0.2, seed=1))
    budget = LinkBudget(3.0, segment_class_map={"*": "LV"})
    plan = coverage(g, "1", budget, TABLE)
    ids, d = all_pairs_loss(g, budget)
    for i, b in enumerate(ids):
        assert plan.losses[b] == pytest.approx(d[0, i], abs=1e-9)


def test_no_repeaters_when_everything_in_range():
    g = chain_with_losses([1.0, 1.0, 1.0])
    plan = place_repeaters(g, "1", LinkBudget(5.0, segment_class_map={"*": "LV"}), TABLE)
    assert plan.repeaters == () and plan.uncovered == frozenset()


def test_uniform_chain_needs_three_repeaters():
    g = chain_with_losses([1.0] * 10)
    budget = LinkBudget(3.0, segment_class_map={"*": "LV"})
    plan = place_repeaters(g, "1", budget, TABLE)
    assert len(plan.repeaters) == 3
    assert plan.repeaters == ("4", "7", "8")  # last pick ties 8, 9, 10; lowest id wins
    assert brute_force_min_repeaters(g, "1", budget) == 3
    assert verify_plan(g, plan, budget, TABLE)


def test_greedy_within_log_bound(rng):
    for trial in range(20):
        n = int(rng.integers(3, 13))
        losses = rng.uniform(0.5, 2.0, n - 1)  # every edge fits the smallest budget
        parents = [int(rng.integers(0, i)) for i in range(1, n)]
        buses = {str(i + 1): Bus(str(i + 1), 0.4) for i in range(n)}
        branches = tuple(Branch(str(p + 1), str(i + 2), 1000.0 * l / LV_DB_PER_KM)
                         for i, (p, l) in enumerate(zip(parents, losses)))
        g = GridGraph(buses, branches)
        budget = LinkBudget(float(rng.uniform(2.0, 5.0)), segment_class_map={"*": "LV"})
        plan = place_repeaters(g, "1", budget, TABLE)
        assert plan.uncovered == frozenset()
        assert verify_plan(g, plan, budget, TABLE)
        opt = brute_force_min_repeaters(g, "1", budget)
        assert len(plan.repeaters) <= opt * math.log(n) + 1e-12, (trial, n, len(plan.repeaters), opt)


def test_place_repeaters_needs_connected_graph():
    g = GridGraph({"1": Bus("1"), "2": Bus("2"), "3": Bus("3")}, (Branch("1", "2", 10.0),))
    with pytest.raises(DisconnectedGraphError):
        place_repeaters(g, "1", LV, TABLE)


def test_verify_plan_rejects_unchained_repeater():
    g = chain_with_losses([1.0] * 6)
    budget = LinkBudget(2.0, segment_class_map={"*": "LV"})
    bad = CoveragePlan("1", {}, frozenset(g.bus_ids), ("6",), frozenset())
    assert not verify_plan(g, bad, budget, TABLE)


def test_blocked_transformer_cuts_coverage():
    g = chain_with_losses([1.0, 1.0, 1.0], kinds=["line", "transformer", "line"])
    passable = LinkBudget(10.0, per_coupler_loss_db=2.0, segment_class_map={"*": "LV"})
    blocked = LinkBudget(10.0, segment_class_map={"*": "LV"}, transformer_mode="blocked")
    assert coverage(g, "1", passable, TABLE).losses["4"] == pytest.approx(5.0)
    plan = coverage(g, "1", blocked, TABLE)
    assert plan.reachable == frozenset({"1", "2"}) and plan.losses["3"] == math.inf
    rep = place_repeaters(g, "1", blocked, TABLE)
    assert rep.uncovered == frozenset({"3", "4"})


def test_plan_rows_statuses():
    g = chain_with_losses([1.0] * 4)
    plan = place_repeaters(g, "1", LinkBudget(2.0, segment_class_map={"*": "LV"}), TABLE)
    statuses = dict((b, s) for b, _, s in plan.rows())
    assert statuses["3"] == "repeater" and statuses["5"] == "reachable"


def test_budget_file():
    text = "max_loss_db = 40\nfrequency = 1e6\nper_coupler_loss_db = 3\nsegment_classes = line:LV, *:MV_overhead\n"
    b = load_link_budget(io.StringIO(text))
    assert b.max_loss_db == 40 and b.segment_class_map == {"line": "LV", "*": "MV_overhead"}
    with pytest.raises(ValueError):
        load_link_budget(io.StringIO("frequency = 1e6\n"))
    with pytest.raises(ValueError):
        load_link_budget(io.StringIO("max_loss_db = -1\n"))
