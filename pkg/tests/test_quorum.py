"""Quorum sampling, node assignment arithmetic, propagation tree."""

import math
import random
from collections import Counter

import pytest

from quorummpc.errors import FormationFailure
from quorummpc.field import Field
from quorummpc.circuit import build_graph, parse_circuit
from quorummpc.quorum import (
    QuorumTable,
    assign_nodes,
    default_quorum_size,
    form_quorums,
    quorum_for_node,
    quorum_threshold,
)

BALANCED = (
    "\n".join(f"input {i}" for i in range(1, 9))
    + "\ngate 4 add x1 x2\ngate 5 mul x3 x4\ngate 6 add x5 x6\ngate 7 mul x7 x8\n"
    + "gate 2 add g4 g5\ngate 3 mul g6 g7\ngate 1 add g2 g3\noutput 1\n"
)


def test_no_bad_players_always_succeeds():
    for seed in range(50):
        table = form_quorums(16, set(), 8, random.Random(seed))
        assert table.all_good()
        assert len(table.memberships) == 16


def test_assignment_rule_examples():
    # 8 players, node 9 -> quorum ((9-1) mod 8) + 1 = 1
    assert quorum_for_node(9, 8) == 1
    assert quorum_for_node(8, 8) == 8
    assert quorum_for_node(1, 8) == 1
    assert quorum_for_node(17, 8) == 1


def test_assignment_load_bound():
    graph = build_graph(parse_circuit(BALANCED), 8)
    table = form_quorums(8, set(), 4, random.Random(0))
    mapping = assign_nodes(graph, table)
    loads = Counter(mapping.values())
    assert max(loads.values()) <= math.ceil((7 + 8) / 8)
    assert mapping[9] == 1


def test_assignment_exact_multiple():
    # m = 3n: every quorum serves exactly 4 nodes
    n = 8
    m = 3 * n
    loads = Counter(quorum_for_node(j, n) for j in range(1, m + n + 1))
    assert set(loads.values()) == {4}


def test_assignment_is_pure_function():
    a = [quorum_for_node(j, 16) for j in range(1, 100)]
    b = [quorum_for_node(j, 16) for j in range(1, 100)]
    assert a == b


def test_tree_links():
    table = form_quorums(8, set(), 4, random.Random(1))
    assert table.tree_parent(1) is None
    assert table.tree_children(1) == [2, 3]
    assert table.tree_parent(5) == 2
    assert table.tree_children(5) == []  # 2*5 > 8
    assert table.tree_children(3) == [6, 7]
    assert table.tree_children(4) == [8]


def test_goodness_check_rejects_overloaded_quorum():
    # all players bad except three: every size-4 quorum has >= 1/3 bad
    with pytest.raises(FormationFailure):
        form_quorums(8, set(range(5)), 4, random.Random(2), retries=3)


def test_threshold_convention():
    assert quorum_threshold(4) == 1
    assert quorum_threshold(6) == 1
    assert quorum_threshold(7) == 2
    assert quorum_threshold(10) == 3


def test_default_quorum_size():
    assert default_quorum_size(8) == 6
    assert default_quorum_size(4) == 4  # floor at the minimum viable size
    assert default_quorum_size(128) == 14


def test_formation_failure_rate_within_chernoff_bound():
    n, bad, q = 64, 16, 24
    bad_set = set(range(bad))
    failures = 0
    trials = 10_000
    for seed in range(trials):
        rng = random.Random(f"chernoff:{seed}")
        try:
            form_quorums(n, bad_set, q, rng, retries=0)
        except FormationFailure:
            failures += 1
    bound = math.exp(-2 * q * (1 / 3 - 1 / 4) ** 2) * n
    assert failures / trials <= bound


def test_membership_concentration():
    for n in (16, 64):
        size = default_quorum_size(n)
        table = form_quorums(n, set(), size, random.Random(n))
        worst = max(len(v) for v in table.memberships.values())
        assert worst <= 3 * size


def test_synthetic_formation_cost():
    table = form_quorums(16, set(), 8, random.Random(3))
    assert table.formation_cost_per_player == math.ceil(math.sqrt(16)) * 4


def test_dump_round_trip():
    table = form_quorums(8, {1, 2}, 4, random.Random(1))
    text = table.dump()
    again = QuorumTable.load(text, bad_set={1, 2})
    assert again.quorums == table.quorums
    assert again.dump() == text


def test_quorum_size_larger_than_population_rejected():
    with pytest.raises(FormationFailure):
        form_quorums(4, set(), 8, random.Random(5))
