"""End-to-end protocol runs: correctness, invariants, adversaries, output flow."""

import random

import pytest

from quorummpc.errors import NoMajority
from quorummpc.field import Field, DEFAULT_PRIME
from quorummpc.circuit import parse_circuit, random_circuit
from quorummpc.protocol import majority_filter, run_protocol
from quorummpc.quorum import QuorumTable

F101 = Field(101)
F61 = Field(DEFAULT_PRIME)

TWO_GATES = (
    "input 1\ninput 2\ninput 3\ninput 4\n"
    "gate 2 mul x1 x2\ngate 3 add x3 x4\ngate 1 add g2 g3\noutput 1\n"
)

BALANCED = (
    "\n".join(f"input {i}" for i in range(1, 9))
    + "\ngate 4 add x1 x2\ngate 5 mul x3 x4\ngate 6 add x5 x6\ngate 7 mul x7 x8\n"
    + "gate 2 add g4 g5\ngate 3 mul g6 g7\ngate 1 add g2 g3\noutput 1\n"
)


def assert_node_invariant(result, circuit, field):
    """Omniscient check: unanimity of s and s - r = V at every node."""
    _, values = circuit.eval_plain(field, result.committed_inputs)
    for node, state in result.node_states.items():
        bad = set()  # recompute good slots against the run's adversary
        seen = {
            v for pos, v in state.s_value.items() if v is not None
        }
        assert len(seen) == 1, f"node {node}: divergent masked values {seen}"
        s = seen.pop()
        r = result.harness["masks"][node]
        assert (s - r) % field.p == values[node], f"node {node} invariant broke"


def test_paper_shape_end_to_end():
    c = parse_circuit(BALANCED)
    xs = [2, 3, 4, 5, 6, 7, 8, 9]
    expect, _ = c.eval_plain(F101, xs)
    result = run_protocol(F101, c, xs, seed=1)
    assert all(v == expect for v in result.outputs.values())
    assert result.committed_inputs == xs
    assert_node_invariant(result, c, F101)


def test_small_circuit_multiple_seeds():
    c = parse_circuit(TWO_GATES)
    for seed in range(5):
        rng = random.Random(seed)
        xs = [rng.randrange(101) for _ in range(4)]
        expect, _ = c.eval_plain(F101, xs)
        result = run_protocol(F101, c, xs, seed=seed, quorum_size=4)
        assert all(v == expect for v in result.outputs.values()), f"seed {seed}"
        assert_node_invariant(result, c, F101)


def test_random_circuit_large_field():
    c = random_circuit(8, 16, 5, random.Random(3))
    xs = list(range(11, 19))
    expect, _ = c.eval_plain(F61, xs)
    result = run_protocol(F61, c, xs, seed=4)
    assert all(v == expect for v in result.outputs.values())
    assert_node_invariant(result, c, F61)


def test_forced_quorum_collisions():
    # every node hosted by the same four players: neighbouring ovals share
    # one quorum and the run still lands on the right output
    c = parse_circuit(TWO_GATES)
    table = QuorumTable(n=4, size=4, quorums=[[0, 1, 2, 3]] * 4)
    xs = [5, 6, 7, 8]
    expect, _ = c.eval_plain(F101, xs)
    result = run_protocol(F101, c, xs, seed=5, table=table)
    assert all(v == expect for v in result.outputs.values())


@pytest.mark.parametrize("strategy", ["silent", "garbage", "equivocate", "share-corrupt"])
def test_adversarial_strategies_cannot_corrupt_output(strategy):
    # bad players choose (or forfeit) their own inputs; the reference is
    # plain evaluation of whatever got committed
    c = parse_circuit(TWO_GATES)
    xs = [9, 10, 11, 12]
    bad = {1}
    for seed in range(3):
        result = run_protocol(
            F61, c, xs, bad_set=bad, strategy=strategy, seed=seed,
            quorum_size=4, formation_retries=50,
        )
        expect, _ = c.eval_plain(F61, result.committed_inputs)
        for i, committed in enumerate(result.committed_inputs):
            if i not in bad:
                assert committed == xs[i]  # good inputs commit faithfully
        for player, value in result.outputs.items():
            if player in bad:
                continue
            assert value == expect, f"{strategy} seed {seed} player {player}"


def test_inconsistent_commit_resolves_to_default():
    c = parse_circuit(TWO_GATES)
    xs = [9, 10, 11, 12]
    bad = {0}  # player 0 commits inconsistently; its input becomes 0
    for seed in range(60):
        try:
            result = run_protocol(
                F61, c, xs, bad_set=bad, strategy="inconsistent-commit",
                seed=seed, quorum_size=4, formation_retries=50,
            )
        except Exception:
            raise
        if 1 in result.harness["defaults"]:
            assert result.committed_inputs[0] == 0
            expect, _ = c.eval_plain(F61, [0, 10, 11, 12])
            for player, value in result.outputs.items():
                if player not in bad:
                    assert value == expect
            return
    raise AssertionError("default substitution never triggered")


def test_silent_committer_gets_default():
    c = parse_circuit(TWO_GATES)
    xs = [9, 10, 11, 12]
    result = run_protocol(
        F61, c, xs, bad_set={2}, strategy="silent", seed=2,
        quorum_size=4, formation_retries=50,
    )
    assert 3 in result.harness["defaults"]
    assert result.committed_inputs[2] == 0
    expect, _ = c.eval_plain(F61, [9, 10, 0, 12])
    for player, value in result.outputs.items():
        if player != 2:
            assert value == expect


def test_all_quorums_adopt_root_output():
    c = parse_circuit(BALANCED)
    xs = [1, 2, 3, 4, 5, 6, 7, 8]
    expect, _ = c.eval_plain(F101, xs)
    result = run_protocol(F101, c, xs, seed=7)
    for qid, adopted in result.quorum_outputs.items():
        for player, value in adopted.items():
            assert value == expect, f"quorum {qid} player {player}"


def test_metrics_phase_breakdown():
    c = parse_circuit(TWO_GATES)
    result = run_protocol(F101, c, [1, 2, 3, 4], seed=8, quorum_size=4)
    m = result.metrics
    assert sum(m.phase_msgs["commit"]) > 0
    assert sum(m.phase_msgs["gate"]) > 0
    assert sum(m.phase_msgs["output"]) > 0
    for p in range(4):
        total = sum(m.phase_msgs[ph][p] for ph in m.phase_msgs)
        assert total == m.msgs_sent[p]
    assert max(m.synthetic_qf_msgs) > 0


def test_determinism_same_config_same_hash():
    c = parse_circuit(TWO_GATES)
    hashes = {
        run_protocol(F101, c, [1, 2, 3, 4], seed=9, quorum_size=4).transcript_hash
        for _ in range(3)
    }
    assert len(hashes) == 1
    other = run_protocol(F101, c, [1, 2, 3, 4], seed=10, quorum_size=4).transcript_hash
    assert other not in hashes


def test_majority_filter_rule():
    assert majority_filter([7, 7, 7]) == 7
    assert majority_filter([7, 7, 3]) == 7  # 2 of 3 meets the ceil(2/3) bar
    assert majority_filter([7, 7, 7, 7, 3]) == 7
    with pytest.raises(NoMajority):
        majority_filter([7, 3])  # degenerate split: no two-thirds value
    with pytest.raises(NoMajority):
        majority_filter([7, 7, 3, 3, 7])  # two liars of five exceed a third


def test_field_too_small_rejected():
    c = parse_circuit(TWO_GATES)
    with pytest.raises(ValueError):
        run_protocol(Field(7), c, [1, 2, 3, 4], seed=1, quorum_size=4)
