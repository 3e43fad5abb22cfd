"""Verifiable dealing: acceptance, disqualification, unanimity, erasures."""

import random

import pytest

from quorummpc.field import Field
from quorummpc.sharing import deal_bivariate, decode_shares, position_abscissa
from quorummpc.simnet import AdversaryStrategy, SyncNetwork
from quorummpc.vss import ACCEPTED, DISQUALIFIED, DealerSpec, VssBatch, run_batch

F7 = Field(7)
F101 = Field(101)


def setup_batch(field, q=4, t=1, secrets=None, adversary=None, seed=0, **kw):
    net = SyncNetwork(q + 1, field, seed=seed, record="hash", adversary=adversary)
    group = list(range(q))
    dealers = {}
    for dk, secret in (secrets or {}).items():
        if isinstance(dk, int):  # internal dealer at that slot
            dealers[dk] = DealerSpec(player=group[dk], secret=secret, slot=dk)
        else:
            dealers[dk] = DealerSpec(player=q, secret=secret)  # external player q
    batch = VssBatch(net, ("vss", 0), field, group, t, dealers, **kw)
    return net, batch


def reconstruct(field, batch, dk, t):
    slots = [batch.share(slot, dk) for slot in range(batch.q)]
    return decode_shares(field, slots, t)[0]


def test_good_internal_dealer_accepted():
    net, batch = setup_batch(F101, secrets={0: 42})
    run_batch(net, batch)
    assert batch.verdict(0) == ACCEPTED
    assert batch.transcripts[0].complaints == {"accusers": [], "pairs": []}
    assert reconstruct(F101, batch, 0, 1) == 42


def test_good_external_dealer_accepted():
    net, batch = setup_batch(F101, secrets={"ext": 17})
    run_batch(net, batch)
    assert batch.verdict("ext") == ACCEPTED
    assert reconstruct(F101, batch, "ext", 1) == 17


def test_honest_batch_costs_only_deal_and_cross():
    net, batch = setup_batch(F101, secrets={s: 10 + s for s in range(4)})
    run_batch(net, batch)
    # deal round: 4 dealers -> 4 recipients; cross round: 4*3 pairs;
    # everything after is silent
    assert sum(net.metrics.msgs_sent) == 4 * 4 + 4 * 3
    for dk in range(4):
        assert batch.verdict(dk) == ACCEPTED


def test_shares_lie_on_degree_t_polynomial():
    net, batch = setup_batch(F101, secrets={2: 5})
    run_batch(net, batch)
    shares = [batch.share(slot, 2) for slot in range(4)]
    pts = [(position_abscissa(i), s) for i, s in enumerate(shares)]
    coeffs = F101.interpolate(pts)
    assert len(coeffs) - 1 <= 1
    assert coeffs[0] == 5


def test_inconsistent_rows_disqualified_unanimously():
    # rows drawn from two unrelated bivariate polynomials: no single F fits
    rng = random.Random(1)
    deal_a = deal_bivariate(F101, 3, 1, 1, rng)
    deal_b = deal_bivariate(F101, 60, 1, 1, rng)
    override = {}
    for slot in range(4):
        a = position_abscissa(slot)
        src = deal_a if slot < 2 else deal_b
        override[slot] = (tuple(src.row(a)), tuple(src.col(a)))
    net, batch = setup_batch(F101, secrets={0: 3}, deal_override={0: override})
    run_batch(net, batch)
    assert batch.verdict(0) == DISQUALIFIED
    assert batch.transcripts[0].complaints["pairs"]


def test_silent_dealer_disqualified():
    adv = AdversaryStrategy({0}, "silent")
    net, batch = setup_batch(F101, secrets={0: 9}, adversary=adv, seed=3)
    run_batch(net, batch)
    assert batch.verdict(0) == DISQUALIFIED
    # the dealer's own slot is silenced too, so the three good slots accuse
    assert len(batch.transcripts[0].complaints["accusers"]) == 3


def test_garbage_dealer_disqualified():
    adv = AdversaryStrategy({0}, "garbage")
    net, batch = setup_batch(F101, secrets={0: 9}, adversary=adv, seed=4)
    run_batch(net, batch)
    assert batch.verdict(0) == DISQUALIFIED


def test_share_corrupting_dealer_deals_consistent_wrong_value():
    # value lies stay consistent, so the deal is accepted; the lie is the
    # caller's problem and is what session-level syndromes catch
    adv = AdversaryStrategy({0}, "share-corrupt")
    net, batch = setup_batch(F101, secrets={0: 9}, adversary=adv, seed=5)
    run_batch(net, batch)
    assert batch.verdict(0) == ACCEPTED
    assert reconstruct(F101, batch, 0, 1) == (9 + 1) % 101


def test_lying_verifier_cannot_disqualify_good_dealer():
    adv = AdversaryStrategy({3}, "garbage")
    net, batch = setup_batch(F101, secrets={0: 25}, adversary=adv, seed=6)
    run_batch(net, batch)
    assert batch.verdict(0) == ACCEPTED
    shares = [batch.share(slot, 0) for slot in range(4)]
    shares[3] = None  # the bad slot's own share is untrusted anyway
    assert decode_shares(F101, shares, 1)[0] == 25


def test_equivocating_verifier_cannot_disqualify_good_dealer():
    adv = AdversaryStrategy({2}, "equivocate")
    net, batch = setup_batch(F101, secrets={1: 33}, adversary=adv, seed=7)
    run_batch(net, batch)
    assert batch.verdict(1) == ACCEPTED


def test_one_bad_deal_does_not_poison_batch():
    adv = AdversaryStrategy({1}, "garbage")
    net, batch = setup_batch(F101, secrets={s: 50 + s for s in range(4)}, adversary=adv, seed=8)
    run_batch(net, batch)
    assert batch.verdict(1) == DISQUALIFIED
    for dk in (0, 2, 3):
        assert batch.verdict(dk) == ACCEPTED
        shares = [batch.share(slot, dk) for slot in range(4)]
        shares[1] = None
        assert decode_shares(F101, shares, 1)[0] == 50 + dk


def test_targeted_bad_row_accepts_with_self_erasure():
    # dealer hands slot 2 a row off the common polynomial and then resolves
    # every complaint with the true points: public checks pass, slot 2 ends
    # unhappy and erases itself, the deal is accepted for everyone else
    rng = random.Random(9)
    good = deal_bivariate(F101, 7, 1, 1, rng)
    wrong = deal_bivariate(F101, 55, 1, 1, rng)
    override = {}
    for slot in range(4):
        a = position_abscissa(slot)
        src = wrong if slot == 2 else good
        override[slot] = (tuple(src.row(a)), tuple(src.col(a)))
    resolution = []
    for peer in (0, 1, 3):
        lo, hi = min(2, peer), max(2, peer)
        resolution.append((("pr", lo, hi),
                           (good.eval(position_abscissa(lo), position_abscissa(hi)),
                            good.eval(position_abscissa(hi), position_abscissa(lo)))))
    net, batch = setup_batch(
        F101, secrets={0: 7},
        deal_override={0: override},
        resolution_override={0: tuple(resolution)},
    )
    run_batch(net, batch)
    assert batch.verdict(0) == ACCEPTED
    assert batch.share(2, 0) is None  # self-erased
    assert batch.transcripts[0].unhappy_votes == 1
    shares = [batch.share(slot, 0) for slot in range(4)]
    assert decode_shares(F101, shares, 1)[0] == 7


def test_reconstruction_with_silent_and_lying_slots():
    net, batch = setup_batch(F7, secrets={0: 4}, seed=10)
    run_batch(net, batch)
    shares = [batch.share(slot, 0) for slot in range(4)]
    silent = list(shares)
    silent[1] = None
    assert decode_shares(F7, silent, 1)[0] == 4
    for wrong in range(7):
        lying = list(shares)
        lying[3] = wrong
        assert decode_shares(F7, lying, 1)[0] == 4


def test_transcript_determinism():
    def run(seed):
        adv = AdversaryStrategy({1}, "garbage")
        net, batch = setup_batch(F101, secrets={s: s + 1 for s in range(4)},
                                 adversary=adv, seed=seed)
        run_batch(net, batch)
        return net.transcript_hash()

    assert run(12) == run(12)
    assert run(12) != run(13)


def test_larger_quorum_two_faults():
    adv = AdversaryStrategy({2, 5}, "garbage")
    net = SyncNetwork(7, F101, seed=14, adversary=adv)
    group = list(range(7))
    dealers = {s: DealerSpec(player=s, secret=11 * s + 1, slot=s) for s in range(7)}
    batch = VssBatch(net, ("vss", 1), F101, group, 2, dealers)
    run_batch(net, batch)
    for dk in (0, 1, 3, 4, 6):
        assert batch.verdict(dk) == ACCEPTED
        shares = [batch.share(slot, dk) for slot in range(7)]
        for bad in (2, 5):
            shares[bad] = None
        assert decode_shares(F101, shares, 2)[0] == 11 * dk + 1
