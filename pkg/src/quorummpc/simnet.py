"""Deterministic synchronous message-passing simulator.

Players exchange messages in lockstep rounds over private authenticated
point-to-point channels: everything sent in round r is readable in round
r + 1, never earlier or later.  All traffic between one (sender,
recipient) pair within a round travels as a single channel message whose
items are (tag, payload) tuples; the per-player message counters count
those packed channel messages, payload items are tallied separately.

A static adversary controls a fixed player set chosen before round 0.
Controlled players run the honest logic, but every outgoing channel
passes through the strategy, which may drop, garble, or equivocate it;
at transform time the full round outbox already exists, so a strategy
can also inspect all pending traffic addressed to controlled players
(the strongest rushing behaviour the synchronous model admits).
Channels are authenticated by construction: a sender cannot emit under
any identity but its own, so spoofing is structurally impossible.
"""

from __future__ import annotations

import hashlib
import random
import struct
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional

from .errors import StrategyAfterStart
from .field import Field

# payload kind codes; every message tag starts with one of these
K_DEAL = 1    # dealt rows/columns of a sharing
K_CROSS = 2   # pairwise cross-check values
K_RB = 3      # reliable-broadcast relay traffic
K_OPEN = 4    # share values revealed for a public opening
K_SVAL = 5    # masked node values (public within a quorum)
K_FWD = 6     # complaint forwarding to an external dealer
K_OUT = 7     # final output propagation

PHASES = ("formation", "commit", "mask", "gate", "output")


def encode_canonical(obj) -> bytes:
    """Stable byte encoding for hashing: ints little-endian, tuples nested."""
    if isinstance(obj, int):
        if 0 <= obj < 2**64:
            return b"\x01" + struct.pack("<Q", obj)
        return b"\x02" + str(obj).encode()
    if isinstance(obj, str):
        raw = obj.encode()
        return b"\x03" + struct.pack("<H", len(raw)) + raw
    if isinstance(obj, (tuple, list)):
        parts = [encode_canonical(x) for x in obj]
        return b"\x04" + struct.pack("<H", len(parts)) + b"".join(parts)
    if obj is None:
        return b"\x05"
    raise TypeError(f"cannot encode {type(obj)}")


@dataclass
class RunMetrics:
    """Per-player counters; phase breakdowns sum to the totals."""

    n_players: int
    msgs_sent: list[int] = dc_field(default_factory=list)
    payload_items: list[int] = dc_field(default_factory=list)
    field_ops: list[int] = dc_field(default_factory=list)
    phase_msgs: dict[str, list[int]] = dc_field(default_factory=dict)
    phase_payload: dict[str, list[int]] = dc_field(default_factory=dict)
    synthetic_qf_msgs: list[int] = dc_field(default_factory=list)

    def __post_init__(self):
        z = [0] * self.n_players
        self.msgs_sent = list(z)
        self.payload_items = list(z)
        self.field_ops = list(z)
        self.phase_msgs = {ph: list(z) for ph in PHASES}
        self.phase_payload = {ph: list(z) for ph in PHASES}
        self.synthetic_qf_msgs = list(z)

    def charge_synthetic_formation(self, per_player: int):
        for i in range(self.n_players):
            self.synthetic_qf_msgs[i] += per_player

    def totals_with_formation(self) -> list[int]:
        return [m + q for m, q in zip(self.msgs_sent, self.synthetic_qf_msgs)]

    def as_dict(self) -> dict:
        return {
            "msgs_sent": self.msgs_sent,
            "payload_items": self.payload_items,
            "field_ops": self.field_ops,
            "phase_msgs": self.phase_msgs,
            "phase_payload": self.phase_payload,
            "synthetic_qf_msgs": self.synthetic_qf_msgs,
            "max_msgs_sent": max(self.msgs_sent, default=0),
            "max_total_with_formation": max(self.totals_with_formation(), default=0),
        }


def _mutate_leaves(obj, fn: Callable[[int], int]):
    if isinstance(obj, int):
        return fn(obj)
    if isinstance(obj, tuple):
        return tuple(_mutate_leaves(x, fn) for x in obj)
    if isinstance(obj, list):
        return [_mutate_leaves(x, fn) for x in obj]
    return obj


CATALOG = (
    "honest",
    "silent",
    "garbage",
    "equivocate",
    "share-corrupt",
    "inconsistent-commit",
)


class AdversaryStrategy:
    """Static adversary: fixed controlled set, named per-phase behaviours.

    behaviour may be a single catalog name or a {phase: name} dict; phases
    not listed default to honest.  Controlled players execute the honest
    protocol logic and this object rewrites their outgoing channels.
    """

    def __init__(self, controlled, behavior="honest", seed: int = 0, field: Optional[Field] = None):
        self.controlled = frozenset(controlled)
        self.behavior = behavior
        self.field = field
        self._rng = random.Random(f"adversary:{seed}")
        if isinstance(behavior, str) and behavior not in CATALOG:
            raise ValueError(f"unknown strategy {behavior!r}")

    def _phase_behavior(self, phase: str) -> str:
        if isinstance(self.behavior, str):
            name = self.behavior
        else:
            name = self.behavior.get(phase, "honest")
        if name == "inconsistent-commit":
            return "inconsistent-commit" if phase == "commit" else "honest"
        return name

    def transform_channel(self, net, rnd, sender, recipient, items):
        """Rewrite one outgoing channel of a controlled player; None drops it."""
        name = self._phase_behavior(net.phase)
        if name == "honest":
            return items
        if name == "silent":
            return None
        p = self.field.p if self.field else net.field.p

        if name == "garbage":
            rng = random.Random(f"g:{net.seed}:{rnd}:{sender}")
            return [(tag, _mutate_leaves(pl, lambda v: rng.randrange(p))) for tag, pl in items]

        if name == "equivocate":
            # consistent per-recipient lie: residues shifted by a recipient offset
            off = (recipient * 2654435761 + 17) % p or 1
            return [(tag, _mutate_leaves(pl, lambda v: (v + off) % p)) for tag, pl in items]

        if name == "share-corrupt":
            # lie about share values while staying structurally consistent:
            # dealt polynomials get their constant term shifted (a consistent
            # deal of the wrong value); opened shares and cross values shift
            # wholesale
            def shift_constants(obj):
                if isinstance(obj, tuple):
                    if obj and all(isinstance(x, int) for x in obj):
                        return ((obj[0] + 1) % p,) + obj[1:]
                    return tuple(shift_constants(x) for x in obj)
                return obj

            out = []
            for tag, pl in items:
                if tag and tag[0] == K_DEAL:
                    out.append((tag, shift_constants(pl)))
                elif tag and tag[0] == K_OPEN:
                    out.append((tag, _mutate_leaves(pl, lambda v: (v + 1) % p)))
                else:
                    out.append((tag, pl))
            return out

        if name == "inconsistent-commit":
            off = (recipient * 2654435761 + 17) % p or 1
            rng = random.Random(f"ic:{net.seed}:{rnd}:{sender}:{recipient}")
            out = []
            for tag, pl in items:
                if tag and tag[0] == K_SVAL:
                    out.append((tag, _mutate_leaves(pl, lambda v: (v + off) % p)))
                elif tag and tag[0] == K_DEAL:
                    out.append((tag, _mutate_leaves(pl, lambda v: rng.randrange(p))))
                else:
                    out.append((tag, pl))
            return out

        raise ValueError(f"unknown strategy {name!r}")


class SyncNetwork:
    """The lockstep engine: outboxes, delivery, accounting, transcripts."""

    def __init__(
        self,
        n_players: int,
        field: Field,
        seed: int = 0,
        record: str = "hash",
        adversary: Optional[AdversaryStrategy] = None,
    ):
        assert record in ("none", "hash", "full", "adversary")
        self.n = n_players
        self.field = field
        self.seed = seed
        self.round = 0
        self.phase = "formation"
        self.metrics = RunMetrics(n_players)
        self.record = record
        self.transcript: list[tuple] = []
        self.adversary_view: list[tuple] = []
        self._hash = hashlib.sha256()
        self._outbox: dict[tuple[int, int], list] = {}
        self._inbox: list[dict] = [dict() for _ in range(n_players)]
        self._adversary = adversary
        self._started = False
        self.current_player: Optional[int] = None
        if adversary is not None and adversary.field is None:
            adversary.field = field

    # -- configuration ----------------------------------------------------

    def attach_adversary(self, strategy: AdversaryStrategy):
        if self._started:
            raise StrategyAfterStart("adversary must attach before round 0 runs")
        if strategy.field is None:
            strategy.field = self.field
        self._adversary = strategy

    @property
    def bad_players(self) -> frozenset:
        return self._adversary.controlled if self._adversary else frozenset()

    def set_phase(self, phase: str):
        assert phase in PHASES
        self.phase = phase

    def rng(self, player: int, purpose: str) -> random.Random:
        return random.Random(f"{self.seed}:{player}:{purpose}")

    # -- traffic ----------------------------------------------------------

    def send(self, sender: int, recipient: int, tag: tuple, payload):
        if self.current_player is not None and sender != self.current_player:
            raise AssertionError(
                f"player {self.current_player} cannot send as {sender}"
            )
        self._outbox.setdefault((sender, recipient), []).append((tag, payload))

    def recv(self, player: int, tag: tuple) -> list:
        """Messages delivered this round under the tag: [(sender, payload)]."""
        return self._inbox[player].get(tag, ())

    def pending_for(self, players) -> list:
        """Rushing hook: this round's not-yet-delivered traffic to players."""
        out = []
        for (s, r), items in self._outbox.items():
            if r in players:
                out.extend((s, r, tag, pl) for tag, pl in items)
        return out

    def charge_ops(self, player: int, count: int):
        self.metrics.field_ops[player] += count

    # -- round machinery ----------------------------------------------------

    def advance_round(self):
        """Deliver the round's outboxes into next round's inboxes."""
        self._started = True
        inboxes: list[dict] = [dict() for _ in range(self.n)]
        adv = self._adversary
        bad = adv.controlled if adv else frozenset()
        phase_row = self.metrics.phase_msgs[self.phase]
        payload_row = self.metrics.phase_payload[self.phase]
        for key in sorted(self._outbox):
            sender, recipient = key
            items = self._outbox[key]
            if sender in bad:
                items = adv.transform_channel(self, self.round, sender, recipient, items)
                if items is None:
                    continue
            if not items:
                continue
            self.metrics.msgs_sent[sender] += 1
            self.metrics.payload_items[sender] += len(items)
            phase_row[sender] += 1
            payload_row[sender] += len(items)
            box = inboxes[recipient]
            for tag, payload in items:
                box.setdefault(tag, []).append((sender, payload))
            if self.record != "none":
                self._record(sender, recipient, items)
        self._outbox = {}
        self._inbox = inboxes
        self.round += 1

    def _record(self, sender, recipient, items):
        if self.record in ("hash", "full"):
            # repr of nested int/str tuples is deterministic and C-fast
            self._hash.update(struct.pack("<IHH", self.round, sender, recipient))
            self._hash.update(repr(items).encode())
        if self.record == "full":
            self.transcript.append((self.round, sender, recipient, tuple(items)))
        if self.record == "adversary" and recipient in self.bad_players:
            self.adversary_view.append((self.round, sender, recipient, tuple(items)))

    def transcript_hash(self) -> str:
        return self._hash.hexdigest()

    def dump_transcript(self) -> str:
        """One line per channel message: round sender recipient tag payload-hash."""
        lines = []
        for rnd, sender, recipient, items in self.transcript:
            for tag, payload in items:
                digest = hashlib.sha256(encode_canonical(payload)).hexdigest()[:16]
                tag_text = ".".join(str(c) for c in tag)
                lines.append(f"{rnd} {sender} {recipient} {tag_text} {digest}")
        return "\n".join(lines) + ("\n" if lines else "")

    def adversary_payload_values(self) -> list[int]:
        """Flat residue stream the adversary saw; privacy tests histogram it."""
        values: list[int] = []

        def walk(obj):
            if isinstance(obj, int):
                values.append(obj % self.field.p)
            elif isinstance(obj, (tuple, list)):
                for x in obj:
                    walk(x)

        for _, _, _, items in self.adversary_view:
            for _, payload in items:
                walk(payload)
        return values
