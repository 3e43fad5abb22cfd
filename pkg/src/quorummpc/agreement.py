"""Byzantine agreement and broadcast inside a quorum or session roster.

The workhorse is BroadcastWindow: a batch of reliable broadcasts over a
fixed, publicly known key universe, delivered after a fixed number of
lockstep rounds with every good participant holding the identical result
map.  Internally each window runs one dissemination round followed by
t + 1 three-round voting phases (value exchange, proposal, rotating
king), the classic king-based agreement shape; it tolerates t bad slots
out of G > 3t and terminates deterministically.

Silence encodes the default: a participant whose value is None sends
nothing, receivers impute None for missing entries, and state is stored
sparsely, so an all-quiet window costs zero messages and near-zero work.
That is what keeps complaint and vote phases free on the honest path.
Keys outside the fixed universe are dropped on receipt, so bad players
cannot inject phantom broadcasts.

A participant is a slot: an index into a list of physical player ids.
One player may hold several slots (role multiplexing in sessions); good
slots of one player always carry identical state here, so each player
speaks once and its messages count with slot multiplicity.  Kings are
the first t + 1 distinct players, so at least one king phase is honest.
"""

from __future__ import annotations

from collections import Counter
from typing import Optional

from .simnet import K_RB, SyncNetwork


def phase_count(t: int) -> int:
    return t + 1


def broadcast_stride(t: int) -> int:
    """Window offset during which delivered results become readable."""
    return 3 * phase_count(t) + 1


def _tie_key(item):
    value, count = item
    # higher count wins; None loses ties; then canonical text order
    return (-count, value is None, repr(value))


def _value_digest(value) -> str:
    import hashlib

    return hashlib.sha256(repr(value).encode()).hexdigest()[:16]


class BroadcastWindow:
    """A batch of reliable broadcasts sharing one scheduling window.

    keys: the universe of (sender_slot, name) broadcasts that may occur.
    After on_round has run for offsets 0..stride, result(player) is
    identical at every good player and maps keys to delivered values,
    None meaning nothing got through for that key.
    """

    def __init__(self, net: SyncNetwork, base_tag: tuple, group: list[int], t: int,
                 keys, inert_slots=frozenset(), digest_values: bool = False):
        if len(group) <= 3 * t:
            raise ValueError(f"group of {len(group)} slots cannot tolerate t={t}")
        self.net = net
        self.base_tag = tuple(base_tag)
        self.group = list(group)
        self.t = t
        self.keys = set(keys)
        self.inert_slots = frozenset(inert_slots)
        self.players = sorted(set(group))
        self.multiplicity = Counter(group)
        kings: list[int] = []
        for player in group:
            if player not in kings:
                kings.append(player)
            if len(kings) == t + 1:
                break
        if len(kings) < t + 1:
            raise ValueError("fewer than t+1 distinct players in group")
        self.kings = kings
        # digest mode: agreement phases carry 16-byte digests of the
        # disseminated values; afterwards, slots whose own copy does not
        # match the winning digest pull the content from whoever holds it,
        # so big values cross the wire once plus a little repair traffic
        self.digest_values = digest_values
        self.stride = broadcast_stride(t) + (2 if digest_values else 0)
        self._pending: dict[tuple, object] = {}
        # sparse per-player agreement state: only non-None values stored
        self._value: dict[int, dict] = {p: {} for p in self.players}
        self._cand: dict[int, dict] = {}
        self._copies: dict[int, dict] = {p: {} for p in self.players}
        self.delivered: dict[int, dict] = {}
        self.done = False

    # -- submission ---------------------------------------------------------

    def submit(self, slot: int, name, value):
        key = (slot, name)
        if key not in self.keys:
            raise KeyError(f"{key} not in this window's universe")
        if value is not None:
            self._pending[key] = value

    # -- wire helpers -------------------------------------------------------

    def _tag(self, offset: int) -> tuple:
        return (K_RB, *self.base_tag, offset)

    def _broadcast_entries(self, player: int, offset: int, entries):
        if not entries:
            return
        payload = tuple(entries)
        self.net.current_player = player
        for target in self.players:
            self.net.send(player, target, self._tag(offset), payload)
        self.net.current_player = None

    def _gather(self, player: int, offset: int) -> dict[int, dict]:
        """Per sender player: first valid entry per key; unknown keys dropped."""
        out: dict[int, dict] = {}
        for sender, payload in self.net.recv(player, self._tag(offset)):
            if not isinstance(payload, tuple):
                continue
            bucket = out.setdefault(sender, {})
            for entry in payload:
                if not (isinstance(entry, tuple) and len(entry) == 2):
                    continue
                raw_key, value = entry
                if not (isinstance(raw_key, tuple) and len(raw_key) == 2):
                    continue
                key = (raw_key[0], raw_key[1])
                if key not in self.keys or key in bucket or value is None:
                    continue
                bucket[key] = value
        return out

    def _all_slots_inert(self, player: int) -> bool:
        return all(
            slot in self.inert_slots
            for slot, p in enumerate(self.group) if p == player
        )

    # -- round machinery ------------------------------------------------------

    def on_round(self, offset: int):
        if self.done:
            return
        if offset == 0:
            self._emit_dissemination()
            return
        if offset == 1:
            self._settle_dissemination()
            self._emit_exchange(offset)
            return
        phase, step = divmod(offset - 2, 3)
        if phase >= phase_count(self.t):
            if self.digest_values:
                if offset == broadcast_stride(self.t) + 1:
                    self._respond_repair()
                elif offset == broadcast_stride(self.t) + 2:
                    self._settle_repair()
            return
        if step == 0:
            self._emit_proposals(offset)
        elif step == 1:
            self._emit_king(offset, phase)
        else:
            self._apply_update(offset, phase)
            if phase + 1 < phase_count(self.t):
                self._emit_exchange(offset)
            elif self.digest_values:
                self._request_repair(offset)
            else:
                self.delivered = {p: dict(v) for p, v in self._value.items()}
                self.done = True

    def _emit_dissemination(self):
        by_player: dict[int, list] = {}
        for key in sorted(self._pending, key=str):
            slot = key[0]
            if slot in self.inert_slots:
                continue
            by_player.setdefault(self.group[slot], []).append((key, self._pending[key]))
        for player, entries in sorted(by_player.items()):
            self._broadcast_entries(player, 0, entries)

    def _settle_dissemination(self):
        for player in self.players:
            got = self._gather(player, 0)
            values = self._value[player]
            copies = self._copies[player]
            for sender, bucket in sorted(got.items()):
                for key, value in bucket.items():
                    if self.group[key[0]] != sender:  # authenticated rb-sender
                        continue
                    if self.digest_values:
                        digest = _value_digest(value)
                        values[key] = digest
                        copies.setdefault(key, {})[digest] = value
                    else:
                        values[key] = value

    def _emit_exchange(self, offset: int):
        for player in self.players:
            values = self._value[player]
            if not values or self._all_slots_inert(player):
                continue
            entries = sorted(values.items(), key=str)
            self._broadcast_entries(player, offset, entries)

    def _emit_proposals(self, offset: int):
        g = len(self.group)
        for player in self.players:
            tallies: dict[tuple, Counter] = {}
            for sender, bucket in self._gather(player, offset - 1).items():
                mult = self.multiplicity[sender]
                for key, value in bucket.items():
                    tallies.setdefault(key, Counter())[value] += mult
            proposals = []
            for key in sorted(tallies, key=str):
                value, count = min(tallies[key].items(), key=_tie_key)
                if count >= g - self.t:
                    proposals.append((key, value))
            if proposals and not self._all_slots_inert(player):
                self._broadcast_entries(player, offset, proposals)

    def _emit_king(self, offset: int, phase: int):
        g = len(self.group)
        king = self.kings[phase]
        self._cand = {}
        king_entries: list = []
        for player in self.players:
            tallies: dict[tuple, Counter] = {}
            explicit: dict[tuple, int] = {}
            for sender, bucket in self._gather(player, offset - 1).items():
                mult = self.multiplicity[sender]
                for key, value in bucket.items():
                    tallies.setdefault(key, Counter())[value] += mult
                    explicit[key] = explicit.get(key, 0) + mult
            cand: dict[tuple, tuple] = {}
            for key, tally in tallies.items():
                tally[None] += g - explicit[key]
                value, count = min(tally.items(), key=_tie_key)
                cand[key] = (value, count)
            self._cand[player] = cand
            if player == king:
                for key in sorted(tallies, key=str):
                    for value, c in sorted(tallies[key].items(), key=_tie_key):
                        if value is not None and c >= self.t + 1:
                            king_entries.append((key, value))
                            break
        if king_entries and not self._all_slots_inert(king):
            self._broadcast_entries(king, offset, king_entries)

    def _apply_update(self, offset: int, phase: int):
        g = len(self.group)
        king = self.kings[phase]
        for player in self.players:
            king_bucket = self._gather(player, offset - 1).get(king, {})
            values = self._value[player]
            cands = self._cand.get(player, {})
            for key in set(cands) | set(king_bucket) | set(values):
                value, count = cands.get(key, (None, g))
                if count < g - self.t:
                    value = king_bucket.get(key)
                if value is None:
                    values.pop(key, None)
                else:
                    values[key] = value

    def _request_repair(self, offset: int):
        """Slots missing the winning content ask everyone for a copy.

        On the honest path every good slot already holds what good
        senders disseminated, so no requests flow at all; only
        equivocation victims pull, and only the pulled keys travel.
        """
        tag = (K_RB, *self.base_tag, "req")
        for player in self.players:
            copies = self._copies[player]
            missing = []
            for key, digest in sorted(self._value[player].items(), key=str):
                if copies.get(key, {}).get(digest) is None:
                    missing.append(key)
            if missing:
                self.net.current_player = player
                for target in self.players:
                    self.net.send(player, target, tag, tuple(missing))
                self.net.current_player = None

    def _respond_repair(self):
        req_tag = (K_RB, *self.base_tag, "req")
        rep_tag = (K_RB, *self.base_tag, "rep")
        for player in self.players:
            copies = self._copies[player]
            values = self._value[player]
            for sender, payload in self.net.recv(player, req_tag):
                if not isinstance(payload, tuple):
                    continue
                entries = []
                for raw_key in payload:
                    if not (isinstance(raw_key, tuple) and len(raw_key) == 2):
                        continue
                    key = (raw_key[0], raw_key[1])
                    digest = values.get(key)
                    value = copies.get(key, {}).get(digest) if digest else None
                    if value is not None:
                        entries.append((key, value))
                if entries:
                    self.net.current_player = player
                    self.net.send(player, sender, rep_tag, tuple(entries))
                    self.net.current_player = None

    def _settle_repair(self):
        tag = (K_RB, *self.base_tag, "rep")
        for player in self.players:
            want = self._value[player]
            copies = self._copies[player]
            resolved: dict = {}
            for key, digest in want.items():
                value = copies.get(key, {}).get(digest)
                if value is not None:
                    resolved[key] = value
            for sender, payload in self.net.recv(player, tag):
                if not isinstance(payload, tuple):
                    continue
                for entry in payload:
                    if not (isinstance(entry, tuple) and len(entry) == 2):
                        continue
                    raw_key, value = entry
                    if not (isinstance(raw_key, tuple) and len(raw_key) == 2):
                        continue
                    key = (raw_key[0], raw_key[1])
                    if key not in self.keys or key in resolved:
                        continue
                    if want.get(key) is not None and _value_digest(value) == want[key]:
                        resolved[key] = value
            # a digest nobody good can back resolves to None, uniformly
            self.delivered[player] = resolved
        self.done = True

    # -- results --------------------------------------------------------------

    def result(self, player: int) -> dict:
        """Delivered value per key; keys never delivered are simply absent."""
        return self.delivered.get(player, {})


def run_window(net: SyncNetwork, windows, extra_rounds: int = 0):
    """Test driver: advance the network until every window has delivered."""
    if not isinstance(windows, (list, tuple)):
        windows = [windows]
    span = max(w.stride for w in windows) + 1 + extra_rounds
    for offset in range(span):
        for w in windows:
            w.on_round(offset)
        net.advance_round()


def agree(net: SyncNetwork, base_tag: tuple, group: list[int], t: int,
          initial: dict[int, object]) -> dict[int, object]:
    """Agreement on one value from per-slot initials.

    Every slot broadcasts its initial in one window; the decision is the
    plurality over the delivered claims with a deterministic tie-break.
    All good players decide identically, and a value shared by every
    good slot at the start is always the decision.
    """
    keys = [(slot, "v") for slot in range(len(group))]
    window = BroadcastWindow(net, base_tag, group, t, keys)
    for slot in range(len(group)):
        window.submit(slot, "v", initial.get(slot))
    run_window(net, window)
    decisions = {}
    for player in window.players:
        tally: Counter = Counter()
        for slot in range(len(group)):
            tally[window.result(player).get((slot, "v"))] += 1
        value, _ = min(tally.items(), key=_tie_key)
        decisions[player] = value
    return decisions


def broadcast_check(net: SyncNetwork, base_tag: tuple, group: list[int], t: int,
                    received: dict[int, object]) -> dict[int, object]:
    """Did one sender hand every slot the same value?

    `received` maps slot -> the value that slot privately got from the
    sender.  Slots broadcast their claims; a value claimed by 2t + 1
    slots is the common verdict, anything else resolves to None, which
    callers treat as an inconsistent sender.
    """
    keys = [(slot, "claim") for slot in range(len(group))]
    window = BroadcastWindow(net, base_tag, group, t, keys)
    for slot in range(len(group)):
        window.submit(slot, "claim", received.get(slot))
    run_window(net, window)
    verdicts = {}
    for player in window.players:
        tally: Counter = Counter()
        for slot in range(len(group)):
            value = window.result(player).get((slot, "claim"))
            if value is not None:
                tally[value] += 1
        if tally:
            value, count = min(tally.items(), key=_tie_key)
            verdicts[player] = value if count >= 2 * t + 1 else None
        else:
            verdicts[player] = None
    return verdicts
