"""Verifiable secret sharing over a group of slots.

A dealer commits to a bivariate polynomial F of degree <= t in each
variable with F(0, 0) = secret; slot i receives the row g_i(x) = F(x, a_i)
and the column h_i(y) = F(a_i, y), and its univariate share is g_i(0).
Slots cross-check pairwise (g_i(a_j) must equal h_j(a_i)), broadcast
complaints, the dealer resolves them by revealing the disputed points or
whole rows, and everyone votes happy or unhappy.  The verdict is a pure
function of broadcast data, so all good slots reach it unanimously:

  disqualified  iff  a complaint went unresolved, revealed data is
  malformed or mutually inconsistent, or at least t + 1 slots accused
  the dealer or voted unhappy.

Accepting with up to t unhappy good slots is possible when the dealer is
bad; such slots mark their own share as missing and downstream decoding
treats them as erasures, which stays inside the error budget because
unhappy good slots only exist when the dealer spends one corruption.

Many deals verify together in one VssBatch: all dealers of a phase share
the complaint, resolution, and vote windows, and the whole verification
tail is silent when nobody complains, so an honest batch costs only the
deal and cross-check rounds.

Resolutions travel dealer -> slots directly and are then re-broadcast by
the slots; the resolution set supported by 2t + 1 slots wins.  That lets
an external dealer (input commitment) resolve without being a member of
the agreement group.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional

import hashlib

from .agreement import BroadcastWindow, broadcast_stride
from .field import Field
from .sharing import deal_bivariate, position_abscissa
from .simnet import K_CROSS, K_DEAL, K_FWD, SyncNetwork


def vss_stride(t: int) -> int:
    """Window offset at which verdicts and shares are final."""
    return 3 * broadcast_stride(t) + 10


def _digest(entries) -> str:
    return hashlib.sha256(repr(entries).encode()).hexdigest()[:16]


ACCEPTED = "accepted"
DISQUALIFIED = "dealer-disqualified"


@dataclass
class DealerSpec:
    """One deal in a batch: who deals, from where, and what."""

    player: int                   # physical dealer player
    secret: Optional[int] = None  # None for dealers the adversary silences at source
    slot: Optional[int] = None    # dealer's slot when internal, None if external


@dataclass
class VssTranscript:
    """Verification record for one deal, identical at all good slots."""

    dealer: int
    outcome: str
    complaints: dict
    resolution: Optional[tuple]
    unhappy_votes: int
    accusers: int


class VssBatch:
    """All VSS instances of one phase, verified over shared windows."""

    def __init__(self, net: SyncNetwork, base_tag: tuple, field: Field,
                 group: list[int], t: int, dealers: dict,
                 deal_override: Optional[dict] = None,
                 resolution_override: Optional[dict] = None,
                 extra_vote_fn=None):
        self.net = net
        self.base = tuple(base_tag)
        self.field = field
        self.group = list(group)
        self.q = len(group)
        self.t = t
        self.dealers = dict(dealers)
        self.deal_override = deal_override or {}
        self.resolution_override = resolution_override or {}
        self.extra_vote_fn = extra_vote_fn
        self.stride = vss_stride(t)
        self._bcast_s = broadcast_stride(t)
        self.abscissas = [position_abscissa(i) for i in range(self.q)]

        dkeys = sorted(self.dealers, key=str)
        self.dealer_keys = dkeys
        self._dk_index = {dk: i for i, dk in enumerate(dkeys)}
        # composite values: each slot broadcasts one tuple covering every
        # dealer, so loud windows scale with slots rather than slots*dealers
        self._complaints = BroadcastWindow(
            net, (*self.base, "c"), group, t,
            keys=[(s, "c") for s in range(self.q)], digest_values=True,
        )
        self._claims = BroadcastWindow(
            net, (*self.base, "r"), group, t,
            keys=[(s, "r") for s in range(self.q)],
        )
        self._votes = BroadcastWindow(
            net, (*self.base, "u"), group, t,
            keys=[(s, "u") for s in range(self.q)], digest_values=True,
        )
        # per (slot, dealer_key): dealt polynomials as seen by that slot
        self._rows: dict[tuple, Optional[list]] = {}
        self._cols: dict[tuple, Optional[list]] = {}
        self._local_complaints: dict[tuple, tuple] = {}
        self._resolution: dict = {}
        self._common_complaints: dict = {}
        self._unhappy: dict[tuple, bool] = {}
        self.transcripts: dict = {}
        self.done = False

    # -- public accessors ----------------------------------------------------

    def _good_viewer(self) -> int:
        """A good player whose delivered windows stand in for the common view.

        Window results coincide at every good player, so the orchestrator
        parses them once; bad players' divergent views never steer good
        slots because their outgoing traffic is shaped at the channel.
        """
        bad = self.net.bad_players
        for player in self.group:
            if player not in bad:
                return player
        return self.group[0]

    def verdict(self, dealer_key) -> str:
        return self.transcripts[dealer_key].outcome

    def share(self, slot: int, dealer_key) -> Optional[int]:
        """Slot's share after an accepted deal; None = erased or unusable."""
        if self.transcripts[dealer_key].outcome != ACCEPTED:
            return None
        if self._unhappy.get((slot, dealer_key)):
            return None
        row = self._rows.get((slot, dealer_key))
        return row[0] if row else None

    def row(self, slot: int, dealer_key) -> Optional[list]:
        return self._rows.get((slot, dealer_key))

    def col(self, slot: int, dealer_key) -> Optional[list]:
        return self._cols.get((slot, dealer_key))

    # -- round machinery -------------------------------------------------------

    def on_round(self, offset: int):
        a = 2 + self._complaints.stride      # complaints settled here
        b = a + 2 + self._claims.stride      # resolution digests settled here
        c = b + 2 + self._votes.stride       # votes settled here
        if offset == 0:
            self._emit_deals()
        elif offset == 1:
            self._receive_deals()
            self._emit_cross()
        elif offset == 2:
            self._compute_complaints()
        if 2 <= offset <= a:
            self._complaints.on_round(offset - 2)
        if offset == a:
            self._settle_complaints()
            self._forward_complaints()
        if offset == a + 1:
            self._emit_resolutions()
        if offset == a + 2:
            self._rebroadcast_resolutions()
        if a + 2 <= offset <= a + 2 + self._claims.stride:
            self._claims.on_round(offset - a - 2)
        if offset == b:
            self._settle_digests()
            self._request_res_repair()
        if offset == b + 1:
            self._respond_res_repair()
        if offset == b + 2:
            self._settle_resolutions()
            self._cast_votes()
        if b + 2 <= offset <= c:
            self._votes.on_round(offset - b - 2)
        if offset == c:
            self._finalize()

    # -- dealing ---------------------------------------------------------------

    def _deal_tag(self):
        return (K_DEAL, *self.base, "deal")

    def _emit_deals(self):
        net = self.net
        fld = self.field
        for dk in self.dealer_keys:
            spec = self.dealers[dk]
            if spec.secret is None:
                continue
            override = self.deal_override.get(dk)
            payloads: dict[int, tuple] = {}
            if override is None:
                rng = net.rng(spec.player, f"vss:{self.base}:{dk}")
                deal = deal_bivariate(self.field, spec.secret, self.t, self.t, rng)
                net.charge_ops(spec.player, self.q * 2 * self.t * (self.t + 1))
                # all rows at once: evaluate each coefficient poly over the
                # abscissas in one pass, then transpose
                row_grid = [fld.poly_eval_many(cs, self.abscissas) for cs in deal.coeffs]
                col_grid = [fld.poly_eval_many(cs, self.abscissas) for cs in deal._transposed()]
                for slot in range(self.q):
                    row = fld.poly_trim([g[slot] for g in row_grid]) or [0]
                    col = fld.poly_trim([g[slot] for g in col_grid]) or [0]
                    payloads[slot] = (tuple(row), tuple(col))
            net.current_player = spec.player
            for slot in range(self.q):
                payload = override.get(slot) if override is not None else payloads[slot]
                if payload is not None:
                    net.send(spec.player, self.group[slot], self._deal_tag(),
                             (dk, slot, payload))
            net.current_player = None

    def _valid_poly(self, poly) -> bool:
        return (
            isinstance(poly, tuple)
            and 1 <= len(poly) <= self.t + 1
            and all(isinstance(c, int) and 0 <= c < self.field.p for c in poly)
        )

    def _receive_deals(self):
        for slot in range(self.q):
            player = self.group[slot]
            got = {}
            for sender, payload in self.net.recv(player, self._deal_tag()):
                if not (isinstance(payload, tuple) and len(payload) == 3):
                    continue
                dk, to_slot, body = payload
                if to_slot != slot or dk in got or dk not in self.dealers:
                    continue
                if self.dealers[dk].player != sender:
                    continue
                got[dk] = body
            for dk in self.dealer_keys:
                body = got.get(dk)
                row = col = None
                if isinstance(body, tuple) and len(body) == 2:
                    r, c = body
                    if self._valid_poly(r) and self._valid_poly(c):
                        a = self.abscissas[slot]
                        if self.field.poly_eval(list(r), a) == self.field.poly_eval(list(c), a):
                            row, col = list(r), list(c)
                self._rows[(slot, dk)] = row
                self._cols[(slot, dk)] = col

    def _cross_tag(self):
        return (K_CROSS, *self.base)

    def _emit_cross(self):
        net = self.net
        fld = self.field
        self._evals: dict[tuple, tuple] = {}
        for slot in range(self.q):
            player = self.group[slot]
            per_peer: list[list] = [[] for _ in range(self.q)]
            for dk in self.dealer_keys:
                row = self._rows[(slot, dk)]
                col = self._cols[(slot, dk)]
                if row is None:
                    for peer in range(self.q):
                        per_peer[peer].append(None)
                    continue
                row_at = fld.poly_eval_many(row, self.abscissas)
                col_at = fld.poly_eval_many(col, self.abscissas)
                self._evals[(slot, dk)] = (row_at, col_at)
                for peer in range(self.q):
                    per_peer[peer].append((row_at[peer], col_at[peer]))
            net.current_player = player
            for peer in range(self.q):
                if peer == slot:
                    continue
                net.send(player, self.group[peer], self._cross_tag(),
                         (slot, peer, tuple(per_peer[peer])))
            net.current_player = None
            net.charge_ops(player, self.q * len(self.dealer_keys) * 2 * self.t)

    # -- complaints --------------------------------------------------------------

    def _compute_complaints(self):
        fld = self.field
        for slot in range(self.q):
            player = self.group[slot]
            cross: dict[int, tuple] = {}
            for sender, payload in self.net.recv(player, self._cross_tag()):
                if not (isinstance(payload, tuple) and len(payload) == 3):
                    continue
                peer, target, entries = payload
                if target != slot:
                    continue
                if not isinstance(peer, int) or not (0 <= peer < self.q):
                    continue
                if self.group[peer] != sender or peer in cross:
                    continue
                if isinstance(entries, tuple) and len(entries) == len(self.dealer_keys):
                    cross[peer] = entries
            slot_entries = []
            for di, dk in enumerate(self.dealer_keys):
                cached = self._evals.get((slot, dk))
                if cached is None:
                    slot_entries.append((di, 1, ()))
                    continue
                row_at, col_at = cached
                bad_peers = []
                for peer in range(self.q):
                    if peer == slot:
                        continue
                    entry = cross.get(peer)
                    pair = entry[di] if entry else None
                    if (
                        type(pair) is tuple and len(pair) == 2
                        and type(pair[0]) is int and type(pair[1]) is int
                        and pair[0] % fld.p == col_at[peer]
                        and pair[1] % fld.p == row_at[peer]
                    ):
                        continue
                    bad_peers.append(peer)
                if bad_peers:
                    slot_entries.append((di, 0, tuple(bad_peers)))
            if slot_entries:
                self._complaints.submit(slot, "c", tuple(slot_entries))

    def _settle_complaints(self):
        """Parse the common complaint map once; identical at all good slots."""
        result = self._complaints.result(self._good_viewer())
        per_dealer: dict = {dk: {"accusers": [], "pairs": set()} for dk in self.dealer_keys}
        n_dk = len(self.dealer_keys)
        for (slot, _name), value in result.items():
            if not isinstance(value, tuple):
                continue
            seen_di = set()
            for item in value:
                if not (isinstance(item, tuple) and len(item) == 3):
                    continue
                di, accuse, peers = item
                if not (isinstance(di, int) and 0 <= di < n_dk) or di in seen_di:
                    continue
                seen_di.add(di)
                entry = per_dealer[self.dealer_keys[di]]
                if accuse == 1:
                    entry["accusers"].append(slot)
                    continue
                if not isinstance(peers, tuple):
                    continue
                for peer in peers:
                    if isinstance(peer, int) and 0 <= peer < self.q and peer != slot:
                        entry["pairs"].add((min(slot, peer), max(slot, peer)))
        self._common_complaints = per_dealer

    def _fwd_tag(self):
        return (K_FWD, *self.base)

    def _forward_complaints(self):
        """Slots relay the settled complaint map to each dealer's player."""
        net = self.net
        for dk in self.dealer_keys:
            entry = self._common_complaints[dk]
            if not entry["accusers"] and not entry["pairs"]:
                continue
            summary = (tuple(sorted(entry["accusers"])), tuple(sorted(entry["pairs"])))
            dealer_player = self.dealers[dk].player
            for slot in range(self.q):
                player = self.group[slot]
                net.current_player = player
                net.send(player, dealer_player, self._fwd_tag(), (dk, summary))
                net.current_player = None

    # -- resolution ---------------------------------------------------------------

    def _res_tag(self):
        return (K_DEAL, *self.base, "res")

    def _emit_resolutions(self):
        """Each complained-about dealer reveals points and rows directly."""
        net = self.net
        fld = self.field
        by_dealer: dict[int, dict] = {}
        for dk in self.dealer_keys:
            player = self.dealers[dk].player
            by_dealer.setdefault(player, {})[dk] = None
        for player, dks in sorted(by_dealer.items()):
            summaries = {}
            for sender, payload in net.recv(player, self._fwd_tag()):
                if not (isinstance(payload, tuple) and len(payload) == 2):
                    continue
                dk, summary = payload
                if dk in dks:
                    summaries.setdefault(dk, []).append(summary)
            for dk in sorted(dks, key=str):
                spec = self.dealers[dk]
                if dk in self.resolution_override:
                    entries = self.resolution_override[dk]
                    if entries:
                        net.current_player = player
                        for slot in range(self.q):
                            net.send(player, self.group[slot], self._res_tag(), (dk, tuple(entries)))
                        net.current_player = None
                    continue
                if spec.secret is None or dk in self.deal_override:
                    continue  # nothing honest to resolve with
                copies = summaries.get(dk, [])
                if not copies:
                    continue
                tally: dict[str, list] = {}
                for c in copies:
                    tally.setdefault(repr(c), [0, c])[0] += 1
                _, summary = sorted(tally.values(), key=lambda cv: (-cv[0], repr(cv[1])))[0]
                if not (isinstance(summary, tuple) and len(summary) == 2):
                    continue
                accusers, pairs = summary
                rng = net.rng(spec.player, f"vss:{self.base}:{dk}")
                deal = deal_bivariate(fld, spec.secret, self.t, self.t, rng)
                entries = []
                for i in accusers:
                    if isinstance(i, int) and 0 <= i < self.q:
                        a = self.abscissas[i]
                        entries.append((("row", i), (tuple(deal.row(a)), tuple(deal.col(a)))))
                for pair in pairs:
                    if (isinstance(pair, tuple) and len(pair) == 2
                            and all(isinstance(x, int) and 0 <= x < self.q for x in pair)):
                        lo, hi = min(pair), max(pair)
                        entries.append((("pr", lo, hi),
                                        (deal.eval(self.abscissas[lo], self.abscissas[hi]),
                                         deal.eval(self.abscissas[hi], self.abscissas[lo]))))
                if entries:
                    net.current_player = player
                    for slot in range(self.q):
                        net.send(player, self.group[slot], self._res_tag(), (dk, tuple(entries)))
                    net.current_player = None

    def _rebroadcast_resolutions(self):
        """Claim a digest of the received resolution; content rides repair.

        The agreement window then carries 16-byte digests instead of the
        dealt polynomials, which keeps complaint storms cheap.
        """
        self._res_copy: dict[tuple, dict] = {}
        for slot in range(self.q):
            player = self.group[slot]
            got = {}
            for sender, payload in self.net.recv(player, self._res_tag()):
                if not (isinstance(payload, tuple) and len(payload) == 2):
                    continue
                dk, entries = payload
                if dk in self.dealers and self.dealers[dk].player == sender and dk not in got:
                    got[dk] = entries
            claim_entries = []
            for dk, entries in sorted(got.items(), key=lambda kv: str(kv[0])):
                if not self._resolution_acceptable(dk, entries):
                    continue  # malformed resolutions die before the rebroadcast
                self._res_copy.setdefault(dk, {})[slot] = entries
                claim_entries.append((self._dk_index[dk], _digest(entries)))
            if claim_entries:
                self._claims.submit(slot, "r", tuple(claim_entries))

    def _settle_digests(self):
        """The digest supported by 2t+1 identical slot claims wins."""
        result = self._claims.result(self._good_viewer())
        support: dict = {}
        n_dk = len(self.dealer_keys)
        for (slot, _name), value in result.items():
            if not isinstance(value, tuple):
                continue
            seen_di = set()
            for item in value:
                if not (isinstance(item, tuple) and len(item) == 2):
                    continue
                di, digest = item
                if not (isinstance(di, int) and 0 <= di < n_dk) or di in seen_di:
                    continue
                if not isinstance(digest, str):
                    continue
                seen_di.add(di)
                dk = self.dealer_keys[di]
                support.setdefault(dk, {}).setdefault(digest, 0)
                support[dk][digest] += 1
        self._winner_digest = {}
        for dk in self.dealer_keys:
            best = None
            for digest, count in sorted(support.get(dk, {}).items(), key=lambda kv: (-kv[1], kv[0])):
                if count >= 2 * self.t + 1:
                    best = digest
                break
            self._winner_digest[dk] = best

    def _request_res_repair(self):
        """Slots without the winning resolution content pull a copy.

        Honest dealers resolve identically toward everyone, so no good
        slot ever needs to pull; only equivocation victims ask, and a
        winning digest has t + 1 good holders able to answer.
        """
        net = self.net
        for slot in range(self.q):
            missing = []
            for di, dk in enumerate(self.dealer_keys):
                want = self._winner_digest.get(dk)
                if want is None:
                    continue
                copy = self._res_copy.get(dk, {}).get(slot)
                if copy is None or _digest(copy) != want:
                    missing.append(di)
            if missing:
                player = self.group[slot]
                net.current_player = player
                for target in sorted(set(self.group)):
                    net.send(player, target, (K_FWD, *self.base, "req"),
                             (slot, tuple(missing)))
                net.current_player = None

    def _respond_res_repair(self):
        net = self.net
        n_dk = len(self.dealer_keys)
        for slot in range(self.q):
            player = self.group[slot]
            for sender, payload in net.recv(player, (K_FWD, *self.base, "req")):
                if not (isinstance(payload, tuple) and len(payload) == 2):
                    continue
                from_slot, missing = payload
                if not isinstance(missing, tuple):
                    continue
                entries = []
                for di in missing:
                    if not (isinstance(di, int) and 0 <= di < n_dk):
                        continue
                    dk = self.dealer_keys[di]
                    want = self._winner_digest.get(dk)
                    copy = self._res_copy.get(dk, {}).get(slot)
                    if want is not None and copy is not None and _digest(copy) == want:
                        entries.append((di, copy))
                if entries:
                    net.current_player = player
                    net.send(player, sender, (K_DEAL, *self.base, "rep"), tuple(entries))
                    net.current_player = None

    def _settle_resolutions(self):
        """Adopt the digest-pinned content; no copy retrievable = unresolved."""
        viewer_slot = next(
            (s for s in range(self.q) if self.group[s] not in self.net.bad_players), 0)
        viewer = self.group[viewer_slot]
        repaired: dict = {}
        for dk in self.dealer_keys:
            want = self._winner_digest.get(dk)
            copy = self._res_copy.get(dk, {}).get(viewer_slot)
            if want is not None and copy is not None and _digest(copy) == want:
                repaired[dk] = copy
        n_dk = len(self.dealer_keys)
        for sender, payload in self.net.recv(viewer, (K_DEAL, *self.base, "rep")):
            if not isinstance(payload, tuple):
                continue
            for entry in payload:
                if not (isinstance(entry, tuple) and len(entry) == 2):
                    continue
                di, copy = entry
                if not (isinstance(di, int) and 0 <= di < n_dk):
                    continue
                dk = self.dealer_keys[di]
                if dk not in repaired:
                    want = self._winner_digest.get(dk)
                    if want is not None and _digest(copy) == want:
                        repaired[dk] = copy
        self._resolution = {}
        for dk in self.dealer_keys:
            self._resolution[dk] = repaired.get(dk)

    def _parse_resolution(self, dk, entries="settled"):
        """Split a resolution into row and point maps, or None."""
        if entries == "settled":
            entries = self._resolution.get(dk)
        if entries is None:
            return {}, {}
        rows, points = {}, {}
        if not isinstance(entries, tuple):
            return {}, {}
        for entry in entries:
            if not (isinstance(entry, tuple) and len(entry) == 2):
                continue
            key, value = entry
            if not isinstance(key, tuple):
                continue
            if len(key) == 2 and key[0] == "row" and isinstance(key[1], int):
                if 0 <= key[1] < self.q and key[1] not in rows:
                    rows[key[1]] = value
            elif len(key) == 3 and key[0] == "pr":
                lo, hi = key[1], key[2]
                if (isinstance(lo, int) and isinstance(hi, int)
                        and 0 <= lo < hi < self.q and (lo, hi) not in points):
                    points[(lo, hi)] = value
        return rows, points

    def _resolution_acceptable(self, dk, entries) -> bool:
        return self._public_resolution_ok(dk, entries)

    def _public_resolution_ok(self, dk, entries="settled") -> bool:
        """Completeness and mutual consistency of revealed data."""
        fld = self.field
        entry = self._common_complaints[dk]
        rows, points = self._parse_resolution(dk, entries)
        for i in entry["accusers"]:
            if i not in rows:
                return False
        for pair in entry["pairs"]:
            if pair not in points:
                return False
        for i, body in rows.items():
            if not (isinstance(body, tuple) and len(body) == 2):
                return False
            r, c = body
            if not (self._valid_poly(r) and self._valid_poly(c)):
                return False
            a = self.abscissas[i]
            if fld.poly_eval(list(r), a) != fld.poly_eval(list(c), a):
                return False
        for (lo, hi), body in points.items():
            if not (isinstance(body, tuple) and len(body) == 2
                    and all(isinstance(v, int) and 0 <= v < fld.p for v in body)):
                return False
        # pairwise consistency of revealed rows, and rows against points
        row_items = sorted(rows.items())
        for idx, (i, (ri, ci)) in enumerate(row_items):
            for j, (rj, cj) in row_items[idx + 1:]:
                ai, aj = self.abscissas[i], self.abscissas[j]
                if fld.poly_eval(list(ri), aj) != fld.poly_eval(list(cj), ai):
                    return False
                if fld.poly_eval(list(ci), aj) != fld.poly_eval(list(rj), ai):
                    return False
        for (lo, hi), (p_lo_hi, p_hi_lo) in sorted(points.items()):
            for i in (lo, hi):
                if i in rows:
                    ri, ci = rows[i]
                    other = hi if i == lo else lo
                    a_other = self.abscissas[other]
                    want_col = p_lo_hi if i == lo else p_hi_lo
                    want_row = p_hi_lo if i == lo else p_lo_hi
                    if fld.poly_eval(list(ci), a_other) != want_col:
                        return False
                    if fld.poly_eval(list(ri), a_other) != want_row:
                        return False
        return True

    # -- votes and verdict -----------------------------------------------------------

    def _cast_votes(self):
        fld = self.field
        for dk in self.dealer_keys:
            rows, points = self._parse_resolution(dk)
            for slot in range(self.q):
                row = self._rows.get((slot, dk))
                col = self._cols.get((slot, dk))
                if slot in rows and isinstance(rows[slot], tuple) and len(rows[slot]) == 2:
                    r, c = rows[slot]
                    if self._valid_poly(r) and self._valid_poly(c):
                        row, col = list(r), list(c)
                        self._rows[(slot, dk)] = row
                        self._cols[(slot, dk)] = col
                unhappy = row is None
                a_me = self.abscissas[slot]
                if not unhappy:
                    for i, body in rows.items():
                        if i == slot or not (isinstance(body, tuple) and len(body) == 2):
                            continue
                        r, c = body
                        if not (self._valid_poly(r) and self._valid_poly(c)):
                            continue
                        ai = self.abscissas[i]
                        if (fld.poly_eval(list(r), a_me) != fld.poly_eval(col, ai)
                                or fld.poly_eval(list(c), a_me) != fld.poly_eval(row, ai)):
                            unhappy = True
                            break
                if not unhappy:
                    for (lo, hi), body in points.items():
                        if slot not in (lo, hi):
                            continue
                        if not (isinstance(body, tuple) and len(body) == 2):
                            continue
                        p_lo_hi, p_hi_lo = body
                        other = hi if slot == lo else lo
                        a_other = self.abscissas[other]
                        want_col = p_lo_hi if slot == lo else p_hi_lo
                        want_row = p_hi_lo if slot == lo else p_lo_hi
                        if (fld.poly_eval(col, a_other) != want_col % fld.p
                                or fld.poly_eval(row, a_other) != want_row % fld.p):
                            unhappy = True
                            break
                if unhappy:
                    self._unhappy[(slot, dk)] = True
        for slot in range(self.q):
            unhappy_dis = tuple(
                di for di, dk in enumerate(self.dealer_keys)
                if self._unhappy.get((slot, dk))
            )
            suspect_dis = ()
            if self.extra_vote_fn is not None:
                suspect_dis = tuple(
                    di for di, dk in enumerate(self.dealer_keys)
                    if self.extra_vote_fn(slot, dk) is not None
                )
            if unhappy_dis or suspect_dis:
                self._votes.submit(slot, "u", (unhappy_dis, suspect_dis))

    def _finalize(self):
        votes = self._votes.result(self._good_viewer())
        n_dk = len(self.dealer_keys)
        unhappy_by_dk: dict = {dk: 0 for dk in self.dealer_keys}
        self.suspects_by_dk = {dk: 0 for dk in self.dealer_keys}
        for (slot, _name), value in votes.items():
            if not (isinstance(value, tuple) and len(value) == 2):
                continue
            unhappy_dis, suspect_dis = value
            for bucket, dis in ((unhappy_by_dk, unhappy_dis),
                                (self.suspects_by_dk, suspect_dis)):
                if not isinstance(dis, tuple):
                    continue
                for di in set(d for d in dis if isinstance(d, int) and 0 <= d < n_dk):
                    bucket[self.dealer_keys[di]] += 1
        for dk in self.dealer_keys:
            entry = self._common_complaints[dk]
            unhappy_count = unhappy_by_dk[dk]
            needed = bool(entry["accusers"] or entry["pairs"])
            ok = True
            if needed and self._resolution.get(dk) is None:
                ok = False
            if ok and needed and not self._public_resolution_ok(dk):
                ok = False
            if ok and len(entry["accusers"]) >= self.t + 1:
                ok = False
            if ok and unhappy_count >= self.t + 1:
                ok = False
            self.transcripts[dk] = VssTranscript(
                dealer=self.dealers[dk].player,
                outcome=ACCEPTED if ok else DISQUALIFIED,
                complaints={
                    "accusers": sorted(entry["accusers"]),
                    "pairs": sorted(entry["pairs"]),
                },
                resolution=self._resolution.get(dk),
                unhappy_votes=unhappy_count,
                accusers=len(entry["accusers"]),
            )
        self.done = True


def run_batch(net: SyncNetwork, batch: VssBatch):
    """Test driver: advance one batch to completion."""
    for offset in range(batch.stride + 1):
        batch.on_round(offset)
        net.advance_round()
