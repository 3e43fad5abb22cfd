"""The per-gate MPC session between neighbouring quorums.

A gate node g with children v_1..v_k is computed by the slots of the
(distinct) quorums hosting those k + 1 nodes.  Each slot of a
participating quorum acts as one role; a player appearing in several of
the quorums plays several roles.  Within the session all sharings live
at threshold T = floor((R - 1) / 3) over the R role abscissas.

Structure of a session:

1. s-publication: child-quorum roles state their public masked values;
   every role takes the per-child majority, which is identical at all
   good roles since fewer than a third of each quorum's claims can lie.
2. mask resharing: every role that holds a quorum-level share of a
   relevant mask re-deals it into the session with verifiable dealing.
   Disqualified deals become erasures.
3. syndrome cleaning: for each mask, the roles open linear combinations
   of the reshared values that equal the high interpolation coefficients
   over the contributing quorum positions.  Those coefficients depend
   only on deviations from the quorum's degree-t polynomial, never on
   the mask, so opening them is free; decoding the public virtual word
   pinpoints lying contributors, and the clean positions recombine into
   the session sharing of the mask.
4. product (mul gates): roles locally multiply their two mask shares,
   re-deal the product at degree T alongside a division witness that
   lets every other role check the dealt value against the product of
   its two check values, and broadcast suspect flags.  A degree-2T
   syndrome over the dealt products always detects a wrong value; on
   detection, roles flagged by T + 1 participants are excluded and the
   syndrome re-checked.  A sound threshold never frames an honest role,
   so a dirty re-check means the corruption model is violated and the
   session aborts loudly rather than output a wrong value.
5. output: each role assembles its share of s_g = f_g(...) + r_g from
   public values and session sharings, and opens it toward the gate
   quorum, whose members decode it identically under up to T lies.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Optional

from .errors import DecodingFailure, MismatchedRoleSets, ThresholdViolated
from .field import Field
from .sharing import (
    berlekamp_welch,
    deal_bivariate,
    locate_errors_from_syndrome,
    position_abscissa,
    syndrome_matrix,
)
from .simnet import K_DEAL, K_OPEN, K_SVAL, SyncNetwork
from .vss import ACCEPTED, DealerSpec, VssBatch, vss_stride


def session_threshold(n_roles: int) -> int:
    return (n_roles - 1) // 3


def session_stride(t_session: int) -> int:
    """Rounds from s-publication to the gate quorum holding its output."""
    return 5 + 2 * vss_stride(t_session)


@dataclass
class ChildInput:
    """What a child node's quorum carries into the session."""

    node: int
    quorum_id: int
    s_claims: dict[int, Optional[int]]    # quorum slot -> claimed masked value
    mask_shares: dict[int, Optional[int]]  # quorum slot -> share of the child mask


@dataclass
class GateSpec:
    node: int
    kind: str                              # add | mul | cmul
    quorum_id: int
    mask_shares: dict[int, Optional[int]]  # gate-quorum slot -> share of r_g
    const: Optional[int] = None


def mpc_linear(field: Field, coeffs, share_maps, const: int = 0) -> dict:
    """Shares of sum(c_i * v_i) + const; local, zero communication."""
    if len(coeffs) != len(share_maps):
        raise ValueError("one coefficient per share map")
    keys = None
    for shares in share_maps:
        if keys is None:
            keys = set(shares)
        elif set(shares) != keys:
            raise MismatchedRoleSets("share maps cover different role sets")
    out = {}
    for key in keys or ():
        acc = const % field.p
        for c, shares in zip(coeffs, share_maps):
            piece = shares[key]
            if piece is None:
                acc = None
                break
            acc = (acc + c * piece) % field.p
        out[key] = acc
    return out


class GateSession:
    """One gate's computation; advanced by the round scheduler."""

    def __init__(self, net: SyncNetwork, field: Field, table, base_tag: tuple,
                 spec: GateSpec, children: list[ChildInput],
                 quorum_threshold: int):
        self.net = net
        self.field = field
        self.table = table
        self.base = tuple(base_tag)
        self.spec = spec
        self.children = children
        self.t_q = quorum_threshold

        quorum_ids = []
        for child in children:
            if child.quorum_id not in quorum_ids:
                quorum_ids.append(child.quorum_id)
        if spec.quorum_id not in quorum_ids:
            quorum_ids.append(spec.quorum_id)
        self.quorum_ids = quorum_ids
        self.roles: list[tuple[int, int]] = [
            (qid, pos) for qid in quorum_ids for pos in range(table.size)
        ]
        self.players = [table.quorum(qid)[pos] for qid, pos in self.roles]
        self.R = len(self.roles)
        self.T = session_threshold(self.R)
        # role multiplexing must never hand one player a third of the roles
        worst = max(self.players.count(p) for p in set(self.players))
        if worst * 3 >= self.R:
            raise ThresholdViolated(
                f"player holds {worst} of {self.R} roles in session {base_tag}")
        self.stride = session_stride(self.T)
        self._vs = vss_stride(self.T)

        # masks: one per child plus the gate's own
        self.masks = [
            ("c", idx, child.quorum_id, child.mask_shares)
            for idx, child in enumerate(children)
        ] + [("g", len(children), spec.quorum_id, spec.mask_shares)]

        self.s_values: list[Optional[int]] = [None] * len(children)
        self._reshare: Optional[VssBatch] = None
        self._product: Optional[VssBatch] = None
        self._mask_clean: dict[int, list[int]] = {}
        self._mask_rows: dict[int, list] = {}
        self._r_shares: dict[int, dict[int, Optional[int]]] = {}
        self._r_cols: dict[int, dict[int, Optional[list]]] = {}
        self._d_shares: dict[int, Optional[int]] = {}
        self._witnesses: dict[int, dict[int, int]] = {}
        self._qual: list[int] = []
        self._excluded: list[int] = []
        self._syndrome_dirty = False
        self._prod_shares: dict[int, Optional[int]] = {}
        self.output: dict[int, int] = {}   # gate-quorum player -> s_g
        self.failure: Optional[Exception] = None
        self.done = False

    # -- helpers -----------------------------------------------------------

    def role_abscissa(self, role: int) -> int:
        return role + 1

    def _good_viewer_role(self) -> int:
        bad = self.net.bad_players
        for role, player in enumerate(self.players):
            if player not in bad:
                return role
        return 0

    def _send_all(self, player: int, tag: tuple, payload):
        net = self.net
        net.current_player = player
        for target in sorted(set(self.players)):
            net.send(player, target, tag, payload)
        net.current_player = None

    # -- round machinery ------------------------------------------------------

    def on_round(self, offset: int):
        if self.done or self.failure is not None:
            return
        try:
            self._dispatch(offset)
        except (DecodingFailure, ThresholdViolated) as exc:
            self.failure = exc
            self.done = True

    def _dispatch(self, offset: int):
        vs = self._vs
        if offset == 0:
            self._emit_s_claims()
            return
        if offset == 1:
            self._settle_s_majority()
            self._start_reshare()
        if 1 <= offset <= 1 + vs:
            self._reshare.on_round(offset - 1)
        if offset == 1 + vs:
            self._emit_mask_syndromes()
            return
        if offset == 2 + vs:
            self._settle_masks()
            if self.spec.kind == "mul":
                self._start_product()
        if self.spec.kind == "mul":
            if offset == 3 + vs:
                self._collect_witnesses()
            if 2 + vs <= offset <= 2 + 2 * vs:
                self._product.on_round(offset - 2 - vs)
            if offset == 2 + 2 * vs:
                self._emit_product_syndrome(round_two=False)
                return
            if offset == 3 + 2 * vs:
                self._settle_product_syndrome()
                return
            if offset == 4 + 2 * vs:
                self._finish_product()
                self._emit_output()
                return
        else:
            if offset == 4 + 2 * vs:
                self._emit_output()
                return
        if offset == 5 + 2 * vs:
            self._settle_output()
            self.done = True

    # -- step 1: public masked values ------------------------------------------

    def _emit_s_claims(self):
        for idx, child in enumerate(self.children):
            members = self.table.quorum(child.quorum_id)
            for pos, player in enumerate(members):
                claim = child.s_claims.get(pos)
                if claim is None:
                    continue
                self._send_all(player, (K_SVAL, *self.base, "s"), (idx, pos, claim))

    def _settle_s_majority(self):
        # per-slot claims; the majority is identical at every good role
        viewer = self.players[self._good_viewer_role()]
        claims: dict[int, dict[int, int]] = {i: {} for i in range(len(self.children))}
        for sender, payload in self.net.recv(viewer, (K_SVAL, *self.base, "s")):
            if not (isinstance(payload, tuple) and len(payload) == 3):
                continue
            idx, pos, value = payload
            if not (isinstance(idx, int) and 0 <= idx < len(self.children)):
                continue
            child = self.children[idx]
            members = self.table.quorum(child.quorum_id)
            if not (isinstance(pos, int) and 0 <= pos < len(members)):
                continue
            if members[pos] != sender or not isinstance(value, int):
                continue
            claims[idx].setdefault(pos, value % self.field.p)
        for idx in range(len(self.children)):
            counts: dict[int, int] = {}
            for value in claims[idx].values():
                counts[value] = counts.get(value, 0) + 1
            if not counts:
                raise ThresholdViolated(f"no masked value for child {idx}")
            value, count = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[0]
            if count <= self.table.size // 2:
                raise ThresholdViolated(f"no majority masked value for child {idx}")
            self.s_values[idx] = value

    # -- step 2: reshare quorum mask shares into the session --------------------

    def _start_reshare(self):
        dealers = {}
        for kind, mask_idx, qid, shares in self.masks:
            members = self.table.quorum(qid)
            for pos in range(self.table.size):
                value = shares.get(pos)
                dealers[(mask_idx, pos)] = DealerSpec(
                    player=members[pos], secret=value,
                    slot=self.roles.index((qid, pos)),
                )
        self._reshare = VssBatch(
            self.net, (*self.base, "rs"), self.field,
            self.players, self.T, dealers,
        )

    def _emit_mask_syndromes(self):
        fld = self.field
        batch = self._reshare
        self._syn_rows = {}
        payloads: dict[int, list] = {role: [] for role in range(self.R)}
        for kind, mask_idx, qid, shares in self.masks:
            kept = [
                pos for pos in range(self.table.size)
                if batch.verdict((mask_idx, pos)) == ACCEPTED
            ]
            if len(kept) < 2 * self.t_q + 1:
                raise ThresholdViolated(
                    f"only {len(kept)} reshared contributions for mask {mask_idx}")
            self._mask_clean[mask_idx] = kept
            abscissas = [position_abscissa(pos) for pos in kept]
            rows = syndrome_matrix(fld, abscissas, self.t_q)
            self._syn_rows[mask_idx] = rows
            for role in range(self.R):
                for r_idx, row in enumerate(rows):
                    acc = 0
                    dead = False
                    for coeff, pos in zip(row, kept):
                        piece = batch.share(role, (mask_idx, pos))
                        if piece is None:
                            dead = True
                            break
                        acc = (acc + coeff * piece) % fld.p
                    payloads[role].append(None if dead else acc)
            self.net.charge_ops(self.players[0], len(rows) * len(kept) * self.R)
        for role in range(self.R):
            self._send_all(
                self.players[role], (K_OPEN, *self.base, "ms"),
                (role, tuple(payloads[role])),
            )

    def _open_vectors(self, tag: tuple, width: int) -> list[int]:
        """Decode `width` public values opened as degree-T role sharings."""
        viewer = self.players[self._good_viewer_role()]
        vectors: dict[int, tuple] = {}
        for sender, payload in self.net.recv(viewer, tag):
            if not (isinstance(payload, tuple) and len(payload) == 2):
                continue
            role, values = payload
            if not (isinstance(role, int) and 0 <= role < self.R):
                continue
            if self.players[role] != sender or role in vectors:
                continue
            if isinstance(values, tuple) and len(values) == width:
                vectors[role] = values
        out = []
        for i in range(width):
            points = []
            for role in range(self.R):
                vec = vectors.get(role)
                if vec is None or not isinstance(vec[i], int):
                    continue
                points.append((self.role_abscissa(role), vec[i] % self.field.p))
            poly = berlekamp_welch(self.field, points, self.T)
            self.net.charge_ops(viewer, len(points) ** 2)
            out.append(poly[0] if poly else 0)
        return out

    def _settle_masks(self):
        fld = self.field
        widths = [len(self._syn_rows[mask_idx]) for _, mask_idx, _, _ in self.masks]
        values = self._open_vectors((K_OPEN, *self.base, "ms"), sum(widths))
        cursor = 0
        batch = self._reshare
        for (kind, mask_idx, qid, shares), width in zip(self.masks, widths):
            syndrome = values[cursor:cursor + width]
            cursor += width
            kept = self._mask_clean[mask_idx]
            abscissas = [position_abscissa(pos) for pos in kept]
            bad_idx = locate_errors_from_syndrome(fld, abscissas, syndrome, self.t_q)
            clean = [pos for i, pos in enumerate(kept) if i not in set(bad_idx)]
            if len(clean) < self.t_q + 1:
                raise ThresholdViolated(f"mask {mask_idx} unrecoverable")
            self._mask_clean[mask_idx] = clean
            weights = fld.lagrange_weights_at(
                [position_abscissa(pos) for pos in clean], at=0)
            shares_out: dict[int, Optional[int]] = {}
            cols_out: dict[int, Optional[list]] = {}
            for role in range(self.R):
                acc = 0
                col_acc: Optional[list] = []
                dead = False
                for w, pos in zip(weights, clean):
                    piece = batch.share(role, (mask_idx, pos))
                    col = batch.col(role, (mask_idx, pos))
                    if piece is None or col is None:
                        dead = True
                        break
                    acc = (acc + w * piece) % fld.p
                    col_acc = fld.poly_add(col_acc, fld.poly_scale(col, w))
                shares_out[role] = None if dead else acc
                cols_out[role] = None if dead else col_acc
            self._r_shares[mask_idx] = shares_out
            self._r_cols[mask_idx] = cols_out
            self.net.charge_ops(self.players[0], len(clean) * self.R * 2)

    # -- step 3: the product of the two child masks (mul gates) -----------------

    def _start_product(self):
        fld = self.field
        batch = self._reshare
        dealers = {}
        witness_payload: dict[int, tuple] = {}
        for role in range(self.R):
            a = self._r_shares[0].get(role)
            b = self._r_shares[1].get(role)
            if a is None or b is None:
                dealers[role] = DealerSpec(player=self.players[role], secret=None, slot=role)
                continue
            d_value = a * b % fld.p
            self._d_shares[role] = d_value
            dealers[role] = DealerSpec(
                player=self.players[role], secret=d_value, slot=role)
        self._product = VssBatch(
            self.net, (*self.base, "pd"), self.field,
            self.players, self.T, dealers,
            extra_vote_fn=self._suspect_vote,
        )
        # division witness: k(x) = (rowA*rowB - dealt univariate) / x, sent
        # pointwise so every role can audit the dealt constant term
        for role in range(self.R):
            if role not in self._d_shares:
                continue
            row_a = self._row_of(0, role)
            row_b = self._row_of(1, role)
            if row_a is None or row_b is None:
                continue
            q_poly = fld.poly_mul(row_a, row_b)
            f_poly = self._product_univariate(role)
            diff = fld.poly_sub(q_poly, f_poly)
            if diff and diff[0] != 0:
                continue  # cannot witness a value that is not the product
            k_poly = diff[1:] if diff else []
            values = tuple(
                fld.poly_eval(k_poly, self.role_abscissa(w)) for w in range(self.R)
            )
            self.net.charge_ops(self.players[role], self.R * max(len(k_poly), 1))
            self._send_all(
                self.players[role], (K_DEAL, *self.base, "wit"), (role, values))

    def _row_of(self, mask_idx: int, role: int) -> Optional[list]:
        """The sharing polynomial of this role's mask share, known to it."""
        fld = self.field
        batch = self._reshare
        clean = self._mask_clean[mask_idx]
        weights = fld.lagrange_weights_at(
            [position_abscissa(pos) for pos in clean], at=0)
        acc: list = []
        for w, pos in zip(weights, clean):
            row = batch.row(role, (mask_idx, pos))
            if row is None:
                return None
            acc = fld.poly_add(acc, fld.poly_scale(row, w))
        return acc or [0]

    def _product_univariate(self, role: int) -> list:
        """The univariate share polynomial of role's own product deal."""
        spec = self._product.dealers[role]
        rng = self.net.rng(spec.player, f"vss:{self._product.base}:{role}")
        deal = deal_bivariate(self.field, spec.secret, self.T, self.T, rng)
        return self.field.poly_trim(list(deal.coeffs[0])) or [0]

    def _suspect_vote(self, slot: int, dealer_key):
        """Flag dealers whose dealt constant contradicts the check values."""
        if not isinstance(dealer_key, int):
            return None
        v = dealer_key
        fld = self.field
        col_a = self._r_cols[0].get(slot)
        col_b = self._r_cols[1].get(slot)
        share_d = self._product.row(slot, v)
        if col_a is None or col_b is None or share_d is None:
            return None
        witness = self._witnesses.get(v, {}).get(slot)
        if witness is None:
            return 1  # dealt a product without an auditable witness
        beta_v = self.role_abscissa(v)
        q_at_me = fld.mul(
            fld.poly_eval(col_a, beta_v), fld.poly_eval(col_b, beta_v))
        lhs = fld.sub(q_at_me, share_d[0])
        rhs = fld.mul(self.role_abscissa(slot), witness)
        return 1 if lhs != rhs else None

    def _collect_witnesses(self):
        viewer = self.players[self._good_viewer_role()]
        for role in range(self.R):
            player = self.players[role]
            got: dict[int, tuple] = {}
            for sender, payload in self.net.recv(player, (K_DEAL, *self.base, "wit")):
                if not (isinstance(payload, tuple) and len(payload) == 2):
                    continue
                v, values = payload
                if not (isinstance(v, int) and 0 <= v < self.R):
                    continue
                if self.players[v] != sender or v in got:
                    continue
                if isinstance(values, tuple) and len(values) == self.R:
                    got[v] = values
            for v, values in got.items():
                if isinstance(values[role], int):
                    self._witnesses.setdefault(v, {})[role] = values[role] % self.field.p
        # stash per-role so _suspect_vote (called during the batch) sees them

    def _emit_product_syndrome(self, round_two: bool):
        fld = self.field
        batch = self._product
        if not round_two:
            self._qual = [
                v for v in range(self.R) if batch.verdict(v) == ACCEPTED
            ]
        qual = [v for v in self._qual if v not in self._excluded]
        if len(qual) < 2 * self.T + 1:
            raise ThresholdViolated(f"only {len(qual)} usable product deals")
        abscissas = [self.role_abscissa(v) for v in qual]
        rows = syndrome_matrix(fld, abscissas, 2 * self.T)
        self._prod_syn_rows = rows
        self._prod_qual_now = qual
        tag_name = "ps2" if round_two else "ps1"
        for role in range(self.R):
            values = []
            for row in rows:
                acc = 0
                dead = False
                for coeff, v in zip(row, qual):
                    piece = batch.share(role, v)
                    if piece is None:
                        dead = True
                        break
                    acc = (acc + coeff * piece) % fld.p
                values.append(None if dead else acc)
            self._send_all(
                self.players[role], (K_OPEN, *self.base, tag_name),
                (role, tuple(values)),
            )
        self.net.charge_ops(self.players[0], len(rows) * len(qual) * self.R)

    def _settle_product_syndrome(self):
        rows = self._prod_syn_rows
        if rows:
            syndrome = self._open_vectors((K_OPEN, *self.base, "ps1"), len(rows))
        else:
            syndrome = []
        if not any(syndrome):
            self._emit_output_prep()
            return
        # locate liars with the broadcast suspect flags, then re-check
        self._syndrome_dirty = True
        counts = self._product.suspects_by_dk
        self._excluded = sorted(
            v for v, c in counts.items() if c >= self.T + 1
        )
        if not self._excluded:
            raise ThresholdViolated(
                "product syndrome dirty but no role gathered enough suspicion")
        self._emit_product_syndrome(round_two=True)

    def _emit_output_prep(self):
        self._final_qual = list(self._prod_qual_now)

    def _finish_product(self):
        fld = self.field
        if self._syndrome_dirty:
            rows = self._prod_syn_rows
            syndrome = self._open_vectors((K_OPEN, *self.base, "ps2"), len(rows)) if rows else []
            if any(syndrome):
                raise ThresholdViolated(
                    "product corruption persists beyond the located cheats")
            self._final_qual = list(self._prod_qual_now)
        qual = self._final_qual
        weights = fld.lagrange_weights_at(
            [self.role_abscissa(v) for v in qual], at=0)
        batch = self._product
        for role in range(self.R):
            acc = 0
            dead = False
            for w, v in zip(weights, qual):
                piece = batch.share(role, v)
                if piece is None:
                    dead = True
                    break
                acc = (acc + w * piece) % fld.p
            self._prod_shares[role] = None if dead else acc
        self.net.charge_ops(self.players[0], len(qual) * self.R)

    # -- step 4: assemble and open the gate output -------------------------------

    def _z_share(self, role: int) -> Optional[int]:
        fld = self.field
        kind = self.spec.kind
        r_g = self._r_shares[len(self.children)].get(role)
        if r_g is None:
            return None
        if kind == "add":
            r1 = self._r_shares[0].get(role)
            r2 = self._r_shares[1].get(role)
            if r1 is None or r2 is None:
                return None
            public = fld.add(self.s_values[0], self.s_values[1])
            return (public - r1 - r2 + r_g) % fld.p
        if kind == "cmul":
            r1 = self._r_shares[0].get(role)
            if r1 is None:
                return None
            c = self.spec.const % fld.p
            return (c * self.s_values[0] - c * r1 + r_g) % fld.p
        if kind == "mul":
            r1 = self._r_shares[0].get(role)
            r2 = self._r_shares[1].get(role)
            prod = self._prod_shares.get(role)
            if r1 is None or r2 is None or prod is None:
                return None
            s1, s2 = self.s_values
            value = (
                s1 * s2 - s1 * r2 - s2 * r1 + prod + r_g
            ) % fld.p
            return value
        raise ValueError(f"unknown gate kind {kind}")

    def _emit_output(self):
        owners = sorted(set(self.table.quorum(self.spec.quorum_id)))
        for role in range(self.R):
            share = self._z_share(role)
            if share is None:
                continue
            player = self.players[role]
            self.net.current_player = player
            for target in owners:
                self.net.send(player, target, (K_OPEN, *self.base, "out"), (role, share))
            self.net.current_player = None
            self.net.charge_ops(player, 3)

    def _settle_output(self):
        owners = sorted(set(self.table.quorum(self.spec.quorum_id)))
        for player in owners:
            points = []
            seen = set()
            for sender, payload in self.net.recv(player, (K_OPEN, *self.base, "out")):
                if not (isinstance(payload, tuple) and len(payload) == 2):
                    continue
                role, share = payload
                if not (isinstance(role, int) and 0 <= role < self.R):
                    continue
                if self.players[role] != sender or role in seen:
                    continue
                if isinstance(share, int):
                    seen.add(role)
                    points.append((self.role_abscissa(role), share % self.field.p))
            poly = berlekamp_welch(self.field, points, self.T)
            self.net.charge_ops(player, len(points) ** 2)
            self.output[player] = poly[0] if poly else 0


def mpc_multiply(net: SyncNetwork, field: Field, base_tag: tuple,
                 players: list[int], t: int,
                 shares_a: dict[int, int], shares_b: dict[int, int]) -> dict:
    """Standalone robust product of two degree-t sharings over one role set.

    Local multiply to degree 2t, verified resharing of each product term,
    then the linear degree-reduction recombination.  Returns per-slot
    shares of a*b; reconstruct with shamir tools to check.
    """
    R = len(players)
    if R < 3 * t + 1:
        raise ThresholdViolated(f"{R} roles cannot tolerate t={t}")
    dealers = {}
    for slot in range(R):
        a = shares_a.get(slot)
        b = shares_b.get(slot)
        secret = None if a is None or b is None else a * b % field.p
        dealers[slot] = DealerSpec(player=players[slot], secret=secret, slot=slot)
    batch = VssBatch(net, (*base_tag, "mul"), field, players, t, dealers)
    for offset in range(batch.stride + 1):
        batch.on_round(offset)
        net.advance_round()
    qual = [v for v in range(R) if batch.verdict(v) == ACCEPTED]
    if len(qual) < 2 * t + 1:
        raise ThresholdViolated("too few accepted product deals")
    weights = field.lagrange_weights_at(
        [position_abscissa(v) for v in qual], at=0)
    out = {}
    for slot in range(R):
        acc = 0
        dead = False
        for w, v in zip(weights, qual):
            piece = batch.share(slot, v)
            if piece is None:
                dead = True
                break
            acc = (acc + w * piece) % field.p
        out[slot] = None if dead else acc
    return out
