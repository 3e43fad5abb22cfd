"""The end-to-end protocol: schedule, commitment, masks, gates, output.

Each node j of the graph ends up in the state (s_j public within its
quorum, r_j shared at threshold t): the node invariant s_j - r_j = V_j
holds at every node, where V_j is the node's value under plain
evaluation of the committed inputs.  The phases are:

  formation   quorums sampled, nodes assigned (synthetic cost charged)
  commit      every player masks its input and verifiably shares the mask
              with its input node's quorum; a consistency check forces a
              single masked value or a default
  mask        each gate node's quorum jointly generates its output mask:
              everyone deals a fresh random value, accepted deals sum
  gate        per height level, gate sessions compute the masked outputs
  output      the root quorum opens its mask, unmasks, and the result
              flows down a binary quorum tree under majority filtering

Timing is static: each phase gets a window computed from the implemented
sub-protocol strides, gate levels get one session stride each, and every
state machine is advanced once per round by the lockstep loop.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field as dc_field
from typing import Optional

from .agreement import BroadcastWindow, broadcast_stride
from .circuit import Circuit, GateGraph, build_graph
from .errors import NoMajority, ThresholdViolated
from .field import Field
from .hw_mpc import ChildInput, GateSession, GateSpec, session_stride, session_threshold
from .quorum import QuorumTable, form_quorums, quorum_threshold
from .sharing import berlekamp_welch, decode_shares, position_abscissa
from .simnet import AdversaryStrategy, K_OPEN, K_OUT, K_SVAL, SyncNetwork
from .vss import ACCEPTED, DealerSpec, VssBatch, vss_stride


def majority_filter(received: list[int], where: str = "") -> int:
    """The unique value in at least two thirds of the received copies.

    Raising on a missing majority surfaces broken goodness assumptions
    loudly instead of silently adopting a minority value.
    """
    tally = Counter(received)
    value, count = sorted(tally.items(), key=lambda kv: (-kv[1], kv[0]))[0]
    if count < math.ceil(2 * len(received) / 3):
        raise NoMajority(
            f"{where}: no value in two thirds of {len(received)} copies")
    return value


@dataclass
class ScheduleConstants:
    """Round windows per phase, derived from sub-protocol strides."""

    t_commit: int
    t_mask: int
    t_gate: int     # one height level
    levels: int
    t_output: int

    @property
    def total(self) -> int:
        return self.t_commit + self.t_mask + self.levels * self.t_gate + self.t_output


@dataclass
class NodeState:
    """Per (node, quorum slot) view the protocol carries between phases."""

    node: int
    quorum_id: int
    s_value: dict[int, Optional[int]] = dc_field(default_factory=dict)
    mask_share: dict[int, Optional[int]] = dc_field(default_factory=dict)


@dataclass
class RunResult:
    outputs: dict[int, Optional[int]]          # player -> final output
    metrics: object
    transcript_hash: str
    node_states: dict[int, NodeState]
    committed_inputs: list[int]
    harness: dict
    quorum_outputs: dict[int, dict[int, int]]  # quorum -> player -> adopted o
    transcript_dump: str = ""
    adversary_values: list = dc_field(default_factory=list)


class ProtocolRun:
    """One full execution, advanced round by round."""

    def __init__(self, net: SyncNetwork, field: Field, circuit: Circuit,
                 graph: GateGraph, table: QuorumTable, inputs: list[int]):
        self.net = net
        self.field = field
        self.circuit = circuit
        self.graph = graph
        self.table = table
        self.inputs = [x % field.p for x in inputs]
        self.n = graph.n_players
        self.t_q = quorum_threshold(table.size)
        self.node_states: dict[int, NodeState] = {}
        self.committed: list[Optional[int]] = [None] * self.n
        self.harness: dict = {"masks": {}, "defaults": set()}
        self.quorum_outputs: dict[int, dict[int, int]] = {}
        self.outputs: dict[int, Optional[int]] = {}

        max_roles = 3 * table.size
        self.constants = ScheduleConstants(
            t_commit=vss_stride(self.t_q) + 1,
            t_mask=vss_stride(self.t_q) + 1,
            t_gate=session_stride(session_threshold(max_roles)) + 1,
            levels=max(graph.height[g] for g in graph.gate_nodes()),
            t_output=2 + math.ceil(math.log2(max(table.n, 2))) + 2,
        )
        self._commit_batch: Optional[VssBatch] = None
        self._commit_windows: dict[int, BroadcastWindow] = {}
        self._mask_batches: dict[int, VssBatch] = {}
        self._sessions: dict[int, GateSession] = {}
        self._prop_done: set[int] = set()

    # -- helpers -------------------------------------------------------------

    def node_quorum(self, node: int) -> int:
        return self.table.node_quorum(node)

    def _slots(self, qid: int) -> list[int]:
        return self.table.quorum(qid)

    # -- main loop -------------------------------------------------------------

    def run(self) -> RunResult:
        net = self.net
        c = self.constants
        boundaries = [
            ("commit", c.t_commit),
            ("mask", c.t_mask),
            ("gate", c.levels * c.t_gate),
            ("output", c.t_output),
        ]
        net.metrics.charge_synthetic_formation(self.table.formation_cost_per_player)
        offset = 0
        for phase, span in boundaries:
            net.set_phase(phase if phase in ("commit", "mask", "gate", "output") else "gate")
            for local in range(span):
                self._on_round(phase, local)
                net.advance_round()
                offset += 1
        self._collect_outputs()
        return RunResult(
            outputs=self.outputs,
            metrics=net.metrics,
            transcript_hash=net.transcript_hash(),
            node_states=self.node_states,
            committed_inputs=[x if x is not None else 0 for x in self.committed],
            harness=self.harness,
            quorum_outputs=self.quorum_outputs,
            transcript_dump=net.dump_transcript() if net.record == "full" else "",
            adversary_values=(
                net.adversary_payload_values() if net.record == "adversary" else []
            ),
        )

    def _on_round(self, phase: str, local: int):
        if phase == "commit":
            self._commit_round(local)
        elif phase == "mask":
            self._mask_round(local)
        elif phase == "gate":
            level, inner = divmod(local, self.constants.t_gate)
            self._gate_round(level + 1, inner)
        else:
            self._output_round(local)

    # -- input commitment --------------------------------------------------------

    def _commit_round(self, local: int):
        net = self.net
        fld = self.field
        if local == 0:
            # every player masks its input and deals the mask to its node's
            # quorum; the masked value goes out alongside
            dealers = {}
            self._commit_sendlog = {}
            for i in range(1, self.n + 1):
                node = self.graph.input_node(i)
                qid = self.node_quorum(node)
                player = i - 1
                rng = net.rng(player, f"commit:{i}")
                r = fld.sample_uniform(rng)
                s = fld.add(self.inputs[player], r)
                self.harness["masks"][node] = r
                dealers[i] = DealerSpec(player=player, secret=r)
                members = self._slots(qid)
                net.current_player = player
                for pos, member in enumerate(members):
                    net.send(player, member, (K_SVAL, "ic", i), (pos, s))
                net.current_player = None
                self._commit_sendlog[i] = s
            groups = {}
            for i in range(1, self.n + 1):
                qid = self.node_quorum(self.graph.input_node(i))
                groups.setdefault(qid, []).append(i)
            self._commit_groups = groups
            self._commit_batches = {}
            for qid, input_ids in sorted(groups.items()):
                batch = VssBatch(
                    net, ("ic", qid), fld, self._slots(qid), self.t_q,
                    {i: dealers[i] for i in input_ids},
                )
                self._commit_batches[qid] = batch
        if local == 1:
            # quorum members claim the masked value they received; one
            # broadcast window per quorum settles consistency
            self._commit_claims = {}
            for qid, input_ids in sorted(self._commit_groups.items()):
                members = self._slots(qid)
                keys = [(pos, ("sc", i)) for pos in range(len(members)) for i in input_ids]
                window = BroadcastWindow(net, ("icw", qid), members, self.t_q, keys)
                for i in input_ids:
                    player = i - 1
                    for pos, member in enumerate(members):
                        claim = None
                        for sender, payload in net.recv(member, (K_SVAL, "ic", i)):
                            if sender != player:
                                continue
                            if (isinstance(payload, tuple) and len(payload) == 2
                                    and payload[0] == pos and isinstance(payload[1], int)):
                                claim = payload[1] % fld.p
                                break
                        if claim is not None:
                            window.submit(pos, ("sc", i), claim)
                self._commit_claims[qid] = window
        if local >= 1:
            for window in self._commit_claims.values():
                window.on_round(local - 1)
        for batch in self._commit_batches.values():
            batch.on_round(local)
        if local == self.constants.t_commit - 1:
            self._settle_commitments()

    def _settle_commitments(self):
        fld = self.field
        bad = self.net.bad_players
        for qid, input_ids in sorted(self._commit_groups.items()):
            members = self._slots(qid)
            batch = self._commit_batches[qid]
            window = self._commit_claims[qid]
            viewer = next((m for m in members if m not in bad), members[0])
            claims = window.result(viewer)
            for i in input_ids:
                node = self.graph.input_node(i)
                state = NodeState(node=node, quorum_id=qid)
                tally = Counter()
                for pos in range(len(members)):
                    value = claims.get((pos, ("sc", i)))
                    if value is not None:
                        tally[value] += 1
                s_common = None
                if tally:
                    value, count = sorted(
                        tally.items(), key=lambda kv: (-kv[1], kv[0]))[0]
                    if count >= 2 * self.t_q + 1:
                        s_common = value
                accepted = batch.verdict(i) == ACCEPTED
                if s_common is None or not accepted:
                    # misbehaviour resolves to the defaults: input 0, mask 0
                    self.harness["defaults"].add(i)
                    self.harness["masks"][node] = 0
                    self.committed[i - 1] = 0
                    for pos in range(len(members)):
                        state.s_value[pos] = 0
                        state.mask_share[pos] = 0
                else:
                    for pos in range(len(members)):
                        state.s_value[pos] = s_common
                        state.mask_share[pos] = batch.share(pos, i)
                    # the committed input is defined by what was actually
                    # dealt, which a corrupt committer may have shifted
                    r_poly = decode_shares(
                        fld, [state.mask_share.get(pos) for pos in range(len(members))],
                        self.t_q,
                    ) if any(v is not None for v in state.mask_share.values()) else []
                    r_actual = r_poly[0] if r_poly else 0
                    self.harness["masks"][node] = r_actual
                    self.committed[i - 1] = fld.sub(s_common, r_actual)
                self.node_states[node] = state

    # -- mask generation ------------------------------------------------------------

    def _mask_round(self, local: int):
        net = self.net
        fld = self.field
        if local == 0:
            for node in self.graph.gate_nodes():
                qid = self.node_quorum(node)
                members = self._slots(qid)
                dealers = {}
                for pos, player in enumerate(members):
                    rng = net.rng(player, f"mask:{node}:{pos}")
                    dealers[pos] = DealerSpec(
                        player=player, secret=fld.sample_uniform(rng), slot=pos)
                self._mask_batches[node] = VssBatch(
                    net, ("mg", node), fld, members, self.t_q, dealers)
        for batch in self._mask_batches.values():
            batch.on_round(local)
        if local == self.constants.t_mask - 1:
            self._settle_masks()

    def _settle_masks(self):
        fld = self.field
        for node in self.graph.gate_nodes():
            qid = self.node_quorum(node)
            members = self._slots(qid)
            batch = self._mask_batches[node]
            state = NodeState(node=node, quorum_id=qid)
            accepted = [pos for pos in range(len(members))
                        if batch.verdict(pos) == ACCEPTED]
            self.harness.setdefault("mask_dealers", {})[node] = accepted
            for pos in range(len(members)):
                acc = 0
                dead = False
                for dealer_pos in accepted:
                    piece = batch.share(pos, dealer_pos)
                    if piece is None:
                        dead = True
                        break
                    acc = fld.add(acc, piece)
                state.mask_share[pos] = None if dead else acc
            # the omniscient record reconstructs the mask actually in play
            mask_poly = decode_shares(
                fld, [state.mask_share.get(pos) for pos in range(len(members))],
                self.t_q,
            ) if any(v is not None for v in state.mask_share.values()) else []
            self.harness["masks"][node] = mask_poly[0] if mask_poly else 0
            self.node_states[node] = state

    # -- gate computation -------------------------------------------------------------

    def _gate_round(self, level: int, inner: int):
        if inner == 0:
            for gid in self.graph.gate_nodes():
                if self.graph.height[gid] != level:
                    continue
                self._sessions[gid] = self._build_session(gid)
        for gid, session in sorted(self._sessions.items()):
            if self.graph.height[gid] == level and not session.done:
                session.on_round(inner)
                if session.done and session.failure is None:
                    self._absorb_session(gid, session)
        if inner == self.constants.t_gate - 1:
            for gid, session in sorted(self._sessions.items()):
                if self.graph.height[gid] == level and session.failure is not None:
                    raise session.failure

    def _build_session(self, gid: int) -> GateSession:
        gate = self.circuit.gates[gid]
        children = []
        for kind, ref in gate.sources:
            child_node = ref if kind == "g" else self.graph.input_node(ref)
            child_state = self.node_states[child_node]
            children.append(ChildInput(
                node=child_node,
                quorum_id=child_state.quorum_id,
                s_claims=dict(child_state.s_value),
                mask_shares=dict(child_state.mask_share),
            ))
        own = self.node_states[gid]
        spec = GateSpec(
            node=gid, kind=gate.kind, quorum_id=own.quorum_id,
            mask_shares=dict(own.mask_share), const=gate.const,
        )
        return GateSession(
            self.net, self.field, self.table, ("gs", gid), spec, children,
            quorum_threshold=self.t_q,
        )

    def _absorb_session(self, gid: int, session: GateSession):
        state = self.node_states[gid]
        members = self._slots(state.quorum_id)
        for pos, player in enumerate(members):
            state.s_value[pos] = session.output.get(player)

    # -- output reconstruction and propagation ----------------------------------------

    def _output_round(self, local: int):
        net = self.net
        fld = self.field
        root_state = self.node_states[self.graph.root]
        root_qid = root_state.quorum_id
        members = self._slots(root_qid)
        if local == 0:
            # root quorum opens its mask
            for pos, player in enumerate(members):
                share = root_state.mask_share.get(pos)
                if share is None:
                    continue
                net.current_player = player
                for target in sorted(set(members)):
                    net.send(player, target, (K_OPEN, "root"), (pos, share))
                net.current_player = None
            return
        if local == 1:
            adopted: dict[int, int] = {}
            for player in sorted(set(members)):
                points = []
                seen = set()
                for sender, payload in net.recv(player, (K_OPEN, "root")):
                    if not (isinstance(payload, tuple) and len(payload) == 2):
                        continue
                    pos, share = payload
                    if not (isinstance(pos, int) and 0 <= pos < len(members)):
                        continue
                    if members[pos] != sender or pos in seen:
                        continue
                    if isinstance(share, int):
                        seen.add(pos)
                        points.append((position_abscissa(pos), share % fld.p))
                poly = berlekamp_welch(fld, points, self.t_q)
                r_root = poly[0] if poly else 0
                s_root = next(
                    (root_state.s_value[pos] for pos, m in enumerate(members)
                     if m == player and root_state.s_value.get(pos) is not None),
                    None,
                )
                if s_root is None:
                    continue
                adopted[player] = fld.sub(s_root, r_root)
            self.quorum_outputs[1] = adopted
            self._forward_output(1, local)
            return
        # propagation levels: quorum at depth d settles at round 1 + d
        depth = local - 1
        for qid in range(2, self.table.n + 1):
            if qid.bit_length() - 1 != depth or qid in self._prop_done:
                continue
            self._settle_propagation(qid, local)

    def _forward_output(self, qid: int, local: int):
        net = self.net
        adopted = self.quorum_outputs.get(qid, {})
        for child in self.table.tree_children(qid):
            targets = sorted(set(self._slots(child)))
            for player in sorted(adopted):
                net.current_player = player
                for target in targets:
                    net.send(player, target, (K_OUT, child), (qid, adopted[player]))
                net.current_player = None

    def _settle_propagation(self, qid: int, local: int):
        net = self.net
        fld = self.field
        parent = self.table.tree_parent(qid)
        parent_members = self._slots(parent)
        adopted: dict[int, int] = {}
        for player in sorted(set(self._slots(qid))):
            received = []
            seen = set()
            for sender, payload in net.recv(player, (K_OUT, qid)):
                if not (isinstance(payload, tuple) and len(payload) == 2):
                    continue
                src, value = payload
                if src != parent or sender in seen or sender not in parent_members:
                    continue
                if isinstance(value, int):
                    seen.add(sender)
                    received.append(value % fld.p)
            if not received:
                continue
            adopted[player] = majority_filter(received, where=f"quorum {qid}")
        self.quorum_outputs[qid] = adopted
        self._prop_done.add(qid)
        self._forward_output(qid, local)

    def _collect_outputs(self):
        for player in range(self.n):
            values = []
            for qid in self.table.memberships.get(player, []):
                v = self.quorum_outputs.get(qid, {}).get(player)
                if v is not None:
                    values.append(v)
            self.outputs[player] = values[0] if values else None


def run_protocol(field: Field, circuit: Circuit, inputs: list[int],
                 bad_set=frozenset(), strategy: str | dict = "honest",
                 seed: int = 0, quorum_size: Optional[int] = None,
                 record: str = "hash", formation_retries: int = 1,
                 table: Optional[QuorumTable] = None) -> RunResult:
    """One deterministic end-to-end run; the main entry point."""
    n = circuit.n_inputs
    graph = build_graph(circuit, n)
    from .quorum import default_quorum_size

    q_size = quorum_size or default_quorum_size(n)
    adversary = AdversaryStrategy(bad_set, strategy, seed=seed) if bad_set else None
    net = SyncNetwork(n, field, seed=seed, record=record, adversary=adversary)
    if table is None:
        rng = net.rng(0, "formation")
        table = form_quorums(n, bad_set, q_size, rng, retries=formation_retries)
    # the largest abscissa used anywhere must stay inside the field
    if field.p <= 3 * table.size:
        raise ValueError(
            f"p={field.p} too small for sessions over {3 * table.size} roles")
    net.set_phase("formation")
    run = ProtocolRun(net, field, circuit, graph, table, inputs)
    return run.run()
