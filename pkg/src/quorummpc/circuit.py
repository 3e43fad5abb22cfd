"""Arithmetic circuits: netlist parsing, the node graph, plain evaluation.

Netlist grammar, one statement per line, `#` starts a comment:

    input <i>                    declare input terminal i (1-indexed)
    gate <id> add <src> <src>    field addition
    gate <id> mul <src> <src>    field multiplication
    gate <id> cmul <c> <src>     multiply by the public constant c
    output <gate-id>             must name gate 1

Sources are `x<i>` for input i or `g<j>` for gate j.  Gates are numbered
1..m and gate 1 is the output gate.  Fan-in and fan-out are bounded by
K_MAX (2): a gate consumes at most two wires and any wire feeds at most
two gates.

The node graph has one node per gate (node j for gate j) plus one input
node per player (node m + i for input i); edges follow computation flow.
Height is 0 at input nodes and 1 + max over children at gate nodes.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field as dc_field
from typing import Optional

from .errors import CycleDetected, FanInExceeded, ParseError

K_MAX = 2


@dataclass(frozen=True)
class Gate:
    gid: int
    kind: str                 # "add" | "mul" | "cmul"
    sources: tuple            # ("x", i) or ("g", j), fan-in 1 for cmul
    const: Optional[int] = None


@dataclass
class Circuit:
    n_inputs: int
    gates: dict[int, Gate]
    topo_order: list[int] = dc_field(default_factory=list)

    @property
    def m(self) -> int:
        return len(self.gates)

    def max_constant(self) -> int:
        return max((g.const or 0 for g in self.gates.values()), default=0)

    def eval_plain(self, field, inputs: list[int]) -> tuple[int, dict]:
        """Direct evaluation; returns the output and every node value.

        Node values are keyed like the graph: gate j at node j, input i
        at node m + i.
        """
        if len(inputs) != self.n_inputs:
            raise ValueError(f"expected {self.n_inputs} inputs, got {len(inputs)}")
        values: dict[int, int] = {}
        for i, x in enumerate(inputs, start=1):
            values[self.m + i] = x % field.p
        for gid in self.topo_order:
            gate = self.gates[gid]
            srcs = [
                values[self.m + ref] if kind == "x" else values[ref]
                for kind, ref in gate.sources
            ]
            if gate.kind == "add":
                values[gid] = field.add(srcs[0], srcs[1])
            elif gate.kind == "mul":
                values[gid] = field.mul(srcs[0], srcs[1])
            else:
                values[gid] = field.mul(gate.const % field.p, srcs[0])
        return values[1], values


def _parse_source(token: str, line_no: int):
    if len(token) > 1 and token[0] in ("x", "g") and token[1:].isdigit():
        return (token[0], int(token[1:]))
    raise ParseError(f"bad source {token!r} (want x<i> or g<j>)", line_no)


def parse_circuit(text: str) -> Circuit:
    inputs: set[int] = set()
    gates: dict[int, Gate] = {}
    output_decl = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "input":
            if len(parts) != 2 or not parts[1].isdigit():
                raise ParseError("want: input <i>", line_no)
            i = int(parts[1])
            if i < 1 or i in inputs:
                raise ParseError(f"bad or duplicate input {i}", line_no)
            inputs.add(i)
        elif parts[0] == "gate":
            if len(parts) < 4 or not parts[1].isdigit():
                raise ParseError("want: gate <id> <kind> ...", line_no)
            gid = int(parts[1])
            if gid < 1 or gid in gates:
                raise ParseError(f"bad or duplicate gate id {gid}", line_no)
            kind = parts[2]
            if kind in ("add", "mul"):
                if len(parts) != 5:
                    raise ParseError(f"{kind} takes two sources", line_no)
                sources = tuple(_parse_source(p, line_no) for p in parts[3:5])
            elif kind == "cmul":
                if len(parts) != 5 or not parts[3].isdigit():
                    raise ParseError("want: gate <id> cmul <c> <src>", line_no)
                sources = (_parse_source(parts[4], line_no),)
                gates[gid] = Gate(gid, "cmul", sources, const=int(parts[3]))
                continue
            else:
                raise ParseError(f"unknown gate kind {kind!r}", line_no)
            if len(sources) > K_MAX:
                raise FanInExceeded(f"gate {gid} fan-in exceeds {K_MAX}", line_no)
            gates[gid] = Gate(gid, kind, sources)
        elif parts[0] == "output":
            if len(parts) != 2 or not parts[1].isdigit():
                raise ParseError("want: output <gate-id>", line_no)
            if output_decl is not None:
                raise ParseError("duplicate output declaration", line_no)
            output_decl = int(parts[1])
        else:
            raise ParseError(f"unknown statement {parts[0]!r}", line_no)

    if not gates:
        raise ParseError("no gates declared")
    if output_decl is None:
        raise ParseError("missing output declaration")
    if output_decl != 1 or 1 not in gates:
        raise ParseError("the output gate must be gate 1")
    n = len(inputs)
    if inputs != set(range(1, n + 1)):
        raise ParseError(f"inputs must be exactly 1..{n}")

    fan_out: dict[tuple, int] = {}
    for gate in gates.values():
        for kind, ref in gate.sources:
            if kind == "x" and ref not in inputs:
                raise ParseError(f"gate {gate.gid} reads undeclared input {ref}")
            if kind == "g" and ref not in gates:
                raise ParseError(f"gate {gate.gid} reads undeclared gate {ref}")
            fan_out[(kind, ref)] = fan_out.get((kind, ref), 0) + 1
    for (kind, ref), count in fan_out.items():
        if count > K_MAX:
            raise FanInExceeded(f"{kind}{ref} feeds {count} gates (max {K_MAX})")

    # Kahn's algorithm for a topological order over gate-to-gate wires
    indeg = {gid: 0 for gid in gates}
    consumers: dict[int, list[int]] = {gid: [] for gid in gates}
    for gate in gates.values():
        for kind, ref in gate.sources:
            if kind == "g":
                indeg[gate.gid] += 1
                consumers[ref].append(gate.gid)
    ready = sorted(gid for gid, d in indeg.items() if d == 0)
    topo: list[int] = []
    while ready:
        gid = ready.pop(0)
        topo.append(gid)
        for nxt in consumers[gid]:
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                ready.append(nxt)
        ready.sort()
    if len(topo) != len(gates):
        raise CycleDetected("gate wires form a loop")
    return Circuit(n_inputs=n, gates=gates, topo_order=topo)


@dataclass
class GateGraph:
    """Nodes 1..m are gates, m+1..m+n inputs; edges follow computation."""

    circuit: Circuit
    n_players: int
    children: dict[int, list[int]] = dc_field(default_factory=dict)
    parents: dict[int, list[int]] = dc_field(default_factory=dict)
    height: dict[int, int] = dc_field(default_factory=dict)

    @property
    def m(self) -> int:
        return self.circuit.m

    @property
    def n_nodes(self) -> int:
        return self.m + self.n_players

    @property
    def root(self) -> int:
        return 1

    def gate_nodes(self) -> list[int]:
        return list(range(1, self.m + 1))

    def input_node(self, i: int) -> int:
        return self.m + i


def build_graph(circuit: Circuit, n_players: int) -> GateGraph:
    if n_players < circuit.n_inputs:
        raise ValueError("fewer players than circuit inputs")
    g = GateGraph(circuit, n_players)
    m = circuit.m
    for node in range(1, m + n_players + 1):
        g.children[node] = []
        g.parents[node] = []
    for gate in circuit.gates.values():
        for kind, ref in gate.sources:
            child = ref if kind == "g" else m + ref
            g.children[gate.gid].append(child)
            g.parents[child].append(gate.gid)
    for i in range(1, n_players + 1):
        g.height[m + i] = 0
    for gid in circuit.topo_order:
        g.height[gid] = 1 + max(g.height[c] for c in g.children[gid])
    return g


def random_circuit(n: int, m: int, depth: int, rng: random.Random,
                   cmul_weight: float = 0.2, max_const: int = 5) -> Circuit:
    """A random valid circuit: m gates over n inputs, height <= depth.

    Built layer by layer; each gate draws never-consumed wires first so
    inputs get used and dead outputs stay rare.  Dense circuits (m close
    to n * depth) may still contain gates nothing consumes: the fan-out
    bound makes that unavoidable, and such gates are computed and paid
    for like any other.
    """
    if n < 2 or m < 1:
        raise ValueError("need n >= 2 and m >= 1")
    if depth < 2 and m > 1:
        raise ValueError("need depth >= 2 for multi-gate circuits")

    # token: [uses_left, consumed_ever]
    tokens: dict[tuple, list] = {("x", i): [K_MAX, False] for i in range(1, n + 1)}
    lines = [f"input {i}" for i in range(1, n + 1)]
    pool: list[tuple] = sorted(tokens)  # tokens from strictly lower layers

    def capacity():
        return sum(tokens[t][0] for t in pool)

    def fresh_inputs():
        return [t for t in pool if t[0] == "x" and not tokens[t][1] and tokens[t][0] > 0]

    def pick():
        cand = fresh_inputs()
        if not cand:
            cand = [t for t in pool if not tokens[t][1] and tokens[t][0] > 0]
        if not cand:
            cand = [t for t in pool if tokens[t][0] > 0]
        tok = cand[rng.randrange(len(cand))]
        tokens[tok][0] -= 1
        tokens[tok][1] = True
        return tok

    remaining = m - 1
    next_gid = 2
    for layer in range(1, depth):
        if not remaining:
            break
        new_tokens = []
        # spread gates over the depth budget so prior outputs get consumed
        target = -(-remaining // (depth - layer))
        layer_budget = min(capacity(), 2 * target)
        while remaining and layer_budget >= 1 and len(new_tokens) < target:
            gid = next_gid
            can_cmul = not fresh_inputs()  # feed every input before narrowing
            kind = "cmul" if can_cmul and rng.random() < cmul_weight else (
                "add" if rng.random() < 0.5 else "mul")
            need = 1 if kind == "cmul" else 2
            if layer_budget < need:
                kind, need = "cmul", 1
            srcs = [pick() for _ in range(need)]
            layer_budget -= need
            tokens[("g", gid)] = [K_MAX, False]
            new_tokens.append(("g", gid))
            if kind == "cmul":
                lines.append(
                    f"gate {gid} cmul {rng.randrange(1, max_const + 1)} {srcs[0][0]}{srcs[0][1]}")
            else:
                lines.append(
                    f"gate {gid} {kind} {srcs[0][0]}{srcs[0][1]} {srcs[1][0]}{srcs[1][1]}")
            next_gid += 1
            remaining -= 1
        pool.extend(new_tokens)
    if remaining:
        raise ValueError(f"cannot fit {m} gates over {n} inputs within depth {depth}")

    srcs = [pick(), pick()]
    lines.append(f"gate 1 add {srcs[0][0]}{srcs[0][1]} {srcs[1][0]}{srcs[1][1]}")
    lines.append("output 1")
    return parse_circuit("\n".join(lines))


def circuit_to_netlist(circuit: Circuit) -> str:
    lines = [f"input {i}" for i in range(1, circuit.n_inputs + 1)]
    for gid in sorted(circuit.gates):
        gate = circuit.gates[gid]
        srcs = " ".join(f"{k}{r}" for k, r in gate.sources)
        if gate.kind == "cmul":
            lines.append(f"gate {gid} cmul {gate.const} {srcs}")
        else:
            lines.append(f"gate {gid} {gate.kind} {srcs}")
    lines.append("output 1")
    return "\n".join(lines) + "\n"
