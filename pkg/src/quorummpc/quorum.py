"""Quorum formation, node assignment, and the output propagation tree.

Formation is an idealized sampler standing in for a full agreement-based
protocol: quorums are drawn at random (members distinct within a quorum,
independent across quorums), the table is rejected if any quorum's bad
membership reaches a third or some player is left out, and every player
is charged a synthetic message cost of ceil(sqrt(n)) * ceil(log2 n) so
end-to-end accounting reflects what real formation would add.

Node j of the graph is served by quorum ((j - 1) mod n) + 1, a pure
function of j and n.  For output propagation the quorums form a binary
tree: quorum 1 is the root, i's parent is floor(i / 2), its children
are 2i and 2i + 1 when in range.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field as dc_field

from .errors import FormationFailure

MEMBERSHIP_CAP_FACTOR = 3  # max memberships allowed = factor * quorum size


def quorum_threshold(size: int) -> int:
    return (size - 1) // 3


def quorum_for_node(node: int, n: int) -> int:
    return ((node - 1) % n) + 1


def default_quorum_size(n: int, multiplier: float = 2.0) -> int:
    return max(4, math.ceil(multiplier * math.log2(max(n, 2))))


@dataclass
class QuorumTable:
    n: int
    size: int
    quorums: list[list[int]]          # quorums[i] lists quorum i+1's members
    bad_set: frozenset = frozenset()
    formation_cost_per_player: int = 0
    memberships: dict[int, list[int]] = dc_field(default_factory=dict)

    def __post_init__(self):
        if not self.memberships:
            for qid, members in enumerate(self.quorums, start=1):
                for player in members:
                    self.memberships.setdefault(player, []).append(qid)

    def quorum(self, qid: int) -> list[int]:
        return self.quorums[qid - 1]

    @property
    def threshold(self) -> int:
        return quorum_threshold(self.size)

    def bad_count(self, qid: int) -> int:
        return sum(1 for p in self.quorum(qid) if p in self.bad_set)

    def all_good(self) -> bool:
        return all(self.bad_count(q) <= self.threshold for q in range(1, self.n + 1))

    def node_quorum(self, node: int) -> int:
        return quorum_for_node(node, self.n)

    def tree_parent(self, qid: int) -> int | None:
        return qid // 2 if qid > 1 else None

    def tree_children(self, qid: int) -> list[int]:
        return [c for c in (2 * qid, 2 * qid + 1) if c <= self.n]

    # -- deterministic text dump -------------------------------------------

    def dump(self) -> str:
        lines = [f"quorums {self.n} size {self.size}"]
        for qid, members in enumerate(self.quorums, start=1):
            lines.append(f"q{qid} " + " ".join(str(p) for p in members))
        return "\n".join(lines) + "\n"

    @classmethod
    def load(cls, text: str, bad_set=frozenset()) -> "QuorumTable":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        head = lines[0].split()
        n, size = int(head[1]), int(head[3])
        quorums = []
        for ln in lines[1:]:
            parts = ln.split()
            quorums.append([int(p) for p in parts[1:]])
        if len(quorums) != n or any(len(q) != size for q in quorums):
            raise FormationFailure("malformed quorum dump")
        return cls(n=n, size=size, quorums=quorums, bad_set=frozenset(bad_set))


def form_quorums(n: int, bad_set, quorum_size: int, rng: random.Random,
                 retries: int = 1) -> QuorumTable:
    """Sample n quorums of the given size; reject bad tables.

    Raises FormationFailure when, after the configured retries, some
    quorum still holds a third or more bad members, a player is in no
    quorum, or a player's membership count blows past the O(log n) cap.
    This models the small failure probability a real formation protocol
    leaves behind; callers may catch and re-run with fresh randomness.
    """
    bad_set = frozenset(bad_set)
    if quorum_size > n:
        raise FormationFailure(f"quorum size {quorum_size} exceeds {n} players")
    threshold = quorum_threshold(quorum_size)
    cap = MEMBERSHIP_CAP_FACTOR * quorum_size
    cost = math.ceil(math.sqrt(n)) * math.ceil(math.log2(max(n, 2)))
    players = list(range(n))
    last_problem = "no attempt"
    for _ in range(retries + 1):
        quorums = [sorted(rng.sample(players, quorum_size)) for _ in range(n)]
        table = QuorumTable(
            n=n, size=quorum_size, quorums=quorums, bad_set=bad_set,
            formation_cost_per_player=cost,
        )
        if not table.all_good():
            last_problem = "a quorum holds a third or more bad players"
            continue
        if len(table.memberships) < n:
            last_problem = "some player landed in no quorum"
            continue
        if max(len(v) for v in table.memberships.values()) > cap:
            last_problem = "membership concentration exceeded the cap"
            continue
        return table
    raise FormationFailure(last_problem)


def assign_nodes(graph, table: QuorumTable) -> dict[int, int]:
    """node -> quorum id; the modular rule keeps loads within ceil((m+n)/n)."""
    return {
        node: table.node_quorum(node)
        for node in range(1, graph.n_nodes + 1)
    }
