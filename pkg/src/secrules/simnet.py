"""Deterministic in-process message fabric with cost accounting.

A round is a global synchronization barrier opened with `begin_round`;
every message logged before the next barrier belongs to it.  Result
announcements (a protocol telling everyone its output) are sent in an
uncounted round under the "output" phase so that measured rounds and bits
line up with the closed-form predictions, which never include them.
"""
from __future__ import annotations

import csv
import math
from collections import deque
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

from .errors import ContractError, DimensionError, RoutingError
from .itemsets import Itemset
from .primitives import bits_for_range

OUTPUT_PHASE = "output"

OP_NAMES = ("enc_ops", "dec_ops", "hash_ops", "keyed_hash_ops", "mod_adds", "rand_bits")


@dataclass(frozen=True)
class DigestVector:
    """Fixed-width keyed digests, one per vector index."""

    digests: tuple[bytes, ...]
    width_bits: int

    def __post_init__(self):
        for d in self.digests:
            if len(d) * 8 != self.width_bits:
                raise DimensionError("digest width disagrees with declared width")

    def wire_bits(self) -> int:
        return len(self.digests) * self.width_bits


@dataclass(frozen=True)
class DigestSetVector:
    """A set of fixed-width digests per vector index."""

    sets: tuple[tuple[bytes, ...], ...]
    width_bits: int

    def __post_init__(self):
        for group in self.sets:
            for d in group:
                if len(d) * 8 != self.width_bits:
                    raise DimensionError("digest width disagrees with declared width")

    def wire_bits(self) -> int:
        return sum(len(group) for group in self.sets) * self.width_bits


@dataclass(frozen=True)
class CipherVector:
    """Residues mod the cipher prime, each carried at full modulus width."""

    values: tuple[int, ...]
    width_bits: int

    def __post_init__(self):
        for v in self.values:
            if v < 0 or v.bit_length() > self.width_bits:
                raise DimensionError(f"value {v} overflows {self.width_bits} bits")

    def wire_bits(self) -> int:
        return len(self.values) * self.width_bits


@dataclass(frozen=True)
class BitVector:
    values: tuple[int, ...]

    def __post_init__(self):
        for v in self.values:
            if v not in (0, 1):
                raise ContractError(f"bit vector entry {v} is not a bit")

    def wire_bits(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class ItemsetVector:
    """Itemsets on the wire as packed bit vectors of the universe width."""

    members: tuple[Itemset, ...]

    def __post_init__(self):
        widths = {m.width for m in self.members}
        if len(widths) > 1:
            raise DimensionError("itemsets in one payload must share a width")

    def wire_bits(self) -> int:
        return sum(m.width for m in self.members)


@dataclass(frozen=True)
class MessageRecord:
    round: int
    protocol: str
    k: int
    phase: str
    sender: int
    receiver: int
    bits: int


@dataclass(frozen=True)
class Delivery:
    sender: int
    phase: str
    payload: object


@dataclass(frozen=True)
class ViewEntry:
    round: int
    phase: str
    kind: str  # "recv" or "derived"
    sender: int | None
    label: str | None
    payload: object


class CostLedger:
    """Aggregated message, round, and operation counts per protocol bucket."""

    def __init__(self):
        self.messages: list[MessageRecord] = []
        self.rounds: dict[tuple[str, int], int] = {}
        self.ops: dict[tuple[str, int, int | None, str], int] = {}
        self.iteration_sizes: dict[tuple[str, int], int] = {}

    def add_round(self, protocol: str, k: int) -> None:
        self.rounds[(protocol, k)] = self.rounds.get((protocol, k), 0) + 1

    def add_op(
        self, protocol: str, k: int, player: int | None, name: str, count: int
    ) -> None:
        key = (protocol, k, player, name)
        self.ops[key] = self.ops.get(key, 0) + count

    def bits(
        self,
        protocol: str | None = None,
        k: int | None = None,
        phase: str | None = None,
        include_output: bool = False,
    ) -> int:
        total = 0
        for msg in self.messages:
            if protocol is not None and msg.protocol != protocol:
                continue
            if k is not None and msg.k != k:
                continue
            if phase is not None and msg.phase != phase:
                continue
            if not include_output and phase is None and msg.phase == OUTPUT_PHASE:
                continue
            total += msg.bits
        return total

    def round_count(self, protocol: str, k: int | None = None) -> int:
        return sum(
            count
            for (proto, kk), count in self.rounds.items()
            if proto == protocol and (k is None or kk == k)
        )

    def op_total(
        self,
        name: str,
        protocol: str | None = None,
        k: int | None = None,
        player: int | None = None,
        any_player: bool = True,
    ) -> int:
        total = 0
        for (proto, kk, who, op), count in self.ops.items():
            if op != name:
                continue
            if protocol is not None and proto != protocol:
                continue
            if k is not None and kk != k:
                continue
            if not any_player and who != player:
                continue
            total += count
        return total

    def ops_by_player(self, name: str, protocol: str | None = None) -> dict[int, int]:
        result: dict[int, int] = {}
        for (proto, _k, who, op), count in self.ops.items():
            if op != name or who is None:
                continue
            if protocol is not None and proto != protocol:
                continue
            result[who] = result.get(who, 0) + count
        return result

    def iterations(self, protocol: str) -> list[int]:
        ks = {k for (proto, k) in self.rounds if proto == protocol}
        ks |= {k for (proto, k) in self.iteration_sizes if proto == protocol}
        ks |= {msg.k for msg in self.messages if msg.protocol == protocol}
        return sorted(ks)

    def buckets(self) -> list[tuple[str, int]]:
        keys = set(self.rounds) | set(self.iteration_sizes)
        keys |= {(msg.protocol, msg.k) for msg in self.messages}
        return sorted(keys)

    def transcript(self) -> list[dict]:
        return [
            {
                "round": msg.round,
                "protocol": msg.protocol,
                "k": msg.k,
                "phase": msg.phase,
                "sender": msg.sender,
                "receiver": msg.receiver,
                "bits": msg.bits,
                "bytes": (msg.bits + 7) // 8,
            }
            for msg in self.messages
        ]


class OpHook:
    """Binds operation counts to one player and the fabric's current bucket."""

    def __init__(self, net: "SimNet", player: int | None):
        self.net = net
        self.player = player

    def add(self, name: str, count: int) -> None:
        protocol, k = self.net.current_context
        self.net.ledger.add_op(protocol, k, self.player, name, count)


class SimNet:
    """Message fabric for M players addressed 1..M."""

    def __init__(self, m: int, record_views: bool = False):
        if m < 1:
            raise ContractError("need at least one player")
        self.m = m
        self.players = tuple(range(1, m + 1))
        self.record_views = record_views
        self.ledger = CostLedger()
        self.current_context: tuple[str, int] = ("setup", 0)
        self._round = 0
        self._inboxes: dict[int, deque[Delivery]] = {p: deque() for p in self.players}
        self._views: dict[int, list[ViewEntry]] = {p: [] for p in self.players}

    @contextmanager
    def context(self, protocol: str, k: int, n_k: int | None = None):
        previous = self.current_context
        self.current_context = (protocol, k)
        if n_k is not None:
            self.ledger.iteration_sizes[(protocol, k)] = n_k
        try:
            yield self
        finally:
            self.current_context = previous

    def begin_round(self, counted: bool = True) -> int:
        self._round += 1
        if counted:
            protocol, k = self.current_context
            self.ledger.add_round(protocol, k)
        return self._round

    def _check_player(self, player: int) -> None:
        if player not in self._inboxes:
            raise RoutingError(f"unknown player {player}")

    def send(self, sender: int, receiver: int, payload, phase: str) -> None:
        self._check_player(sender)
        self._check_player(receiver)
        if sender == receiver:
            raise RoutingError("a player does not message itself")
        if self._round == 0:
            raise ContractError("no round is open; call begin_round first")
        wire_bits = getattr(payload, "wire_bits", None)
        if wire_bits is None:
            raise ContractError(f"payload {type(payload).__name__} has no wire format")
        protocol, k = self.current_context
        self.ledger.messages.append(
            MessageRecord(self._round, protocol, k, phase, sender, receiver, wire_bits())
        )
        self._inboxes[receiver].append(Delivery(sender, phase, payload))
        if self.record_views:
            self._views[receiver].append(
                ViewEntry(self._round, phase, "recv", sender, None, payload)
            )

    def broadcast(self, sender: int, payload, phase: str) -> None:
        for receiver in self.players:
            if receiver != sender:
                self.send(sender, receiver, payload, phase)

    def receive(self, receiver: int) -> Delivery:
        self._check_player(receiver)
        if not self._inboxes[receiver]:
            raise ContractError(f"player {receiver} has no pending message")
        return self._inboxes[receiver].popleft()

    def receive_all(self, receiver: int) -> list[Delivery]:
        self._check_player(receiver)
        out = list(self._inboxes[receiver])
        self._inboxes[receiver].clear()
        return out

    def note(self, player: int, label: str, value, phase: str) -> None:
        """Record a locally derived value into the player's view."""
        self._check_player(player)
        if self.record_views:
            self._views[player].append(
                ViewEntry(self._round, phase, "derived", None, label, value)
            )

    def view(self, player: int) -> tuple[ViewEntry, ...]:
        self._check_player(player)
        return tuple(self._views[player])

    def op_hook(self, player: int | None) -> OpHook:
        if player is not None:
            self._check_player(player)
        return OpHook(self, player)


class BitPrediction(NamedTuple):
    paper: float
    exact: int


def predicted_unifi_rounds() -> int:
    return 3


def predicted_unifi_bits(m: int, n_k: int, h_bits: int = 160) -> BitPrediction:
    """Per-iteration bits of the share-based union.

    `paper` prices a Z_{M+1} residue at log2(M) bits, the published closed
    form; `exact` prices it at ceil(log2(M+1)), which is what the wire
    encoding actually costs, and is an exact prediction of the measurement.
    """
    if m <= 2:
        raise ContractError("the protocol is defined for more than two players")
    paper = ((m * m - 2) * math.log2(m) + 2 * h_bits) * n_k
    exact = ((m * m - 2) * bits_for_range(m + 1) + 2 * h_bits) * n_k
    return BitPrediction(paper, exact)


class KcPrediction(NamedTuple):
    rounds: int
    phase1_bits: int
    phase2_bits_bound: float
    total_bits_estimate: float


def predicted_unifi_kc_costs(m: int, n_k: int, t_bits: int) -> KcPrediction:
    """Round count, exact phase-1 bits, and bounds for the cipher-based union."""
    if m <= 2:
        raise ContractError("the protocol is defined for more than two players")
    return KcPrediction(
        rounds=2 * m,
        phase1_bits=(m - 1) * m * t_bits * n_k,
        phase2_bits_bound=1.5 * m * t_bits * n_k,
        total_bits_estimate=2.0 * m * m * t_bits * n_k,
    )


def improvement_factor(m: int, t_bits: int = 1024, h_bits: int = 160) -> float:
    """Predicted communication ratio of the cipher-based union over the
    share-based one: 2*M^2*t / (M^2*log2(M) + 2*h)."""
    return (2.0 * m * m * t_bits) / (m * m * math.log2(m) + 2 * h_bits)


class RandBitsPrediction(NamedTuple):
    paper: float
    exact: int


def predicted_threshold_rand_bits(m: int, n: int) -> RandBitsPrediction:
    """Random bits each player draws for its share vectors."""
    return RandBitsPrediction(
        paper=(m - 1) * n * math.log2(m),
        exact=(m - 1) * n * bits_for_range(m + 1),
    )


CSV_COLUMNS = [
    "protocol",
    "k",
    "n_k",
    "rounds_measured",
    "rounds_predicted",
    "bits_measured",
    "bits_predicted_paper",
    "bits_predicted_exact",
    "enc_ops",
    "dec_ops",
    "hash_ops",
    "keyed_hash_ops",
    "mod_adds",
    "rand_bits",
]


def cost_report(
    ledger: CostLedger, m: int, t_bits: int | None = None, h_bits: int = 160
) -> list[dict]:
    """One row per (protocol, iteration) with measured and predicted costs."""
    rows = []
    for protocol, k in ledger.buckets():
        n_k = ledger.iteration_sizes.get((protocol, k))
        row: dict[str, object] = {
            "protocol": protocol,
            "k": k,
            "n_k": "" if n_k is None else n_k,
            "rounds_measured": ledger.round_count(protocol, k),
            "rounds_predicted": "",
            "bits_measured": ledger.bits(protocol, k),
            "bits_predicted_paper": "",
            "bits_predicted_exact": "",
        }
        if protocol == "unifi" and n_k is not None:
            prediction = predicted_unifi_bits(m, n_k, h_bits)
            row["rounds_predicted"] = predicted_unifi_rounds()
            row["bits_predicted_paper"] = f"{prediction.paper:.3f}"
            row["bits_predicted_exact"] = prediction.exact
        elif protocol == "unifi-kc" and n_k is not None and t_bits is not None:
            prediction = predicted_unifi_kc_costs(m, n_k, t_bits)
            row["rounds_predicted"] = prediction.rounds
            row["bits_predicted_paper"] = f"{prediction.total_bits_estimate:.3f}"
        for name in OP_NAMES:
            row[name] = ledger.op_total(name, protocol=protocol, k=k)
        rows.append(row)
    return rows


def write_cost_csv(rows: Iterable[dict], path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({col: row.get(col, "") for col in CSV_COLUMNS})
