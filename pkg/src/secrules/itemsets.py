"""Transaction data model and plaintext Apriori baseline.

Itemsets over a fixed universe of L items are stored as L-bit vectors.
Bit 0 of the vector (the most significant bit of the packed form) stands
for item id 0, so the integer value of the packed vector is also the
lexicographic sort key that every party uses when ordering itemsets.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Iterator

from .errors import ContractError, DimensionError, ParseError, UnsupportedConfiguration

# Hard cap on the item universe; anything larger is outside the desk-scale envelope.
MAX_WIDTH = 4096


class Itemset:
    """Immutable set of item ids drawn from a universe of `width` items."""

    __slots__ = ("width", "mask")

    def __init__(self, width: int, mask: int = 0):
        if width < 0 or width > MAX_WIDTH:
            raise ContractError(f"width must be in [0, {MAX_WIDTH}], got {width}")
        if mask < 0 or mask >> width:
            raise ContractError(f"mask 0x{mask:x} does not fit in {width} bits")
        object.__setattr__(self, "width", width)
        object.__setattr__(self, "mask", mask)

    def __setattr__(self, name, value):
        raise AttributeError("Itemset is immutable")

    @classmethod
    def from_items(cls, width: int, items: Iterable[int]) -> "Itemset":
        mask = 0
        for item in items:
            if not 0 <= item < width:
                raise ContractError(f"item id {item} out of range for width {width}")
            mask |= 1 << (width - 1 - item)
        return cls(width, mask)

    def items(self) -> tuple[int, ...]:
        w = self.width
        return tuple(j for j in range(w) if self.mask >> (w - 1 - j) & 1)

    @property
    def size(self) -> int:
        return self.mask.bit_count()

    def __contains__(self, item: int) -> bool:
        if not 0 <= item < self.width:
            return False
        return bool(self.mask >> (self.width - 1 - item) & 1)

    def _check_width(self, other: "Itemset") -> None:
        if self.width != other.width:
            raise DimensionError(f"width mismatch: {self.width} vs {other.width}")

    def issubset(self, other: "Itemset") -> bool:
        self._check_width(other)
        return self.mask & other.mask == self.mask

    def union(self, other: "Itemset") -> "Itemset":
        self._check_width(other)
        return Itemset(self.width, self.mask | other.mask)

    def intersection(self, other: "Itemset") -> "Itemset":
        self._check_width(other)
        return Itemset(self.width, self.mask & other.mask)

    def difference(self, other: "Itemset") -> "Itemset":
        self._check_width(other)
        return Itemset(self.width, self.mask & ~other.mask)

    def subsets_dropping_one(self) -> Iterator["Itemset"]:
        """All subsets obtained by removing exactly one member."""
        mask = self.mask
        while mask:
            low = mask & -mask
            yield Itemset(self.width, self.mask ^ low)
            mask ^= low

    def to_bytes(self) -> bytes:
        """Packed big-endian bit vector, item 0 first, zero-padded to bytes."""
        nbytes = (self.width + 7) // 8
        return (self.mask << (nbytes * 8 - self.width)).to_bytes(nbytes, "big")

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Itemset)
            and self.width == other.width
            and self.mask == other.mask
        )

    def __hash__(self) -> int:
        return hash((self.width, self.mask))

    def __lt__(self, other: "Itemset") -> bool:
        self._check_width(other)
        return self.mask < other.mask

    def __le__(self, other: "Itemset") -> bool:
        self._check_width(other)
        return self.mask <= other.mask

    def __repr__(self) -> str:
        return f"Itemset({list(self.items())}, width={self.width})"


@dataclass(frozen=True)
class TransactionDb:
    """A list of transactions over a common item universe."""

    width: int
    rows: tuple[Itemset, ...]

    def __post_init__(self):
        for row in self.rows:
            if row.width != self.width:
                raise DimensionError(
                    f"row width {row.width} differs from database width {self.width}"
                )

    @property
    def n(self) -> int:
        return len(self.rows)


@dataclass(frozen=True)
class PartitionedDb:
    """Horizontal partition of one database among M players (1-based)."""

    parts: tuple[TransactionDb, ...]

    def __post_init__(self):
        if not self.parts:
            raise ContractError("a partition needs at least one part")
        width = self.parts[0].width
        for part in self.parts:
            if part.width != width:
                raise DimensionError("all parts must share one item universe")

    @property
    def m(self) -> int:
        return len(self.parts)

    @property
    def width(self) -> int:
        return self.parts[0].width

    @property
    def total_n(self) -> int:
        return sum(part.n for part in self.parts)

    def union_db(self) -> TransactionDb:
        rows: list[Itemset] = []
        for part in self.parts:
            rows.extend(part.rows)
        return TransactionDb(self.width, tuple(rows))


def parse_threshold(text: str | Fraction) -> Fraction:
    """Parse a support/confidence level; must land in (0, 1]."""
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"not a valid ratio: {text!r}") from exc
    if not 0 < value <= 1:
        raise ContractError(f"threshold must be in (0, 1], got {value}")
    return value


def parse_transactions(text: str, width: int | None = None) -> TransactionDb:
    """Parse whitespace-separated item ids, one transaction per line.

    Blank lines are skipped.  When `width` is omitted it is inferred as
    1 + the largest id seen (0 for empty input).
    """
    raw_rows: list[tuple[int, tuple[int, ...]]] = []
    max_id = -1
    for lineno, line in enumerate(text.splitlines(), start=1):
        tokens = line.split()
        if not tokens:
            continue
        ids = []
        for token in tokens:
            try:
                item = int(token)
            except ValueError as exc:
                raise ParseError(f"line {lineno}: non-integer token {token!r}") from exc
            if item < 0:
                raise ParseError(f"line {lineno}: negative item id {item}")
            ids.append(item)
        max_id = max(max_id, *ids)
        raw_rows.append((lineno, tuple(ids)))
    if width is None:
        width = max_id + 1
    if width > MAX_WIDTH:
        raise ContractError(f"item universe {width} exceeds the cap {MAX_WIDTH}")
    rows = []
    for lineno, ids in raw_rows:
        for item in ids:
            if item >= width:
                raise ParseError(
                    f"line {lineno}: item id {item} out of range for {width} items"
                )
        rows.append(Itemset.from_items(width, ids))
    return TransactionDb(width, tuple(rows))


def local_support(db: TransactionDb, itemset: Itemset) -> int:
    """Number of rows of `db` containing `itemset`."""
    if itemset.width != db.width:
        raise DimensionError("itemset width does not match the database")
    mask = itemset.mask
    return sum(1 for row in db.rows if row.mask & mask == mask)


def is_frequent(support: int, total: int, s: Fraction) -> bool:
    """Exact threshold test: support >= s * total without rounding."""
    return support * s.denominator >= s.numerator * total


def singletons(width: int) -> list[Itemset]:
    """All one-item sets, in canonical order."""
    return sorted(Itemset.from_items(width, (j,)) for j in range(width))


def apriori_gen(frequent_prev: Iterable[Itemset]) -> list[Itemset]:
    """Candidate (k)-itemsets from the frequent (k-1)-itemsets.

    Join step unions pairs that differ in a single item; prune step keeps a
    candidate only if every (k-1)-subset is itself in the input set.
    Result is sorted in the canonical itemset order.
    """
    prev = sorted(set(frequent_prev))
    if not prev:
        return []
    k_prev = prev[0].size
    if k_prev < 1:
        raise ContractError("apriori_gen needs itemsets of size >= 1")
    for itemset in prev:
        if itemset.size != k_prev:
            raise ContractError("apriori_gen input must be uniform in size")
    prev_set = set(prev)
    joined: set[Itemset] = set()
    for a, b in combinations(prev, 2):
        union = a.union(b)
        if union.size == k_prev + 1:
            joined.add(union)
    survivors = [
        cand
        for cand in joined
        if all(sub in prev_set for sub in cand.subsets_dropping_one())
    ]
    return sorted(survivors)


def plaintext_apriori(db: TransactionDb, s: Fraction) -> dict[Itemset, int]:
    """Levelwise frequent-itemset mining in the clear; the reference oracle.

    Returns every s-frequent itemset of size >= 1 with its global support.
    """
    if db.n < 1:
        raise ContractError("plaintext_apriori needs a non-empty database")
    result: dict[Itemset, int] = {}
    level = [
        cand
        for cand in singletons(db.width)
        if is_frequent(local_support(db, cand), db.n, s)
    ]
    for cand in level:
        result[cand] = local_support(db, cand)
    while level:
        candidates = apriori_gen(level)
        level = []
        for cand in candidates:
            supp = local_support(db, cand)
            if is_frequent(supp, db.n, s):
                result[cand] = supp
                level.append(cand)
    return result


def deal_rows(n_rows: int, m: int, policy: str, seed: int = 0) -> list[list[int]]:
    """Row indices per player under the named assignment policy."""
    order = list(range(n_rows))
    if policy == "random":
        random.Random(f"partition:{seed}").shuffle(order)
    elif policy != "roundrobin":
        raise ContractError(f"unknown partition policy {policy!r}")
    assignment: list[list[int]] = [[] for _ in range(m)]
    for position, row_index in enumerate(order):
        assignment[position % m].append(row_index)
    return assignment


def partition_db(
    db: TransactionDb, m: int, policy: str = "roundrobin", seed: int = 0
) -> PartitionedDb:
    """Split `db` horizontally among M > 2 players; every part is non-empty."""
    if m <= 2:
        raise UnsupportedConfiguration(
            f"secure mining needs more than two players, got {m}"
        )
    if db.n < m:
        raise ContractError(f"cannot give {m} players at least one of {db.n} rows")
    assignment = deal_rows(db.n, m, policy, seed)
    parts = tuple(
        TransactionDb(db.width, tuple(db.rows[i] for i in indices))
        for indices in assignment
    )
    return PartitionedDb(parts)
