"""Secure frequency and confidence verification over shared scaled counts.

Both checks reduce to the same question: is a sum of per-player integers,
each of magnitude at most den*N, non-negative?  Working mod the odd modulus
q = 2*den*N + 1 makes the sign test "masked value below q/2", evaluated by
an idealized two-party comparison between players 1 and M that releases
only the verdict bit.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Callable, Iterable, Sequence

from .errors import ContractError
from .itemsets import Itemset, TransactionDb, local_support
from .primitives import ShareVector
from .protocols import masked_sum_phase
from .simnet import OUTPUT_PHASE, BitVector, SimNet

CompareFn = Callable[[int, int, int], int]


def frequency_modulus(den: int, total: int) -> int:
    """Odd modulus wide enough for any scaled difference: 2*den*N + 1."""
    if den < 1 or total < 1:
        raise ContractError("denominator and row count must be positive")
    return 2 * den * total + 1


def ideal_compare(s_first: int, s_last: int, q: int) -> int:
    """Idealized two-party functionality: 1 iff (s_first + s_last) mod q < q/2.

    Stands in for a generic secure comparison circuit; both inputs stay with
    their owners and only the verdict bit comes out.
    """
    if q < 2 or q % 2 == 0:
        raise ContractError(f"modulus must be odd and >= 3, got {q}")
    if not 0 <= s_first < q or not 0 <= s_last < q:
        raise ContractError("compare inputs must be residues mod q")
    return 1 if 2 * ((s_first + s_last) % q) < q else 0


def secure_sum_withheld(
    net: SimNet,
    vectors: Sequence[Sequence[int]],
    q: int,
    rng: random.Random,
) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Share-based summation leaving the total split between P1 and PM."""
    return masked_sum_phase(net, vectors, q, rng)


def _decode_signed(value: int, q: int) -> int:
    return value if 2 * value < q else value - q


def _scaled_frequency_vectors(
    candidates: Sequence[Itemset],
    parts: Sequence[TransactionDb],
    s: Fraction,
    q: int,
) -> list[list[int]]:
    """Per player, (den*supp_m(x) - num*N_m) mod q for every candidate x."""
    vectors = []
    for part in parts:
        vectors.append(
            [
                (s.denominator * local_support(part, x) - s.numerator * part.n) % q
                for x in candidates
            ]
        )
    return vectors


def secure_frequency_check(
    net: SimNet,
    candidates: Sequence[Itemset],
    parts: Sequence[TransactionDb],
    s: Fraction,
    rng: random.Random,
    k: int,
    compare: CompareFn = ideal_compare,
    reveal: bool = False,
) -> tuple[list[Itemset], dict[Itemset, int] | None]:
    """Filter candidates down to the globally s-frequent ones.

    Default path: the scaled differences are summed with player M's share
    withheld and the idealized comparison releases one verdict bit per
    candidate.  Reveal path (debug): all shares are pooled at player 1, who
    announces the differences, which pins every candidate's exact global
    support.  Returns (frequent candidates, supports or None).
    """
    total = sum(part.n for part in parts)
    if total < 1:
        raise ContractError("the combined database is empty")
    q = frequency_modulus(s.denominator, total)
    vectors = _scaled_frequency_vectors(candidates, parts, s, q)
    with net.context("secure-frequency", k, len(candidates)):
        if reveal:
            totals, _ = masked_sum_phase(net, vectors, q, rng, withhold_last=False)
            net.begin_round(counted=False)
            net.broadcast(1, ShareVector(q, totals), OUTPUT_PHASE)
            for player in net.players:
                if player != 1:
                    net.receive_all(player)
            deltas = [_decode_signed(v, q) for v in totals]
            supports = {
                x: (delta + s.numerator * total) // s.denominator
                for x, delta in zip(candidates, deltas)
            }
            frequent = [x for x, delta in zip(candidates, deltas) if delta >= 0]
            return frequent, supports

        s_first, s_last = masked_sum_phase(net, vectors, q, rng)
        bits = [compare(a, b, q) for a, b in zip(s_first, s_last)]
        net.note(1, "frequency_bits", tuple(bits), "compare")
        net.note(net.m, "frequency_bits", tuple(bits), "compare")
        net.begin_round(counted=False)
        net.broadcast(1, BitVector(tuple(bits)), OUTPUT_PHASE)
        for player in net.players:
            if player != 1:
                net.receive_all(player)
        frequent = [x for x, bit in zip(candidates, bits) if bit]
        return frequent, None


@dataclass(frozen=True)
class CandidateRule:
    """An implication between disjoint non-empty itemsets."""

    antecedent: Itemset
    consequent: Itemset

    def __post_init__(self):
        if self.antecedent.size == 0 or self.consequent.size == 0:
            raise ContractError("rule sides must be non-empty")
        if self.antecedent.intersection(self.consequent).size:
            raise ContractError("rule sides must be disjoint")

    @property
    def union(self) -> Itemset:
        return self.antecedent.union(self.consequent)


@dataclass(frozen=True)
class RuleRecord:
    """An accepted rule; support and confidence are filled only when the
    run was configured to reveal supports."""

    antecedent: Itemset
    consequent: Itemset
    support: int | None = None
    confidence: Fraction | None = None


def candidate_rules(
    frequent: Iterable[Itemset], max_consequent: int = 1
) -> list[CandidateRule]:
    """Every rule X => Y with X, Y disjoint and non-empty, X u Y frequent,
    and |Y| <= max_consequent, in deterministic order.  A budget of zero
    leaves nothing to put on the right-hand side."""
    if max_consequent < 0:
        raise ContractError(f"max_consequent must be non-negative, got {max_consequent}")
    rules = []
    for whole in frequent:
        items = whole.items()
        if len(items) < 2:
            continue
        for size in range(1, min(max_consequent, len(items) - 1) + 1):
            for chosen in combinations(items, size):
                consequent = Itemset.from_items(whole.width, chosen)
                rules.append(CandidateRule(whole.difference(consequent), consequent))
    return sorted(rules, key=lambda r: (r.antecedent, r.consequent))


def secure_confidence_check(
    net: SimNet,
    rules: Sequence[CandidateRule],
    parts: Sequence[TransactionDb],
    c: Fraction,
    rng: random.Random,
    compare: CompareFn = ideal_compare,
    supports: dict[Itemset, int] | None = None,
) -> list[RuleRecord]:
    """Keep the rules whose global confidence reaches c.

    Each player contributes (den*supp_m(X u Y) - num*supp_m(X)) per rule;
    the sum is non-negative exactly when supp(X u Y) / supp(X) >= c, and its
    sign is tested the same masked way as the frequency check.  When a
    support map is supplied (reveal mode) the accepted records also carry
    exact support and confidence.
    """
    total = sum(part.n for part in parts)
    if total < 1:
        raise ContractError("the combined database is empty")
    q = frequency_modulus(c.denominator, total)
    vectors = []
    for part in parts:
        vectors.append(
            [
                (
                    c.denominator * local_support(part, rule.union)
                    - c.numerator * local_support(part, rule.antecedent)
                )
                % q
                for rule in rules
            ]
        )
    with net.context("secure-confidence", 0, len(rules)):
        s_first, s_last = masked_sum_phase(net, vectors, q, rng)
        bits = [compare(a, b, q) for a, b in zip(s_first, s_last)]
        net.note(1, "confidence_bits", tuple(bits), "compare")
        net.note(net.m, "confidence_bits", tuple(bits), "compare")
        net.begin_round(counted=False)
        net.broadcast(1, BitVector(tuple(bits)), OUTPUT_PHASE)
        for player in net.players:
            if player != 1:
                net.receive_all(player)
    accepted = []
    for rule, bit in zip(rules, bits):
        if not bit:
            continue
        if supports is None:
            accepted.append(RuleRecord(rule.antecedent, rule.consequent))
        else:
            supp_union = supports[rule.union]
            supp_ant = supports[rule.antecedent]
            accepted.append(
                RuleRecord(
                    rule.antecedent,
                    rule.consequent,
                    support=supp_union,
                    confidence=Fraction(supp_union, supp_ant),
                )
            )
    return accepted
