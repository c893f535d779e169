"""Distributed levelwise mining driver.

Per level k each player generates candidates from the previous global
result, prunes them against its own rows, the players combine the
survivors with the configured union protocol, and the combined candidates
go through the secure frequency check.  Rule extraction runs afterwards on
the full frequent collection with the secure confidence check.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import ContractError, UnsupportedConfiguration
from .itemsets import (
    Itemset,
    PartitionedDb,
    TransactionDb,
    apriori_gen,
    is_frequent,
    local_support,
    parse_threshold,
    singletons,
)
from .primitives import ShareVector, cipher_params, derive_rng
from .protocols import run_unifi, run_unifi_kc
from .simnet import ItemsetVector, SimNet
from .verification import (
    CompareFn,
    RuleRecord,
    candidate_rules,
    ideal_compare,
    secure_confidence_check,
    secure_frequency_check,
)

PROTOCOLS = ("unifi", "unifi-kc", "plaintext")


def local_prune(db: TransactionDb, candidates, s: Fraction) -> list[Itemset]:
    """Candidates that are s-frequent within this player's own rows."""
    return [x for x in candidates if is_frequent(local_support(db, x), db.n, s)]


@dataclass(frozen=True)
class IterationRecord:
    """What one level of the loop saw; kept for diagnostics and tests."""

    k: int
    ground: tuple[Itemset, ...]
    local_candidates: tuple[frozenset[Itemset], ...]
    union: tuple[Itemset, ...]
    frequent: tuple[Itemset, ...]


@dataclass
class MiningResult:
    support: Fraction
    confidence: Fraction
    protocol: str
    frequent: tuple[Itemset, ...]
    supports: dict[Itemset, int] | None
    rules: tuple[RuleRecord, ...]
    iterations: tuple[IterationRecord, ...] = field(repr=False)
    net: SimNet = field(repr=False)

    @property
    def ledger(self):
        return self.net.ledger


def _plaintext_union(net: SimNet, locals_: list[set[Itemset]], k: int, ground) -> list[Itemset]:
    with net.context("plaintext", k, len(ground)):
        net.begin_round()
        for player in net.players:
            net.broadcast(
                player, ItemsetVector(tuple(sorted(locals_[player - 1]))), "union"
            )
        for player in net.players:
            net.receive_all(player)
    return sorted(set().union(*locals_))


def _plaintext_supports(
    net: SimNet, candidates: list[Itemset], parts, k: int
) -> dict[Itemset, int]:
    total = sum(part.n for part in parts)
    with net.context("plaintext", k):
        net.begin_round()
        counts = []
        for player, part in enumerate(parts, start=1):
            vec = tuple(local_support(part, x) for x in candidates)
            counts.append(vec)
            net.broadcast(player, ShareVector(total + 1, vec), "supports")
        for player in net.players:
            net.receive_all(player)
    return {
        x: sum(vec[i] for vec in counts) for i, x in enumerate(candidates)
    }


def mine(
    parts: PartitionedDb,
    support: Fraction | str,
    confidence: Fraction | str,
    protocol: str = "unifi",
    reveal_supports: bool = False,
    seed: int = 0,
    max_consequent: int = 1,
    modulus_bits: int = 256,
    digest_bits: int = 160,
    record_views: bool = False,
    compare: CompareFn = ideal_compare,
) -> MiningResult:
    """Run the full mining pipeline over a horizontal partition.

    Returns the globally s-frequent itemsets, the (s, c)-rules among them,
    and the fabric whose ledger holds the communication and operation
    counts.  Supports appear in the result only for reveal_supports=True
    or the plaintext baseline.
    """
    if protocol not in PROTOCOLS:
        raise UnsupportedConfiguration(f"unknown protocol {protocol!r}")
    s = parse_threshold(support)
    c = parse_threshold(confidence)
    if parts.total_n < 1:
        raise ContractError("cannot mine an empty database")
    m = parts.m
    if protocol != "plaintext" and m <= 2:
        raise UnsupportedConfiguration(
            f"protocol {protocol} needs more than two players, got {m}"
        )
    width = parts.width
    net = SimNet(m, record_views=record_views)
    rng = derive_rng(seed, "mine", protocol)
    cipher = cipher_params(modulus_bits) if protocol == "unifi-kc" else None

    frequent_all: list[Itemset] = []
    supports_all: dict[Itemset, int] = {}
    iterations: list[IterationRecord] = []
    prev_frequent: list[Itemset] = []
    k = 0
    while k < width:
        k += 1
        if k == 1:
            ground = singletons(width)
        else:
            ground = apriori_gen(prev_frequent)
        if not ground:
            break

        locals_: list[set[Itemset]] = []
        for part in parts.parts:
            if k == 1:
                basis = ground
            else:
                local_prev = local_prune(part, prev_frequent, s)
                basis = apriori_gen(local_prev)
            locals_.append(set(local_prune(part, basis, s)))

        if protocol == "unifi":
            union = run_unifi(net, locals_, ground, rng, k=k, out_bits=digest_bits)
        elif protocol == "unifi-kc":
            union = run_unifi_kc(net, locals_, ground, cipher, rng, k=k)
        else:
            union = _plaintext_union(net, locals_, k, ground)

        if protocol == "plaintext":
            counts = _plaintext_supports(net, union, parts.parts, k)
            frequent = [
                x for x in union if is_frequent(counts[x], parts.total_n, s)
            ]
            supports_known: dict[Itemset, int] | None = counts
        else:
            frequent, supports_known = secure_frequency_check(
                net,
                union,
                parts.parts,
                s,
                rng,
                k=k,
                compare=compare,
                reveal=reveal_supports,
            )

        if supports_known is not None:
            for x in frequent:
                supports_all[x] = supports_known[x]
        frequent_all.extend(frequent)
        iterations.append(
            IterationRecord(
                k,
                tuple(ground),
                tuple(frozenset(s_) for s_ in locals_),
                tuple(union),
                tuple(frequent),
            )
        )
        prev_frequent = frequent

    frequent_sorted = sorted(frequent_all)
    rule_space = candidate_rules(frequent_sorted, max_consequent)
    reveal_map = supports_all if (reveal_supports or protocol == "plaintext") else None
    if protocol == "plaintext":
        accepted = []
        for rule in rule_space:
            supp_union = supports_all[rule.union]
            supp_ant = supports_all[rule.antecedent]
            if supp_union * c.denominator >= c.numerator * supp_ant:
                accepted.append(
                    RuleRecord(
                        rule.antecedent,
                        rule.consequent,
                        support=supp_union,
                        confidence=Fraction(supp_union, supp_ant),
                    )
                )
    else:
        accepted = secure_confidence_check(
            net, rule_space, parts.parts, c, rng, compare=compare, supports=reveal_map
        )

    return MiningResult(
        support=s,
        confidence=c,
        protocol=protocol,
        frequent=tuple(frequent_sorted),
        supports=reveal_map,
        rules=tuple(accepted),
        iterations=tuple(iterations),
        net=net,
    )
