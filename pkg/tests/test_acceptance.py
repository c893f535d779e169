"""Acceptance gate: every shipped claim, one test per criterion.

Each test prints one `criterion N: PASS/FAIL` line (visible with -s or -rA;
the pytest -v status line mirrors it) and asserts the stated tolerance.
"""

import random
import time
from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from scipy.stats import chisquare

from secrules import (
    Itemset,
    SimNet,
    TransactionDb,
    bits_for_range,
    candidate_rules,
    derive_rng,
    improvement_factor,
    mine,
    partition_db,
    plaintext_apriori,
    predicted_unifi_bits,
    run_threshold,
)
from secrules.simnet import DigestSetVector, DigestVector


def _verdict(number: int, ok: bool, detail: str) -> None:
    print(f"criterion {number}: {'PASS' if ok else 'FAIL'} ({detail})")


def _random_db(rng, width, n_rows, density):
    rows = tuple(
        Itemset.from_items(width, [j for j in range(width) if rng.random() < density])
        for _ in range(n_rows)
    )
    return TransactionDb(width, rows)


def _oracle_rules(oracle, c, max_consequent=1):
    out = {}
    for rule in candidate_rules(sorted(oracle), max_consequent):
        supp_union = oracle[rule.union]
        supp_ant = oracle[rule.antecedent]
        if supp_union * c.denominator >= c.numerator * supp_ant:
            out[(rule.antecedent, rule.consequent)] = (
                supp_union,
                Fraction(supp_union, supp_ant),
            )
    return out


SUPPORT_MENU = [Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)]
CONFIDENCE_MENU = [Fraction(1, 2), Fraction(2, 3)]


def test_criterion_1_oracle_equivalence():
    started = time.monotonic()
    checked_default = 0
    for i in range(100):
        rng = random.Random(f"acceptance-1:{i}")
        m = rng.choice([3, 4, 5])
        width = rng.randrange(2, 11)
        n_rows = rng.randrange(2 * m, 65)
        db = _random_db(rng, width, n_rows, rng.uniform(0.25, 0.6))
        parts = partition_db(db, m, policy="random", seed=i)
        s = rng.choice(SUPPORT_MENU)
        c = rng.choice(CONFIDENCE_MENU)

        oracle = plaintext_apriori(db, s)
        want_rules = _oracle_rules(oracle, c)

        for protocol in ("unifi", "unifi-kc"):
            res = mine(
                parts, s, c, protocol=protocol, reveal_supports=True,
                seed=i, modulus_bits=256,
            )
            assert set(res.frequent) == set(oracle), (i, protocol)
            assert res.supports == oracle, (i, protocol)
            got_rules = {
                (r.antecedent, r.consequent): (r.support, r.confidence)
                for r in res.rules
            }
            assert got_rules == want_rules, (i, protocol)

        if i % 10 == 0:
            # verdict-only mode must agree on the sets without the counts
            for protocol in ("unifi", "unifi-kc"):
                res = mine(parts, s, c, protocol=protocol, seed=i, modulus_bits=256)
                assert set(res.frequent) == set(oracle), (i, protocol)
                assert res.supports is None
                assert {(r.antecedent, r.consequent) for r in res.rules} == set(
                    want_rules
                ), (i, protocol)
            checked_default += 1

    elapsed = time.monotonic() - started
    ok = elapsed < 120
    _verdict(
        1,
        ok,
        f"100 instances x 2 protocols match the baseline exactly, "
        f"{checked_default} verdict-only spot checks, {elapsed:.1f}s",
    )
    assert ok, f"runtime budget exceeded: {elapsed:.1f}s"


def test_criterion_2_exhaustive_threshold():
    started = time.monotonic()
    m = 3
    cases = 0
    for n in (1, 2, 3):
        for assignment in product((0, 1), repeat=m * n):
            inputs = [assignment[p * n : (p + 1) * n] for p in range(m)]
            sums = [sum(col) for col in zip(*inputs)]
            for t in (1, 2, 3):
                want = [1 if v >= t else 0 for v in sums]
                net = SimNet(m)
                got = run_threshold(
                    net, inputs, t, derive_rng(cases, "acceptance-2")
                )
                assert got == want, (n, t, inputs)
                cases += 1
    elapsed = time.monotonic() - started
    ok = cases == (8 + 64 + 512) * 3 and elapsed < 10
    _verdict(2, ok, f"all {cases} input combinations exact, {elapsed:.1f}s")
    assert ok


@pytest.fixture(scope="module")
def measured_runs():
    """One seeded mining run per protocol for M in {3, 4, 8}."""
    runs = {}
    for m in (3, 4, 8):
        rng = random.Random(f"acceptance-cost:{m}")
        db = _random_db(rng, 6, 4 * m, 0.55)
        parts = partition_db(db, m, policy="roundrobin")
        for protocol in ("unifi", "unifi-kc"):
            runs[(m, protocol)] = mine(
                parts, Fraction(1, 4), Fraction(1, 2),
                protocol=protocol, seed=m, modulus_bits=256,
            )
    return runs


def test_criterion_3_round_counts(measured_runs):
    details = []
    for m in (3, 4, 8):
        ledger = measured_runs[(m, "unifi")].ledger
        ks = ledger.iterations("unifi")
        assert ks, m
        for k in ks:
            assert ledger.round_count("unifi", k) == 3, (m, k)
        ledger = measured_runs[(m, "unifi-kc")].ledger
        ks = ledger.iterations("unifi-kc")
        assert ks, m
        for k in ks:
            assert ledger.round_count("unifi-kc", k) == 2 * m, (m, k)
        details.append(f"M={m}: 3 and {2 * m}")
    _verdict(3, True, "; ".join(details))


def test_criterion_4_bit_accounting(measured_runs):
    t_bits = 256
    for m in (3, 4, 8):
        ledger = measured_runs[(m, "unifi")].ledger
        for k in ledger.iterations("unifi"):
            n_k = ledger.iteration_sizes[("unifi", k)]
            want = ((m * m - 2) * bits_for_range(m + 1) + 2 * 160) * n_k
            assert ledger.bits("unifi", k) == want == predicted_unifi_bits(m, n_k).exact
        ledger = measured_runs[(m, "unifi-kc")].ledger
        for k in ledger.iterations("unifi-kc"):
            n_k = ledger.iteration_sizes[("unifi-kc", k)]
            assert (
                ledger.bits("unifi-kc", k, phase="phase1")
                == (m - 1) * m * t_bits * n_k
            )
    ratios = [
        predicted_unifi_bits(m, 1).exact / predicted_unifi_bits(m, 1).paper
        for m in range(3, 17)
    ]
    ok = all(1.0 <= r <= 1.25 for r in ratios)
    _verdict(
        4,
        ok,
        f"measured bits equal the closed forms; stated-form ratio in "
        f"[{min(ratios):.3f}, {max(ratios):.3f}]",
    )
    assert ok


def test_criterion_5_improvement_factors():
    got4 = improvement_factor(4, t_bits=1024, h_bits=160)
    got8 = improvement_factor(8, t_bits=1024, h_bits=160)
    ok = abs(got4 - 93) / 93 <= 0.02 and abs(got8 - 256) / 256 <= 0.02
    _verdict(5, ok, f"M=4: {got4:.2f} vs 93; M=8: {got8:.2f} vs 256")
    assert ok


def test_criterion_6_operation_counts(measured_runs):
    details = []
    for m in (3, 4, 8):
        ledger = measured_runs[(m, "unifi-kc")].ledger
        n = sum(
            ledger.iteration_sizes[("unifi-kc", k)]
            for k in ledger.iterations("unifi-kc")
        )
        enc = ledger.ops_by_player("enc_ops", "unifi-kc")
        dec = ledger.ops_by_player("dec_ops", "unifi-kc")
        for player in range(1, m + 1):
            total = enc.get(player, 0) + dec.get(player, 0)
            assert m * n <= total <= 2 * m * n, (m, player, total, n)

        ledger = measured_runs[(m, "unifi")].ledger
        n = sum(
            ledger.iteration_sizes[("unifi", k)] for k in ledger.iterations("unifi")
        )
        adds = ledger.ops_by_player("mod_adds", "unifi")
        rand = ledger.ops_by_player("rand_bits", "unifi")
        width = bits_for_range(m + 1)
        for player in range(1, m + 1):
            assert (2 * m - 2) * n <= adds[player] <= (3 * m - 4) * n, (m, player)
            assert rand[player] == (m - 1) * n * width, (m, player)
        details.append(f"M={m} ok")
    _verdict(
        6,
        True,
        "enc+dec within [Mn, 2Mn], modular adds within [(2M-2)n, (3M-4)n], "
        "share randomness exact; " + ", ".join(details),
    )


def test_criterion_7_privacy_properties():
    # (a) the first-and-last coalition recovers the entrywise sum exactly
    for seed in range(20):
        rng = random.Random(f"acceptance-7a:{seed}")
        m = rng.choice([3, 4, 5])
        n = rng.randrange(1, 6)
        inputs = [tuple(rng.randrange(2) for _ in range(n)) for _ in range(m)]
        want = tuple(sum(col) for col in zip(*inputs))
        net = SimNet(m, record_views=True)
        run_threshold(net, inputs, 1, derive_rng(seed, "acc-7a"))
        pooled = next(e.payload for e in net.view(1) if e.label == "pooled_sum")
        withheld = next(e.payload for e in net.view(m) if e.label == "withheld_sum")
        recovered = tuple((a + b) % (m + 1) for a, b in zip(pooled, withheld))
        assert recovered == want, seed

    # (b) a player outside {P1, P2, PM} sees only uniform-looking shares
    m, q, runs = 4, 5, 10_000
    inputs = [(1,), (0,), (1,), (1,)]
    counts = np.zeros(q, dtype=int)
    digests_only = True
    for seed in range(runs):
        net = SimNet(m, record_views=True)
        run_threshold(net, inputs, 2, derive_rng(seed, "acc-7b"))
        for entry in net.view(3):
            if entry.kind == "recv" and entry.phase == "share":
                counts[entry.payload.values[0]] += 1
        if seed < 50:
            # (c) the evaluator's inclusion-phase view is digests alone
            setinc_entries = [
                e for e in net.view(2) if e.kind == "recv" and e.phase == "setinc"
            ]
            assert len(setinc_entries) == 2
            for entry in setinc_entries:
                if isinstance(entry.payload, DigestVector):
                    widths = {len(d) for d in entry.payload.digests}
                elif isinstance(entry.payload, DigestSetVector):
                    widths = {
                        len(d) for group in entry.payload.sets for d in group
                    }
                else:
                    digests_only = False
                    widths = set()
                assert widths <= {20}, entry

    assert counts.sum() == (m - 1) * runs
    pvalue = chisquare(counts).pvalue
    ok = pvalue > 0.01 and digests_only
    _verdict(
        7,
        ok,
        f"coalition sums exact over 20 runs; share uniformity p={pvalue:.3f} "
        f"over {runs} runs; evaluator view is fixed-width digests only",
    )
    assert ok


def test_criterion_8_desk_scale_note():
    # Large-scale wall-clock timings are a documented non-goal; the
    # operation-count bounds of criterion 6 stand in for them at desk
    # scale, and nothing here measures microseconds.
    _verdict(
        8,
        True,
        "timing reproduction out of scope by design; op-count bounds "
        "substitute at desk scale",
    )
