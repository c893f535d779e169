"""Multi-party set-union protocols over the simulated fabric.

Player 1 collects masked subtotals, player M withholds its own share, and
player 2 acts as the referee who sees only keyed digests.  All coin flips
come from the caller-supplied generator, which stands in for each player's
honest local randomness; the generator is the only source of nondeterminism
and is always seeded by the harness.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import (
    ContractError,
    ImprobableFailure,
    ProtocolIntegrityError,
    UnsupportedConfiguration,
)
from .itemsets import Itemset
from .primitives import (
    CipherParams,
    ShareVector,
    build_lookup_table,
    comm_decrypt,
    comm_encrypt,
    draw_cipher_key,
    draw_signature_params,
    encode_residue,
    gen_fake_items,
    keyed_signature,
    share_vector,
    reconstruct,
)
from .simnet import (
    OUTPUT_PHASE,
    BitVector,
    CipherVector,
    DigestSetVector,
    DigestVector,
    ItemsetVector,
    SimNet,
)


def _require_players(net: SimNet) -> None:
    if net.m <= 2:
        raise UnsupportedConfiguration(
            f"secure protocols need more than two players, got {net.m}"
        )


def _validate_vectors(
    vectors: Sequence[Sequence[int]], m: int, q: int, binary: bool
) -> int:
    if len(vectors) != m:
        raise ContractError(f"expected {m} input vectors, got {len(vectors)}")
    n = len(vectors[0])
    for vec in vectors:
        if len(vec) != n:
            raise ContractError("input vectors must share one length")
        for v in vec:
            if binary and v not in (0, 1):
                raise ContractError(f"entry {v} is not a bit")
            if not 0 <= v < q:
                raise ContractError(f"entry {v} out of range mod {q}")
    return n


def masked_sum_phase(
    net: SimNet,
    vectors: Sequence[Sequence[int]],
    q: int,
    rng: random.Random,
    phase_prefix: str = "",
    binary: bool = False,
    withhold_last: bool = True,
) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Additively share every player's vector and pool all but one share.

    Round 1: every player splits its vector into M share vectors mod q and
    sends one to each peer.  Round 2: players 2..M-1 send their share sums
    to player 1, who adds its own.  Player M withholds its sum, so the
    protocol ends with the masked pair (s at P1, s_M at PM) whose total mod
    q is the entrywise sum of the inputs.  With withhold_last=False player
    M sends as well and P1 ends up holding the plain sum (s_M is all zero).
    """
    _require_players(net)
    m = net.m
    n = _validate_vectors(vectors, m, q, binary)
    share_phase = f"{phase_prefix}share" if phase_prefix else "share"
    subtotal_phase = f"{phase_prefix}subtotal" if phase_prefix else "subtotal"

    kept: dict[int, ShareVector] = {}
    outgoing: dict[int, list[ShareVector]] = {}
    for player in net.players:
        shares = share_vector(
            vectors[player - 1], m, q, rng, ops=net.op_hook(player)
        )
        kept[player] = shares[player - 1]
        outgoing[player] = shares

    net.begin_round()
    for sender in net.players:
        for receiver in net.players:
            if receiver != sender:
                net.send(sender, receiver, outgoing[sender][receiver - 1], share_phase)

    subtotals: dict[int, tuple[int, ...]] = {}
    for player in net.players:
        received = [delivery.payload for delivery in net.receive_all(player)]
        subtotals[player] = reconstruct(
            [kept[player], *received], ops=net.op_hook(player)
        )
        net.note(player, "share_sum", subtotals[player], share_phase)

    net.begin_round()
    last_sender = m - 1 if withhold_last else m
    for player in range(2, last_sender + 1):
        net.send(player, 1, ShareVector(q, subtotals[player]), subtotal_phase)

    pooled = [ShareVector(q, subtotals[1])]
    pooled.extend(delivery.payload for delivery in net.receive_all(1))
    s_first = reconstruct(pooled, ops=net.op_hook(1))
    s_last = subtotals[m] if withhold_last else (0,) * n
    net.note(1, "pooled_sum", s_first, subtotal_phase)
    if withhold_last:
        net.note(m, "withheld_sum", s_last, subtotal_phase)
    return s_first, s_last


def threshold_share_phase(
    net: SimNet, inputs: Sequence[Sequence[int]], rng: random.Random
) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Sharing rounds of the threshold protocol: binary inputs mod M+1."""
    return masked_sum_phase(net, inputs, net.m + 1, rng, binary=True)


def below_threshold_sets(
    s_last: Sequence[int], t: int, m: int
) -> list[frozenset[int]]:
    """Per index, the pooled-sum residues that put the total below t.

    The true total at index i is (s(i) + s_last(i)) mod (m+1), so it is
    below t exactly when s(i) lands in {(j - s_last(i)) mod (m+1) : j < t}.
    """
    q = m + 1
    if not 1 <= t <= m:
        raise ContractError(f"threshold must be in [1, {m}], got {t}")
    for v in s_last:
        if not 0 <= v < q:
            raise ContractError(f"share {v} out of range mod {q}")
    return [frozenset((j - v) % q for j in range(t)) for v in s_last]


@dataclass(frozen=True)
class SetIncInstance:
    """Inputs of the two-sided inclusion check over Omega = {0..omega_size-1}:
    player 1 holds the values, player M holds one candidate set per index."""

    omega_size: int
    values: tuple[int, ...]
    candidate_sets: tuple[frozenset[int], ...]

    def __post_init__(self):
        if self.omega_size < 1:
            raise ContractError("the ground set must be non-empty")
        if len(self.values) != len(self.candidate_sets):
            raise ContractError("values and candidate sets must align")
        for v in self.values:
            if not 0 <= v < self.omega_size:
                raise ContractError(f"value {v} outside the ground set")
        for group in self.candidate_sets:
            for v in group:
                if not 0 <= v < self.omega_size:
                    raise ContractError(f"set member {v} outside the ground set")

    def __len__(self) -> int:
        return len(self.values)


def set_inclusion(
    net: SimNet,
    instance: SetIncInstance,
    sig=None,
    *,
    rng: random.Random | None = None,
    out_bits: int = 160,
    max_redraws: int = 32,
) -> list[int]:
    """Decide s(i) in Theta(i) for every index without comparing raw values.

    Players 1 and M share signature key material; player M signs every
    ground-set member per index and checks that the signed candidate sets
    stay disjoint from the signed complements (a collision would corrupt
    the answer, so the key is redrawn).  Player 2 then receives player 1's
    signed values and player M's permuted signed sets and announces, per
    index, 0 when the value lies inside its set and 1 otherwise.
    """
    _require_players(net)
    n = len(instance)
    q = instance.omega_size
    last = net.m

    if sig is None:
        if rng is None:
            raise ContractError("need either signature params or a generator")
        sig = draw_signature_params(rng, out_bits)
    # the wire width follows the key material actually in use
    out_bits = sig.out_bits

    table: list[dict[int, bytes]] = []
    for attempt in range(max_redraws):
        hook = net.op_hook(last)
        table = []
        clean = True
        for i in range(n):
            digests = {
                member: keyed_signature(sig, i, encode_residue(member, q), ops=hook)
                for member in range(q)
            }
            inside = {digests[v] for v in instance.candidate_sets[i]}
            outside = {
                digests[v]
                for v in range(q)
                if v not in instance.candidate_sets[i]
            }
            if inside & outside:
                clean = False
                break
            table.append(digests)
        if clean:
            break
        if rng is None:
            raise ImprobableFailure(
                "signed candidate sets collide and no generator to redraw from"
            )
        sig = draw_signature_params(rng, out_bits)
    else:
        raise ImprobableFailure(
            f"signed candidate sets still collide after {max_redraws} redraws"
        )

    p1_hook = net.op_hook(1)
    signed_values = tuple(
        keyed_signature(sig, i, encode_residue(v, q), ops=p1_hook)
        for i, v in enumerate(instance.values)
    )

    signed_sets = []
    for i in range(n):
        group = [table[i][member] for member in sorted(instance.candidate_sets[i])]
        if rng is not None:
            rng.shuffle(group)
        signed_sets.append(tuple(group))

    net.begin_round()
    net.send(1, 2, DigestVector(signed_values, out_bits), "setinc")
    net.send(last, 2, DigestSetVector(tuple(signed_sets), out_bits), "setinc")

    first = net.receive(2).payload
    second = net.receive(2).payload
    if isinstance(first, DigestVector):
        values_seen, sets_seen = first, second
    else:
        values_seen, sets_seen = second, first
    bits = [
        0 if values_seen.digests[i] in set(sets_seen.sets[i]) else 1 for i in range(n)
    ]
    net.note(2, "inclusion_bits", tuple(bits), "setinc")

    net.begin_round(counted=False)
    net.broadcast(2, BitVector(tuple(bits)), OUTPUT_PHASE)
    for player in net.players:
        if player != 2:
            net.receive_all(player)
    return bits


def run_threshold(
    net: SimNet,
    inputs: Sequence[Sequence[int]],
    t: int,
    rng: random.Random,
    out_bits: int = 160,
) -> list[int]:
    """Entrywise test sum(inputs) >= t on binary vectors, revealing only
    the verdict bits."""
    _require_players(net)
    if not 1 <= t <= net.m:
        raise ContractError(f"threshold must be in [1, {net.m}], got {t}")
    s_first, s_last = threshold_share_phase(net, inputs, rng)
    theta = below_threshold_sets(s_last, t, net.m)
    instance = SetIncInstance(net.m + 1, s_first, tuple(theta))
    return set_inclusion(net, instance, rng=rng, out_bits=out_bits)


def _validate_ground(
    local_sets: Sequence[Iterable[Itemset]], ground: Sequence[Itemset], m: int
) -> list[set[Itemset]]:
    if len(local_sets) != m:
        raise ContractError(f"expected {m} local sets, got {len(local_sets)}")
    for i in range(1, len(ground)):
        if not ground[i - 1] < ground[i]:
            raise ContractError("ground list must be strictly increasing")
    ground_set = set(ground)
    cleaned = []
    for sets in local_sets:
        members = set(sets)
        if not members <= ground_set:
            raise ContractError("a local set strays outside the ground list")
        cleaned.append(members)
    return cleaned


def run_unifi(
    net: SimNet,
    local_sets: Sequence[Iterable[Itemset]],
    ground: Sequence[Itemset],
    rng: random.Random,
    k: int = 1,
    t: int = 1,
    out_bits: int = 160,
) -> list[Itemset]:
    """Share-based secure combination of itemset collections.

    Encodes each collection as a bit vector over the agreed ground list and
    runs the threshold protocol; t=1 computes the union and t=M the
    intersection.  Returns the members in canonical order.
    """
    _require_players(net)
    members = _validate_ground(local_sets, ground, net.m)
    with net.context("unifi", k, len(ground)):
        encodings = [
            [1 if item in local else 0 for item in ground] for local in members
        ]
        bits = run_threshold(net, encodings, t, rng, out_bits)
    return [item for item, bit in zip(ground, bits) if bit]


def run_unifi_kc(
    net: SimNet,
    local_sets: Sequence[Iterable[Itemset]],
    ground: Sequence[Itemset],
    cipher: CipherParams,
    rng: random.Random,
    k: int = 1,
) -> list[Itemset]:
    """Commutative-encryption union with padding to hide collection sizes.

    Every player hashes its members into the cipher domain, encrypts under
    its own key, pads with indistinguishable fakes to the ground-list size,
    and the lists make M-1 cyclic hops so each ends up encrypted under all
    keys.  Merging and duplicate removal happen at players 1 and 2, the
    stack is then peeled key by key, and player M maps the survivors back
    through the shared lookup table, discarding fakes.
    """
    _require_players(net)
    m = net.m
    members = _validate_ground(local_sets, ground, m)
    n_k = len(ground)
    with net.context("unifi-kc", k, n_k):
        table = build_lookup_table(ground, cipher.p, seed=rng.getrandbits(64))
        for player in net.players:
            net.op_hook(player).add("hash_ops", table.evals)
        keys = {
            player: draw_cipher_key(cipher, rng, ops=net.op_hook(player))
            for player in net.players
        }

        lists: dict[int, list[int]] = {}
        for player in net.players:
            hook = net.op_hook(player)
            own = [
                comm_encrypt(cipher, keys[player], table.digest_of(item), ops=hook)
                for item in sorted(members[player - 1])
            ]
            own.extend(gen_fake_items(n_k - len(own), cipher.p, rng, ops=hook))
            lists[player] = own

        for _cycle in range(m - 1):
            net.begin_round()
            for sender in net.players:
                shuffled = list(lists[sender])
                rng.shuffle(shuffled)
                successor = sender % m + 1
                net.send(
                    sender,
                    successor,
                    CipherVector(tuple(shuffled), cipher.bits),
                    "phase1",
                )
            for player in net.players:
                incoming = net.receive(player).payload
                hook = net.op_hook(player)
                lists[player] = [
                    comm_encrypt(cipher, keys[player], value, ops=hook)
                    for value in incoming.values
                ]

        net.begin_round()
        pools: dict[int, list[int]] = {1: list(lists[1]), 2: list(lists[2])}
        for sender in net.players:
            if sender in (1, 2):
                continue
            collector = 1 if sender % 2 else 2
            net.send(
                sender, collector, CipherVector(tuple(lists[sender]), cipher.bits), "phase2"
            )
        for collector in (1, 2):
            for delivery in net.receive_all(collector):
                pools[collector].extend(delivery.payload.values)
            pools[collector] = sorted(set(pools[collector]))

        net.begin_round()
        shuffled = list(pools[2])
        rng.shuffle(shuffled)
        net.send(2, 1, CipherVector(tuple(shuffled), cipher.bits), "phase2")
        merged = sorted(set(pools[1]) | set(net.receive(1).payload.values))

        current = merged
        for player in range(1, m):
            hook = net.op_hook(player)
            current = [
                comm_decrypt(cipher, keys[player], value, ops=hook)
                for value in current
            ]
            rng.shuffle(current)
            net.begin_round()
            net.send(player, player + 1, CipherVector(tuple(current), cipher.bits), "phase3")
            current = list(net.receive(player + 1).payload.values)

        last_hook = net.op_hook(m)
        plain = [comm_decrypt(cipher, keys[m], value, ops=last_hook) for value in current]
        union = sorted(
            item
            for item in (table.itemset_for(digest) for digest in plain)
            if item is not None
        )

        expected = sorted(set().union(*members)) if members else []
        if union != expected:
            raise ProtocolIntegrityError(
                "decrypted union disagrees with the contributed sets"
            )

        net.begin_round(counted=False)
        net.broadcast(m, ItemsetVector(tuple(union)), OUTPUT_PHASE)
        for player in net.players:
            if player != m:
                net.receive_all(player)
    return union
