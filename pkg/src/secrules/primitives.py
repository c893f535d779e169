"""Cryptographic building blocks for the union and support protocols.

Everything here is deterministic given an explicit `random.Random`; nothing
reads global randomness.  Operation counting is done through an optional
`ops` hook (see simnet.OpHook) injected by the caller, never through
module-level state.
"""
from __future__ import annotations

import hashlib
import hmac
import math
import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import (
    ContractError,
    DimensionError,
    ImprobableFailure,
    UnsupportedConfiguration,
)
from .itemsets import Itemset

# Safe primes (p = 2q + 1, q prime) generated offline; primality is pinned in
# the test suite.  A shared public modulus is fine because only the per-player
# exponents are secret.
SAFE_PRIMES: dict[int, int] = {
    64: 0xABA5ABD8BECC230B,
    128: 0xBA7C68AB3EAE6A8F5C13962C8874B533,
    256: 0xF2B19788485432E856C0EA5A5F416206E341DD3A152A90D0D39C2273DE2DF0B7,
    512: 0xDFEE7C447AED8C3725B4F9A0D83019D10181A8C8AA0C2FCD998B669851A071BBDC36BDD7B64A5C61CBAFDDC4753102429BA37C896B00DE03B6AFA6AA8B147523,
    1024: 0xF2804719D4659489B879E889951200A5ACC1F6C022D93633218AEEAD32B23700DEF8FAF3EB9441F4275FAE7078222C1DE986E3D4D32FEE0BC384134843E7270FB33D2DFAE38F66B1A2718A45DA13ABD4C9C47B0F5EC36087995754016423D775B2EC966F2C8A9F994E72F4CB71FC94FDC8CC81425DEB4519F909707735B8D15F,
}


def derive_rng(seed: int | str, *labels: object) -> random.Random:
    """A fresh deterministic generator scoped by seed and purpose labels."""
    tag = "|".join(str(part) for part in (seed, *labels))
    return random.Random(tag)


def bits_for_range(q: int) -> int:
    """Bits needed for a residue mod q (ceil(log2 q) for q >= 2)."""
    if q < 2:
        raise ContractError(f"modulus must be >= 2, got {q}")
    return (q - 1).bit_length()


def encode_index(i: int) -> bytes:
    """Canonical 8-byte big-endian index encoding."""
    if i < 0:
        raise ContractError("indices are non-negative")
    return i.to_bytes(8, "big")


def encode_residue(value: int, q: int) -> bytes:
    """Fixed-width big-endian encoding of a residue mod q."""
    if not 0 <= value < q:
        raise ContractError(f"value {value} out of range for modulus {q}")
    return value.to_bytes((bits_for_range(q) + 7) // 8, "big")


@dataclass(frozen=True)
class ShareVector:
    """A vector of residues mod q; one player's additive share of a vector."""

    q: int
    values: tuple[int, ...]

    def __post_init__(self):
        if self.q < 2:
            raise ContractError(f"modulus must be >= 2, got {self.q}")
        for v in self.values:
            if not 0 <= v < self.q:
                raise ContractError(f"share entry {v} out of range mod {self.q}")

    def __len__(self) -> int:
        return len(self.values)

    def wire_bits(self) -> int:
        return len(self.values) * bits_for_range(self.q)


def share_vector(
    values: Sequence[int], m: int, q: int, rng: random.Random, ops=None
) -> list[ShareVector]:
    """Split `values` into m additive share vectors summing to it mod q.

    The first m-1 shares are uniform; the last is the complement.  Counts
    m-1 modular additions per entry (the complement costs m-2 additions
    plus one subtraction) and (m-1)*ceil(log2 q) random bits per entry.
    """
    if m < 2:
        raise ContractError(f"need at least 2 shares, got {m}")
    n = len(values)
    for v in values:
        if not 0 <= v < q:
            raise ContractError(f"value {v} out of range mod {q}")
    columns: list[list[int]] = [[] for _ in range(m)]
    for v in values:
        drawn = [rng.randrange(q) for _ in range(m - 1)]
        columns[m - 1].append((v - sum(drawn)) % q)
        for j, d in enumerate(drawn):
            columns[j].append(d)
    if ops is not None:
        ops.add("mod_adds", (m - 1) * n)
        ops.add("rand_bits", (m - 1) * n * bits_for_range(q))
    return [ShareVector(q, tuple(col)) for col in columns]


def reconstruct(shares: Sequence[ShareVector], ops=None) -> tuple[int, ...]:
    """Sum share vectors entrywise mod q; counts (len-1) additions per entry."""
    if not shares:
        raise ContractError("nothing to reconstruct")
    q = shares[0].q
    n = len(shares[0])
    for sh in shares:
        if sh.q != q:
            raise DimensionError("share vectors disagree on the modulus")
        if len(sh) != n:
            raise DimensionError("share vectors disagree on length")
    if ops is not None and len(shares) > 1:
        ops.add("mod_adds", (len(shares) - 1) * n)
    return tuple(sum(col) % q for col in zip(*(sh.values for sh in shares)))


@dataclass(frozen=True)
class CipherParams:
    """Public parameters of the commutative pow-mod cipher."""

    p: int

    @property
    def bits(self) -> int:
        return self.p.bit_length()


def cipher_params(bits: int = 256) -> CipherParams:
    try:
        return CipherParams(SAFE_PRIMES[bits])
    except KeyError:
        raise UnsupportedConfiguration(
            f"no built-in modulus of {bits} bits; choose from {sorted(SAFE_PRIMES)}"
        ) from None


def draw_cipher_key(params: CipherParams, rng: random.Random, ops=None) -> int:
    """Secret exponent coprime to p-1, so encryption permutes [1, p-1]."""
    while True:
        key = rng.randrange(3, params.p - 1)
        if math.gcd(key, params.p - 1) == 1:
            if ops is not None:
                ops.add("rand_bits", params.bits)
            return key


def _check_key(params: CipherParams, key: int) -> None:
    if math.gcd(key, params.p - 1) != 1:
        raise ContractError(f"key {key} is not invertible mod p-1")


def comm_encrypt(params: CipherParams, key: int, x: int, ops=None) -> int:
    if not 1 <= x <= params.p - 1:
        raise ContractError(f"plaintext {x} outside [1, p-1]")
    _check_key(params, key)
    if ops is not None:
        ops.add("enc_ops", 1)
    return pow(x, key, params.p)


def comm_decrypt(params: CipherParams, key: int, y: int, ops=None) -> int:
    if not 1 <= y <= params.p - 1:
        raise ContractError(f"ciphertext {y} outside [1, p-1]")
    _check_key(params, key)
    if ops is not None:
        ops.add("dec_ops", 1)
    return pow(y, pow(key, -1, params.p - 1), params.p)


@dataclass(frozen=True)
class SignatureParams:
    """Key material for the keyed digest used by the set-inclusion check."""

    key: bytes
    salt: bytes
    out_bits: int = 160

    def __post_init__(self):
        if len(self.salt) < 16:
            raise ContractError("salt must be at least 128 bits")
        if not 128 <= self.out_bits <= 256 or self.out_bits % 8:
            raise ContractError("out_bits must be a multiple of 8 in [128, 256]")


def draw_signature_params(rng: random.Random, out_bits: int = 160) -> SignatureParams:
    return SignatureParams(
        key=rng.getrandbits(256).to_bytes(32, "big"),
        salt=rng.getrandbits(256).to_bytes(32, "big"),
        out_bits=out_bits,
    )


def keyed_signature(sig: SignatureParams, index: int, value: bytes, ops=None) -> bytes:
    """HMAC-SHA256 over (salt, index, value), truncated to out_bits.

    Binding the vector index into the input keeps equal values at different
    indices from producing equal digests.
    """
    if ops is not None:
        ops.add("keyed_hash_ops", 1)
    mac = hmac.new(sig.key, sig.salt + encode_index(index) + value, hashlib.sha256)
    return mac.digest()[: sig.out_bits // 8]


@dataclass
class HashLookupTable:
    """Injective-on-domain hash of itemsets into the cipher domain [1, p-1]."""

    seed: str
    space: int
    forward: dict[Itemset, int] = field(repr=False)
    reverse: dict[int, Itemset] = field(repr=False)
    evals: int = 0

    def digest_of(self, itemset: Itemset) -> int:
        return self.forward[itemset]

    def itemset_for(self, digest: int) -> Itemset | None:
        return self.reverse.get(digest)

    def __len__(self) -> int:
        return len(self.forward)


def _itemset_digest(seed: str, itemset: Itemset, space: int) -> int:
    h = hashlib.sha256()
    h.update(seed.encode())
    h.update(encode_index(itemset.width))
    h.update(itemset.to_bytes())
    return int.from_bytes(h.digest(), "big") % space + 1


def build_lookup_table(
    domain: Iterable[Itemset],
    p: int,
    seed: int | str,
    digest_bits: int | None = None,
    max_retries: int = 32,
    ops=None,
) -> HashLookupTable:
    """Hash every domain member into [1, p-1] with no collisions.

    On a collision the salt is rotated and the whole table is rebuilt, up to
    `max_retries` times.  `digest_bits` shrinks the output space (handy for
    forcing collisions in tests); by default the space is all of [1, p-1].
    """
    members = list(domain)
    space = p - 1
    if digest_bits is not None:
        space = min(space, 1 << digest_bits)
    if space < len(members):
        raise ContractError(
            f"digest space {space} cannot hold {len(members)} distinct values"
        )
    evals = 0
    for attempt in range(max_retries):
        tag = f"{seed}#{attempt}"
        forward: dict[Itemset, int] = {}
        reverse: dict[int, Itemset] = {}
        ok = True
        for itemset in members:
            digest = _itemset_digest(tag, itemset, space)
            evals += 1
            if ops is not None:
                ops.add("hash_ops", 1)
            if digest in reverse:
                ok = False
                break
            forward[itemset] = digest
            reverse[digest] = itemset
        if ok:
            return HashLookupTable(tag, space, forward, reverse, evals)
    raise ImprobableFailure(
        f"no collision-free hash for {len(members)} itemsets in {max_retries} attempts"
    )


def gen_fake_items(count: int, p: int, rng: random.Random, ops=None) -> list[int]:
    """Uniform padding values from the cipher domain [1, p-1]."""
    if count < 0:
        raise ContractError("count must be non-negative")
    if ops is not None and count:
        ops.add("rand_bits", count * p.bit_length())
    return [rng.randrange(1, p) for _ in range(count)]
