"""Multiplicative-homomorphic ElGamal over the quadratic residues of a safe prime.

Keys, ciphertexts and plaintexts are plain Python ints. Every randomized
function takes an explicit ``random.Random``-compatible ``rng`` so that runs are
reproducible; pass ``secrets.SystemRandom()`` for anything real.
"""
import json
import random
import secrets
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "PublicKey",
    "SecretKey",
    "Ciphertext",
    "NotGroupElementError",
    "PrimeSearchError",
    "is_probable_prime",
    "random_safe_prime",
    "uniform_zq",
    "keygen",
    "make_keys",
    "encrypt",
    "decrypt",
    "hom_mul",
    "is_group_element",
    "group_elements",
    "key_to_record",
    "key_from_record",
    "ciphertext_to_record",
    "ciphertext_from_record",
]

MR_ROUNDS = 64
PRIME_SEARCH_CAP = 10_000_000

_SMALL_PRIMES = [p for p in range(3, 3000) if all(p % d for d in range(2, int(p**0.5) + 1))]


class NotGroupElementError(ValueError):
    """Value is not a nonzero quadratic residue mod p."""


class PrimeSearchError(RuntimeError):
    pass


@dataclass(frozen=True)
class PublicKey:
    p: int
    q: int
    g: int
    h: int

    def __post_init__(self):
        if self.p != 2 * self.q + 1:
            raise ValueError("p must equal 2q + 1")
        if not (1 < self.g < self.p) or pow(self.g, self.q, self.p) != 1:
            raise ValueError("g does not generate the order-q subgroup")
        if not (1 <= self.h < self.p) or pow(self.h, self.q, self.p) != 1:
            raise ValueError("h is not a group element")

    @property
    def bits(self):
        return self.q.bit_length()

    def validate_primes(self):
        """Full (probabilistic) primality check of p and q; slow for big keys."""
        return is_probable_prime(self.q) and is_probable_prime(self.p)


@dataclass(frozen=True)
class SecretKey:
    s: int


class Ciphertext(NamedTuple):
    c1: int
    c2: int


def _default_rng(rng):
    return secrets.SystemRandom() if rng is None else rng


def is_probable_prime(n, rounds=MR_ROUNDS, rng=None):
    """Miller-Rabin with ``rounds`` random witnesses (error below 4**-rounds)."""
    if n < 2:
        return False
    if n in (2, 3):
        return True
    if n % 2 == 0:
        return False
    for sp in _SMALL_PRIMES:
        if n % sp == 0:
            return n == sp
    if rng is None:
        # witness choice needs no secrecy; seed on n for repeatable answers
        rng = random.Random(n)
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for _ in range(rounds):
        a = rng.randrange(2, n - 1)
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _sieve_ok(n):
    for sp in _SMALL_PRIMES:
        if sp * sp > n:
            return True
        if n % sp == 0:
            return False
    return True


def random_safe_prime(k, rng=None, max_iter=PRIME_SEARCH_CAP):
    """Return ``(p, q)`` with ``q`` a random k-bit prime and ``p = 2q + 1`` prime."""
    if k < 3:
        raise ValueError(f"key length must be at least 3 bits, got {k}")
    rng = _default_rng(rng)
    top = 1 << (k - 1)
    for _ in range(max_iter):
        q = rng.getrandbits(k) | top | 1
        p = 2 * q + 1
        if not (_sieve_ok(q) and _sieve_ok(p)):
            continue
        if is_probable_prime(q, 1, rng) and is_probable_prime(p, 1, rng):
            if is_probable_prime(q, MR_ROUNDS, rng) and is_probable_prime(p, MR_ROUNDS, rng):
                return p, q
    raise PrimeSearchError(f"no {k}-bit safe prime found within {max_iter} candidates")


def uniform_zq(q, rng):
    """Uniform draw from {0, ..., q-1} by rejection on bit-length draws."""
    bits = q.bit_length()
    while True:
        r = rng.getrandbits(bits)
        if r < q:
            return r


def _random_generator(p, rng):
    while True:
        a = rng.randrange(2, p - 1)
        g = a * a % p
        if g != 1:
            return g


def keygen(k, rng=None):
    rng = _default_rng(rng)
    p, q = random_safe_prime(k, rng)
    g = _random_generator(p, rng)
    s = uniform_zq(q, rng)
    return PublicKey(p, q, g, pow(g, s, p)), SecretKey(s)


def make_keys(q, g, s):
    """Deterministic key pair from chosen parameters (tests, worked examples)."""
    p = 2 * q + 1
    if not (0 <= s < q):
        raise ValueError("secret key must lie in [0, q)")
    return PublicKey(p, q, g, pow(g, s, p)), SecretKey(s)


def is_group_element(pk, m):
    if not (0 < m < pk.p):
        raise ValueError(f"{m} is outside (0, p)")
    return pow(m, pk.q, pk.p) == 1


def _require_member(pk, m, what="plaintext"):
    if not (0 < m < pk.p) or pow(m, pk.q, pk.p) != 1:
        raise NotGroupElementError(f"{what} {m} is not a group element")


def encrypt(pk, m, rng=None, r=None):
    _require_member(pk, m)
    if r is None:
        r = uniform_zq(pk.q, _default_rng(rng))
    elif not (0 <= r < pk.q):
        raise ValueError("r must lie in [0, q)")
    return Ciphertext(pow(pk.g, r, pk.p), m * pow(pk.h, r, pk.p) % pk.p)


def decrypt(pk, sk, c):
    c1, c2 = c
    if c1 % pk.p == 0:
        raise ValueError("c1 must be nonzero")
    # c1 has order dividing q, so c1^(-s) = c1^(q - s)
    return pow(c1, (pk.q - sk.s) % pk.q, pk.p) * c2 % pk.p


def hom_mul(pk, c, c_other):
    return Ciphertext(c[0] * c_other[0] % pk.p, c[1] * c_other[1] % pk.p)


def group_elements(pk):
    """All elements of the plaintext group, sorted. Only sensible for small p."""
    p = pk.p
    if p < 2**31:
        i = np.arange(1, pk.q + 1, dtype=np.int64)
        return [int(v) for v in np.unique(i * i % p)]
    return sorted({i * i % p for i in range(1, pk.q + 1)})


def key_to_record(pk, sk=None):
    rec = {"p": str(pk.p), "q": str(pk.q), "g": str(pk.g), "h": str(pk.h)}
    if sk is not None:
        rec["s"] = str(sk.s)
    return rec


def key_from_record(rec):
    if isinstance(rec, str):
        rec = json.loads(rec)
    pk = PublicKey(int(rec["p"]), int(rec["q"]), int(rec["g"]), int(rec["h"]))
    sk = SecretKey(int(rec["s"])) if "s" in rec else None
    return pk, sk


def ciphertext_to_record(c):
    return {"c1": str(c[0]), "c2": str(c[1])}


def ciphertext_from_record(rec):
    if isinstance(rec, str):
        rec = json.loads(rec)
    return Ciphertext(int(rec["c1"]), int(rec["c2"]))
