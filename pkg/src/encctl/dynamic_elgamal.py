"""Dynamic-key ElGamal: per-epoch key and ciphertext transition maps.

Each epoch draws one secret offset ``s'`` shared by the key update and every
tracked ciphertext, plus a fresh ``r'`` per ciphertext. Ciphertexts are moved
with the public value *before* the key update, so that they decrypt under the
updated secret key.
"""
from dataclasses import dataclass, field, replace

from .elgamal import Ciphertext, PublicKey, SecretKey, uniform_zq

__all__ = [
    "DynState",
    "EpochRandomness",
    "key_transition",
    "cipher_transition",
    "draw_epoch_randomness",
    "apply_epoch",
    "epoch_step",
    "chain_record",
]


@dataclass(frozen=True)
class DynState:
    pk: PublicKey
    sk: SecretKey
    epoch: int = 0

    def __post_init__(self):
        if pow(self.pk.g, self.sk.s, self.pk.p) != self.pk.h:
            raise ValueError("public value h does not match g^s")


@dataclass(frozen=True)
class EpochRandomness:
    s_prime: int
    r_primes: tuple = field(default_factory=tuple)


def _check_zq(name, v, q):
    if not (0 <= v < q):
        raise ValueError(f"{name} = {v} outside [0, q)")


def key_transition(state, s_prime):
    pk = state.pk
    _check_zq("s'", s_prime, pk.q)
    h = pk.h * pow(pk.g, s_prime, pk.p) % pk.p
    s = (state.sk.s + s_prime) % pk.q
    return DynState(replace(pk, h=h), SecretKey(s), state.epoch + 1)


def cipher_transition(pk_before, c, r_prime, s_prime):
    """Re-randomize ``c`` for the next epoch.

    ``pk_before.h`` must be the public value of the epoch ``c`` was valid in.
    """
    p, q, g, h = pk_before.p, pk_before.q, pk_before.g, pk_before.h
    _check_zq("r'", r_prime, q)
    _check_zq("s'", s_prime, q)
    c1 = c[0] * pow(g, r_prime, p) % p
    c2 = pow(c1, s_prime, p) * c[1] * pow(h, r_prime, p) % p
    return Ciphertext(c1, c2)


def _count(cts):
    if isinstance(cts, Ciphertext):
        return 1
    return sum(_count(c) for c in cts)


def draw_epoch_randomness(q, count, rng):
    s_prime = uniform_zq(q, rng)
    return EpochRandomness(s_prime, tuple(uniform_zq(q, rng) for _ in range(count)))


def apply_epoch(state, ciphertexts, randomness):
    """Transition ``ciphertexts`` (a Ciphertext or nested lists of them) and the key."""
    r_iter = iter(randomness.r_primes)
    pk_before = state.pk

    def move(item):
        if isinstance(item, Ciphertext):
            return cipher_transition(pk_before, item, next(r_iter), randomness.s_prime)
        return [move(c) for c in item]

    moved = move(ciphertexts)
    if next(r_iter, None) is not None:
        raise ValueError("more r' values than ciphertexts")
    return key_transition(state, randomness.s_prime), moved


def epoch_step(state, ciphertexts, rng):
    randomness = draw_epoch_randomness(state.pk.q, _count(ciphertexts), rng)
    return apply_epoch(state, ciphertexts, randomness)


def chain_record(state, c):
    return {"epoch": state.epoch, "h": str(state.pk.h), "c1": str(c[0]), "c2": str(c[1])}
