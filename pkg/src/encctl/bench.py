"""Per-operation timing of the encryption primitives at several key lengths."""
import random
import time
from dataclasses import dataclass

import numpy as np

from . import dynamic_elgamal as dyn
from .elgamal import decrypt, encrypt, keygen, uniform_zq

__all__ = ["OPS", "TimingStats", "time_operations", "time_key_lengths"]

OPS = ("Enc", "Dec", "T_K", "T_C")


@dataclass(frozen=True)
class TimingStats:
    k: int
    op: str
    min: float
    mean: float
    max: float
    std: float

    def row(self):
        return [self.k, self.op, self.min, self.mean, self.max, self.std]


def _stats(k, op, samples):
    a = np.asarray(samples)
    return TimingStats(k, op, float(a.min()), float(a.mean()), float(a.max()), float(a.std()))


class _Timer:
    """Times one trial of every operation at a fixed key."""

    def __init__(self, k, rng, keys=None):
        self.k = k
        self.rng = rng
        pk, sk = keys or keygen(k, rng)
        self.state = dyn.DynState(pk, sk, 0)
        self.samples = {op: [] for op in OPS}

    def trial(self):
        clock = time.perf_counter
        rng, state = self.rng, self.state
        pk, sk = state.pk, state.sk
        m = pow(pk.g, uniform_zq(pk.q, rng), pk.p)
        r = uniform_zq(pk.q, rng)
        t0 = clock()
        c = encrypt(pk, m, r=r)
        self.samples["Enc"].append(clock() - t0)

        t0 = clock()
        decrypt(pk, sk, c)
        self.samples["Dec"].append(clock() - t0)

        s_prime, r_prime = uniform_zq(pk.q, rng), uniform_zq(pk.q, rng)
        t0 = clock()
        nxt = dyn.key_transition(state, s_prime)
        self.samples["T_K"].append(clock() - t0)

        t0 = clock()
        dyn.cipher_transition(pk, c, r_prime, s_prime)
        self.samples["T_C"].append(clock() - t0)
        self.state = nxt

    def stats(self):
        return [_stats(self.k, op, self.samples[op]) for op in OPS]


def time_operations(k, trials=1000, rng=None, keys=None):
    """Seconds per call of Enc, Dec, T_K and T_C over ``trials`` fresh inputs.

    Each trial uses a new random plaintext, encryption randomness and epoch
    randomness; only the call itself is inside the timer.
    """
    return time_key_lengths([k], trials, rng, {k: keys} if keys else None)


def time_key_lengths(ks, trials=1000, rng=None, keys=None):
    """Like :func:`time_operations` for several key lengths at once.

    Trials are interleaved across key lengths so that slow drift of the
    machine affects every key length alike.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    rng = rng or random.Random(0)
    keys = keys or {}
    timers = [_Timer(k, rng, keys.get(k)) for k in ks]
    for _ in range(trials):
        for timer in timers:
            timer.trial()
    return [s for timer in timers for s in timer.stats()]
