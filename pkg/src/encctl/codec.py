"""Real <-> plaintext-group encoder/decoder with sensitivity ``delta``.

A real ``x`` is scaled to ``x/delta`` (shifted by ``p`` when negative) and
mapped to the nearest quadratic residue, ties going to the smaller one.
Decoding reads residues above ``q`` as negative numbers.

Arithmetic on targets is exact (``Fraction``) because for realistic keys
``p`` is hundreds of bits wide and a float shift by ``p`` would be useless.
"""
import math
import random
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .elgamal import NotGroupElementError, group_elements

__all__ = [
    "GroupGapBound",
    "nearest_residue",
    "encode",
    "encode_with_gap",
    "decode",
    "quantize",
    "signed_value",
    "measure_d_max",
    "select_sensitivity",
    "faithful_range",
    "ENUMERATION_LIMIT",
]

ENUMERATION_LIMIT = 2**24


@dataclass(frozen=True)
class GroupGapBound:
    """Largest gap between consecutive plaintext-group elements.

    Consecutive is meant cyclically, so the gap from the largest element up to
    ``p + 1`` counts too. ``edge`` is ``p`` minus the largest element.
    """

    d_max: int
    exact: bool
    edge: int | None = None

    def __post_init__(self):
        if self.d_max < 1:
            raise ValueError("d_max must be at least 1")


def _is_residue(pk, m):
    return pow(m, pk.q, pk.p) == 1


def _target(x, delta, pk):
    if not (delta > 0 and math.isfinite(delta)):
        raise ValueError(f"sensitivity must be a positive finite number, got {delta}")
    t = Fraction(x) / Fraction(delta)
    if x < 0:
        t += pk.p
    if not (0 <= t < pk.p):
        raise ValueError(f"{x} / {delta} does not fit in the plaintext range of this key")
    return t


def _scan(pk, start, step):
    m = start
    while 1 <= m <= pk.p - 1:
        if _is_residue(pk, m):
            return m
        m += step
    return None


def nearest_residue(t, pk):
    """Return ``(m, lo, hi)``: the chosen residue and its two neighbours around ``t``.

    The residues are treated as points on a circle of circumference ``p``: above
    the largest residue the next neighbour is ``1`` (reported as ``p + 1``) and
    below ``1`` it is the largest residue (reported as ``r_max - p``). So
    ``hi - lo`` is always the local gap and ``|t - m| <= (hi - lo) / 2``.
    """
    p = pk.p
    c = math.floor(t)
    lo = _scan(pk, min(c, p - 1), -1)
    hi = _scan(pk, max(c + 1, 1), +1)
    if lo is None:
        lo = _scan(pk, p - 1, -1) - p
    if hi is None:
        hi = p + 1
    m = lo if t - lo <= hi - t else hi
    return m % p, lo, hi


def encode(x, delta, pk):
    return nearest_residue(_target(x, delta, pk), pk)[0]


def encode_with_gap(x, delta, pk):
    """Encode and also report the local gap between neighbouring residues."""
    m, lo, hi = nearest_residue(_target(x, delta, pk), pk)
    return m, hi - lo


def signed_value(m, pk):
    return m - pk.p if m > pk.q else m


def decode(m, delta, pk):
    if not (0 < m < pk.p) or not _is_residue(pk, m):
        raise NotGroupElementError(f"{m} is not a group element")
    return float(Fraction(signed_value(m, pk)) * Fraction(delta))


def quantize(x, delta, pk):
    return decode(encode(x, delta, pk), delta, pk)


def _enumerated_gap(pk):
    elems = np.asarray(group_elements(pk), dtype=np.int64)
    edge = int(pk.p - elems[-1])
    inner = int(np.max(np.diff(elems))) if elems.size > 1 else 1
    # wrap gap: largest residue -> 1 + p
    return GroupGapBound(max(inner, edge + 1), True, edge)


def measure_d_max(pk, samples=32, window=256, rng=None):
    """Exact maximal gap for small ``p``; otherwise an empirical lower estimate.

    The sampled mode walks ``samples`` random windows of ``window`` integers and
    reports the largest gap seen. It is a diagnostic only.
    """
    if pk.p <= ENUMERATION_LIMIT:
        return _enumerated_gap(pk)
    if rng is None:
        rng = random.Random(pk.p)
    best = 1
    for _ in range(samples):
        m = rng.randrange(1, pk.p - window)
        prev = None
        for cand in range(m, m + window):
            if _is_residue(pk, cand):
                if prev is not None:
                    best = max(best, cand - prev)
                prev = cand
    edge = 1
    while not _is_residue(pk, pk.p - edge):
        edge += 1
    return GroupGapBound(max(best, edge + 1), False, edge)


def select_sensitivity(bound, k, d_max):
    """Sensitivity that keeps products of encoded values below ``q``.

    ``bound`` is the largest magnitude of any gain entry or signal entry.
    """
    if not bound > 0:
        raise ValueError("signal bound must be positive")
    d = d_max.d_max if isinstance(d_max, GroupGapBound) else d_max
    denom = 2.0 ** ((k - 1) / 2) - d / 2
    if denom <= 0:
        raise ValueError("key too short for this signal bound")
    return bound / denom


def faithful_range(delta, pk, d_max):
    """Largest ``|x|`` for which ``|quantize(x) - x| <= delta * d_max / 2`` is guaranteed.

    Beyond ``delta * (q - d_max / 2)`` the nearest residue may sit on the other
    side of ``q`` and decode with the wrong sign.
    """
    d = d_max.d_max if isinstance(d_max, GroupGapBound) else d_max
    return delta * max(pk.q - d / 2, 0)
