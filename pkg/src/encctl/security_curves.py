"""Sample identifying-complexity and sample deciphering-time curves.

``E(T)`` is the sum over ``t < T`` of the trace of the finite controllability
gramian ``W_t = sum_{i<=t} A^i (A^i)^T``. It is streamed with the second-order
recursion ``E(T) = 2 E(T-1) - E(T-2) + ||A^(T-1)||_F^2`` (``E(0) = 0``,
``E(1) = n``), so a sweep to ``T`` costs ``T`` small matrix products.

Deciphering cost uses the subexponential form
``L_{v,d}(eta) = exp(d (ln eta)^v (ln ln eta)^(1-v))`` at ``eta = 2^k``; it is
always handled in log space.
"""
import math
from dataclasses import dataclass

import numpy as np

from .numerics import as_matrix

__all__ = [
    "GramianAccumulator",
    "gramian_trace_sum",
    "gramian_trace_sum_bruteforce",
    "sic_simple",
    "sic_general",
    "sic_curve",
    "CostModelParams",
    "GNFS",
    "log_gnfs_time",
    "gnfs_time",
    "log_sdt",
    "sdt",
]


class GramianAccumulator:
    """Streams ``E(T)`` for ``T = 1, 2, ...``.

    After construction ``T == 1`` and ``E == n``; each :meth:`step` advances
    ``T`` by one. ``M`` holds ``A^(T-1)``.
    """

    def __init__(self, A):
        self.A = as_matrix(A, "A")
        n = self.A.shape[0]
        if self.A.shape != (n, n):
            raise ValueError(f"A must be square, got {self.A.shape}")
        self.n = n
        self.T = 1
        self.E = float(n)
        self.E_prev = 0.0
        self.M = np.eye(n)

    def step(self):
        self.M = self.M @ self.A
        nxt = 2.0 * self.E - self.E_prev + float(np.sum(self.M * self.M))
        self.E_prev, self.E = self.E, nxt
        self.T += 1
        return self.E

    def advance_to(self, T):
        if T < self.T:
            raise ValueError(f"accumulator is already at T={self.T}")
        while self.T < T:
            self.step()
        return self.E


def gramian_trace_sum(A, T):
    if T < 1:
        raise ValueError("E(T) is defined for T >= 1")
    return GramianAccumulator(A).advance_to(T)


def gramian_trace_sum_bruteforce(A, T):
    """Definitional double sum; O(T^2) products. Reference only."""
    A = as_matrix(A)
    n = A.shape[0]
    total = 0.0
    for t in range(T):
        W = np.zeros((n, n))
        Ai = np.eye(n)
        for _ in range(t + 1):
            W += Ai @ Ai.T
            Ai = Ai @ A
        total += np.trace(W)
    return total


def sic_simple(A, T, n=None):
    """``n / E(T)``: the identifying-complexity curve for isotropic noise and no prior."""
    A = as_matrix(A)
    n = A.shape[0] if n is None else n
    E = gramian_trace_sum(A, T)
    if not E > 0:
        raise ValueError("E(T) must be positive")
    return n / E


def sic_general(A, Sigma, lambda_trace, L_trace, T):
    """Weighted form with noise covariance ``Sigma`` and prior precision trace.

    The inner gramian ``G_t = sum_{i<=t} A^i Sigma (A^i)^T`` obeys
    ``G_t = A G_{t-1} A^T + Sigma`` and is streamed exactly.
    """
    A = as_matrix(A, "A")
    Sigma = as_matrix(Sigma, "Sigma")
    if T < 1:
        raise ValueError("T must be at least 1")
    n = A.shape[0]
    G = Sigma.copy()
    acc = 0.0
    for _ in range(T):
        acc += float(np.trace(G))
        G = A @ G @ A.T + Sigma
    denom = lambda_trace + L_trace * acc
    return math.inf if denom == 0 else n * n / denom


def sic_curve(A, Ts):
    """``(E, gamma)`` arrays at every ``T`` in ``Ts`` using a single stream."""
    Ts = np.asarray(Ts, dtype=np.int64)
    if Ts.size and Ts.min() < 1:
        raise ValueError("all T must be >= 1")
    order = np.argsort(Ts, kind="stable")
    acc = GramianAccumulator(A)
    E = np.empty(Ts.size)
    for idx in order:
        E[idx] = acc.advance_to(int(Ts[idx]))
    return E, acc.n / E


@dataclass(frozen=True)
class CostModelParams:
    v: float = 1.0 / 3.0
    d: float = (64.0 / 9.0) ** (1.0 / 3.0)
    upsilon: float = 4.42e17  # attacker FLOPS

    def __post_init__(self):
        if not 0 < self.v < 1:
            raise ValueError("v must lie in (0, 1)")
        if not self.d > 0:
            raise ValueError("d must be positive")
        if not self.upsilon > 0:
            raise ValueError("upsilon must be positive")


GNFS = CostModelParams()


def log_gnfs_time(k, params=GNFS):
    """Natural log of the attack cost (in operations) at key length ``k``."""
    if k < 2:
        raise ValueError("key length must be at least 2 bits")
    ln_eta = k * math.log(2.0)
    return params.d * ln_eta**params.v * math.log(ln_eta) ** (1.0 - params.v)


def gnfs_time(k, params=GNFS):
    try:
        return math.exp(log_gnfs_time(k, params))
    except OverflowError:
        return math.inf


def log_sdt(T, k, params=GNFS):
    if T < 0:
        raise ValueError("T must be non-negative")
    return math.log(T + 1) + log_gnfs_time(k, params) - math.log(params.upsilon)


def sdt(T, k, params=GNFS):
    """Seconds to decipher ``T + 1`` dynamic-key ciphertexts (``T = 0``: static key)."""
    try:
        return math.exp(log_sdt(T, k, params))
    except OverflowError:
        return math.inf
