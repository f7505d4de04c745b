"""Bayesian identification of the closed-loop matrix from deciphered states.

With Gaussian noise of precision ``L`` and a Gaussian prior ``N(mu, inv(Lambda))``
on ``vec(A)`` (column-stacked), observing ``x_0 .. x_T`` gives a Gaussian
posterior with

* ``Lambda_hat = Lambda + sum_t (x_t x_t^T) kron L``
* ``mu_hat = inv(Lambda_hat) (Lambda mu + vec(L sum_t x_{t+1} x_t^T))``

``bayes_update`` builds the sums from ``(x_t kron I) L (x_t kron I)^T`` terms;
``PosteriorTracker`` keeps only ``sum x_t x_t^T`` and ``sum x_{t+1} x_t^T`` and
forms the same quantities on demand.
"""
import math
from dataclasses import dataclass

import numpy as np

from .numerics import (
    NotPositiveDefiniteError,
    as_matrix,
    kron_with_identity,
    spd_solve,
    trace,
    unvec,
    vec,
)
from .security_curves import GNFS, log_sdt

__all__ = [
    "SingularPosteriorError",
    "Prior",
    "Posterior",
    "PosteriorTracker",
    "CI_Z",
    "bayes_update",
    "estimate_A",
    "total_variance",
    "ci_half_widths",
    "estimation_error_sq",
    "trajectory_variance_bound",
    "deciphering_time",
    "posterior_path",
]

CI_Z = 1.959963984540054  # two-sided 95% normal quantile
SPD_RTOL = 1e-10


class SingularPosteriorError(NotPositiveDefiniteError):
    pass


@dataclass(frozen=True)
class Prior:
    mu: np.ndarray  # (n^2,)
    Lambda: np.ndarray  # (n^2, n^2); SPD or exactly zero

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float).ravel()
        Lam = as_matrix(self.Lambda, "Lambda")
        N = mu.size
        if Lam.shape != (N, N):
            raise ValueError(f"Lambda must be {N}x{N}, got {Lam.shape}")
        if not np.allclose(Lam, Lam.T):
            raise ValueError("Lambda must be symmetric")
        if np.any(Lam) and np.linalg.eigvalsh(Lam).min() <= 0:
            raise NotPositiveDefiniteError("prior precision must be SPD or exactly zero")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "Lambda", Lam)

    @property
    def n(self):
        return math.isqrt(self.mu.size)

    @classmethod
    def standard(cls, n):
        """``mu = 0``, ``Lambda = I``."""
        return cls(np.zeros(n * n), np.eye(n * n))

    @classmethod
    def uninformative(cls, n):
        """Zero precision: no prior information at all."""
        return cls(np.zeros(n * n), np.zeros((n * n, n * n)))


@dataclass(frozen=True)
class Posterior:
    mu_hat: np.ndarray
    Lambda_hat: np.ndarray
    T: int

    @property
    def n(self):
        return math.isqrt(self.mu_hat.size)


def _check_states(D, n):
    D = np.asarray(D, dtype=float)
    if D.ndim == 1 and n == 1:
        D = D[:, None]
    if D.ndim != 2 or D.shape[0] < 1 or D.shape[1] != n:
        raise ValueError(f"states must be a (T+1, {n}) array with T+1 >= 1, got shape {D.shape}")
    return D


def _is_numerically_spd(M):
    scale = float(np.max(np.abs(M))) if M.size else 0.0
    if scale == 0.0:
        return False
    return float(np.linalg.eigvalsh(M).min()) > SPD_RTOL * scale


def _solve_mean(Lambda_hat, rhs, T):
    if not _is_numerically_spd(Lambda_hat):
        raise SingularPosteriorError(f"posterior precision singular at T={T}")
    return spd_solve(Lambda_hat, rhs)


def bayes_update(prior, D, L):
    """Posterior after observing states ``D = [x_0, ..., x_T]``.

    With ``T = 0`` the prior is returned unchanged; a zero prior then has no
    mean to speak of and the returned ``mu_hat`` is the prior's.
    """
    n = prior.n
    L = as_matrix(L, "L")
    if L.shape != (n, n):
        raise ValueError(f"L must be {n}x{n}, got {L.shape}")
    D = _check_states(D, n)
    T = D.shape[0] - 1
    Lambda_hat = prior.Lambda.copy()
    rhs = prior.Lambda @ prior.mu
    for t in range(T):
        X = kron_with_identity(D[t], n)  # (n^2, n)
        Lambda_hat += X @ L @ X.T
        rhs += X @ (L @ D[t + 1])
    Lambda_hat = (Lambda_hat + Lambda_hat.T) / 2
    if T == 0:
        return Posterior(prior.mu.copy(), Lambda_hat, 0)
    return Posterior(_solve_mean(Lambda_hat, rhs, T), Lambda_hat, T)


class PosteriorTracker:
    """Streaming posterior: rank-``n`` precision update per new state."""

    def __init__(self, prior, L, x0):
        self.prior = prior
        self.n = prior.n
        self.L = as_matrix(L, "L")
        if self.L.shape != (self.n, self.n):
            raise ValueError(f"L must be {self.n}x{self.n}")
        self.x = np.asarray(x0, dtype=float).ravel()
        if self.x.size != self.n:
            raise ValueError(f"x0 must have {self.n} entries")
        self.Sxx = np.zeros((self.n, self.n))  # sum x_t x_t^T
        self.Syx = np.zeros((self.n, self.n))  # sum x_{t+1} x_t^T
        self.T = 0

    def push(self, x_next):
        x_next = np.asarray(x_next, dtype=float).ravel()
        self.Sxx += np.outer(self.x, self.x)
        self.Syx += np.outer(x_next, self.x)
        self.x = x_next
        self.T += 1

    @property
    def Lambda_hat(self):
        M = self.prior.Lambda + np.kron(self.Sxx, self.L)
        return (M + M.T) / 2

    @property
    def ready(self):
        return self.T > 0 and _is_numerically_spd(self.Lambda_hat)

    def posterior(self):
        Lam = self.Lambda_hat
        if self.T == 0:
            return Posterior(self.prior.mu.copy(), Lam, 0)
        rhs = self.prior.Lambda @ self.prior.mu + vec(self.L @ self.Syx)
        return Posterior(_solve_mean(Lam, rhs, self.T), Lam, self.T)


def estimate_A(post, n=None):
    n = post.n if n is None else n
    if post.mu_hat.size != n * n:
        raise ValueError(f"posterior mean has {post.mu_hat.size} entries, expected {n * n}")
    return unvec(post.mu_hat, n)


def _covariance(post):
    if not _is_numerically_spd(post.Lambda_hat):
        raise SingularPosteriorError(f"posterior precision singular at T={post.T}")
    return spd_solve(post.Lambda_hat, np.eye(post.Lambda_hat.shape[0]))


def total_variance(post):
    """``tr(inv(Lambda_hat))``."""
    return trace(_covariance(post))


def ci_half_widths(post, z=CI_Z):
    """Half-widths of the marginal credible intervals for ``vec(A)``."""
    return z * np.sqrt(np.diag(_covariance(post)))


def estimation_error_sq(A_true, post):
    A_true = as_matrix(A_true, "A_true")
    diff = A_true - estimate_A(post, A_true.shape[0])
    return float(np.sum(diff * diff))


def trajectory_variance_bound(D, Lambda, L, n):
    """Per-run lower bound ``n^2 / (tr(Lambda) + tr(L) sum_{t<T} ||x_t||^2)``.

    Returns ``inf`` when the denominator vanishes.
    """
    D = _check_states(D, n)
    energy = float(np.sum(D[:-1] ** 2))
    denom = trace(as_matrix(Lambda)) + trace(as_matrix(L)) * energy
    return math.inf if denom == 0 else n * n / denom


def deciphering_time(T, k, params=None):
    """Seconds the adversary spends breaking ``T + 1`` ciphertexts at key length ``k``."""
    try:
        return math.exp(log_sdt(T, k, params or GNFS))
    except OverflowError:
        return math.inf


def posterior_path(prior, D, L, Ts=None):
    """Posterior at each requested ``T`` (default: every ``T >= 1``) from one pass.

    Yields ``(T, Posterior)``; with a zero prior, steps before the precision
    becomes numerically SPD are skipped.
    """
    D = _check_states(D, prior.n)
    T_max = D.shape[0] - 1
    wanted = range(1, T_max + 1) if Ts is None else sorted(set(int(t) for t in Ts))
    if wanted and (min(wanted) < 0 or max(wanted) > T_max):
        raise ValueError(f"requested T outside [0, {T_max}]")
    tracker = PosteriorTracker(prior, L, D[0])
    for T in wanted:
        while tracker.T < T:
            tracker.push(D[tracker.T + 1])
        if T == 0 or tracker.ready:
            yield T, tracker.posterior()
