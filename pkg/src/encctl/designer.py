"""Joint design of the feedback gain, the critical sample count and the key length.

Pipeline:

1. ``F*`` from the cheap-control Riccati equation
   ``P = A^T P A - A^T P B (B^T P B)^{-1} B^T P A + I`` (no input weight),
   ``F* = -(B^T P B)^{-1} B^T P A``.
2. ``T*``: smallest ``T`` with ``E(T) > n / gamma_c`` for ``A = A_p + B_p F*``.
3. ``k*``: smallest ``k`` with ``L(k) > tau_c * Upsilon / (T* + 1)``.
"""
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .security_curves import GNFS, CostModelParams, GramianAccumulator, log_gnfs_time, log_sdt
from .numerics import NotPositiveDefiniteError, as_matrix, is_spd, spd_solve, spectral_radius
from .simulator import PlantModel

__all__ = [
    "DesignError",
    "DesignSpec",
    "DesignResult",
    "RiccatiSequence",
    "SecurityCertificate",
    "riccati_step",
    "riccati_finite",
    "cheap_gain",
    "pole_place",
    "find_T_star",
    "find_k_star",
    "design",
    "certify_security",
]

T_STAR_CAP = 10**8


class DesignError(RuntimeError):
    pass


@dataclass(frozen=True)
class DesignSpec:
    plant: PlantModel
    gamma_c: float
    tau_c: float  # seconds
    upsilon: float  # attacker FLOPS

    def __post_init__(self):
        for name in ("gamma_c", "tau_c", "upsilon"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive and finite, got {v}")

    @property
    def cost_params(self):
        return CostModelParams(GNFS.v, GNFS.d, self.upsilon)


@dataclass
class RiccatiSequence:
    P: list  # P[0] .. P[T], P[T] = I
    gains: list  # F_0 .. F_{T-1}

    @property
    def horizon(self):
        return len(self.gains)


@dataclass
class DesignResult:
    F_star: np.ndarray
    T_star: int
    k_star: int
    E_at_Tstar: float
    spectral_radius: float
    gain_kind: str = "cheap"
    key_scheme: str = "dynamic"
    extras: dict = field(default_factory=dict)

    def to_record(self):
        return {
            "F_star": self.F_star.tolist(),
            "T_star": self.T_star,
            "k_star": self.k_star,
            "E_at_Tstar": self.E_at_Tstar,
            "spectral_radius": self.spectral_radius,
            "gain_kind": self.gain_kind,
            "key_scheme": self.key_scheme,
            **self.extras,
        }


def _check_full_column_rank(B):
    if np.linalg.matrix_rank(B) < B.shape[1]:
        raise DesignError("B_p must have full column rank")


def riccati_step(A, B, P):
    """One backward step; returns ``(P_prev, F)`` with ``F`` the gain at that step."""
    BtP = B.T @ P
    try:
        K = spd_solve(BtP @ B, BtP @ A)
    except NotPositiveDefiniteError as exc:
        raise DesignError("B_p^T P B_p is not positive definite") from exc
    P_prev = A.T @ P @ A - A.T @ P @ B @ K + np.eye(A.shape[0])
    return (P_prev + P_prev.T) / 2, -K


def riccati_finite(A_p, B_p, T):
    """Finite-horizon cheap-control recursion with ``P_T = I``."""
    A = as_matrix(A_p, "A_p")
    B = as_matrix(B_p, "B_p")
    _check_full_column_rank(B)
    if T < 1:
        raise ValueError("horizon must be at least 1")
    P = [None] * (T + 1)
    gains = [None] * T
    P[T] = np.eye(A.shape[0])
    for t in range(T - 1, -1, -1):
        P[t], gains[t] = riccati_step(A, B, P[t + 1])
        if not is_spd(P[t]):
            raise DesignError(f"P_{t} lost positive definiteness")
    return RiccatiSequence(P, gains)


def cheap_gain(A_p, B_p, tol=1e-12, max_iter=10**6, return_P=False):
    """Stationary cheap-control gain by iterating the Riccati map from ``P = I``."""
    A = as_matrix(A_p, "A_p")
    B = as_matrix(B_p, "B_p")
    _check_full_column_rank(B)
    P = np.eye(A.shape[0])
    resid = math.inf
    for _ in range(max_iter):
        P_new, F = riccati_step(A, B, P)
        resid = float(np.max(np.abs(P_new - P)))
        P = P_new
        if resid < tol * max(1.0, float(np.max(np.abs(P)))):
            break
    else:
        raise DesignError(f"Riccati iteration did not converge; last residual {resid:.3e}")
    _, F = riccati_step(A, B, P)
    rho = spectral_radius(A + B @ F)
    if rho >= 1:
        raise DesignError(f"cheap-control closed loop is not Schur (spectral radius {rho})")
    return (F, P) if return_P else F


def pole_place(A_p, B_p, poles):
    """Ackermann's formula for single-input ``(A_p, B_p)``; returns ``F`` with
    ``eig(A_p + B_p F) = poles``."""
    A = as_matrix(A_p, "A_p")
    B = as_matrix(B_p, "B_p")
    n = A.shape[0]
    if B.shape[1] != 1:
        raise ValueError("pole placement here is single-input only")
    poles = np.asarray(poles, dtype=complex)
    if poles.size != n:
        raise ValueError(f"need {n} poles, got {poles.size}")
    coeffs = np.poly(poles)
    if np.max(np.abs(coeffs.imag)) > 1e-9:
        raise ValueError("complex poles must come in conjugate pairs")
    coeffs = coeffs.real
    ctrb = np.hstack([np.linalg.matrix_power(A, i) @ B for i in range(n)])
    if np.linalg.matrix_rank(ctrb) < n:
        raise DesignError("(A_p, B_p) is not controllable")
    phi = sum(c * np.linalg.matrix_power(A, n - i) for i, c in enumerate(coeffs))
    last_row = np.linalg.solve(ctrb.T, np.eye(n)[:, -1])  # e_n^T C^{-1}
    return -(last_row @ phi).reshape(1, n)


def _cross_threshold(A, threshold, cap):
    acc = GramianAccumulator(A)
    while acc.E <= threshold:
        if acc.T >= cap:
            raise DesignError(f"E(T) did not exceed {threshold:g} within {cap} steps")
        acc.step()
    return acc.T, acc.E


def find_T_star(A_closed, gamma_c, n=None, cap=T_STAR_CAP, return_E=False):
    """Smallest ``T`` with ``E(T) > n / gamma_c``."""
    A = as_matrix(A_closed, "A")
    n = A.shape[0] if n is None else n
    if not gamma_c > 0:
        raise ValueError("gamma_c must be positive")
    if spectral_radius(A) >= 1:
        warnings.warn("closed loop is not Schur; the identifying-complexity bound assumes it is")
    T, E = _cross_threshold(A, n / gamma_c, cap)
    return (T, E) if return_E else T


def find_k_star(T_star, tau_c, upsilon, params=None):
    """Smallest key length with ``L(k) > tau_c * upsilon / (T_star + 1)``."""
    if T_star < 0 or not tau_c > 0 or not upsilon > 0:
        raise ValueError("need T_star >= 0 and positive tau_c, upsilon")
    params = params or CostModelParams(GNFS.v, GNFS.d, upsilon)
    bound = math.log(tau_c) + math.log(upsilon) - math.log(T_star + 1)
    k = 2
    while log_gnfs_time(k, params) <= bound:
        k += 1
    return k


def design(spec, F=None, static_key=False, gain_kind=None):
    """Run the full design. Pass ``F`` to evaluate a given gain instead of ``F*``.

    With ``static_key`` the key must survive a single-ciphertext attack, i.e.
    ``k*`` is computed for ``T = 0`` while ``T*`` is still reported.
    """
    plant = spec.plant
    if F is None:
        F = cheap_gain(plant.A_p, plant.B_p)
        gain_kind = gain_kind or "cheap"
    else:
        F = np.atleast_2d(np.asarray(F, dtype=float))
        gain_kind = gain_kind or "given"
    A = plant.closed_loop(F)
    T_star, E = find_T_star(A, spec.gamma_c, plant.n, return_E=True)
    k_star = find_k_star(0 if static_key else T_star, spec.tau_c, spec.upsilon)
    return DesignResult(
        F_star=F,
        T_star=T_star,
        k_star=k_star,
        E_at_Tstar=E,
        spectral_radius=spectral_radius(A),
        gain_kind=gain_kind,
        key_scheme="static" if static_key else "dynamic",
    )


@dataclass
class SecurityCertificate:
    secure: bool
    first_violation: int | None
    scanned_to: int
    tau_exceeds_from: int | None  # tau(T, k) > tau_c for every T >= this


def certify_security(A_closed, gamma_c, tau_c, k, params=GNFS, scan_to=0, max_scan=10**7):
    """Check that no ``T >= 1`` has ``gamma(T) < gamma_c`` and ``tau(T, k) <= tau_c``.

    ``T`` is scanned upward from 1 and checked directly until a violation is
    found, or until ``T >= scan_to`` and ``tau(T, k) > tau_c``. From there on
    the deciphering time only grows, so no later ``T`` can violate.
    """
    log_tc = math.log(tau_c)
    acc = GramianAccumulator(A_closed)
    n = acc.n
    T = 0
    tau_exceeds_from = 0 if log_sdt(0, k, params) > log_tc else None
    while True:
        T += 1
        if T > max_scan:
            raise DesignError(f"certificate scan passed max_scan={max_scan} without a decision")
        acc.advance_to(T)
        tau_ok = log_sdt(T, k, params) > log_tc
        if tau_ok and tau_exceeds_from is None:
            tau_exceeds_from = T
        if n / acc.E < gamma_c and not tau_ok:
            return SecurityCertificate(False, T, T, tau_exceeds_from)
        if tau_ok and T >= scan_to:
            return SecurityCertificate(True, None, T, tau_exceeds_from)
