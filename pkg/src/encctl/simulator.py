"""Closed-loop simulation of ``x_{t+1} = A_p x_t + B_p u_t + w_t``.

Three modes share one code path:

* ``plain``: ``u_t = F x_t`` in floating point.
* ``enc_static``: ``F`` and ``x_t`` are encoded, encrypted, multiplied on the
  "cloud" side and decrypted/decoded on the plant side, under one key pair.
* ``enc_dynamic``: as above, but the key pair and the stored gain ciphertexts
  are moved forward one epoch after every control step.

Randomness is split from one seed into a noise stream (numpy ``Generator``)
and a crypto stream (``random.Random``) so that plain and encrypted runs with
the same seed see identical noise.
"""
import csv
import json
import random
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from . import dynamic_elgamal as dynamic
from .elgamal import ciphertext_to_record, keygen
from .encrypted_control import (
    PlaintextOverflowError,
    controller_eval,
    encrypt_gain,
    encrypt_state,
    restore_input,
)
from .numerics import NotPositiveDefiniteError, as_matrix
from .records import atomic_open

__all__ = [
    "MODES",
    "PlantModel",
    "CryptoSetup",
    "Trajectory",
    "CipherLog",
    "split_seed",
    "sample_noise",
    "run_closed_loop",
    "error_tube",
    "stationary_covariance",
    "write_trajectory_csv",
    "read_trajectory_csv",
    "write_cipherlog",
]

MODES = ("plain", "enc_static", "enc_dynamic")


@dataclass(frozen=True)
class PlantModel:
    A_p: np.ndarray
    B_p: np.ndarray
    L: np.ndarray  # noise precision; covariance is inv(L)

    def __post_init__(self):
        A = as_matrix(self.A_p, "A_p")
        B = as_matrix(self.B_p, "B_p")
        L = as_matrix(self.L, "L")
        n = A.shape[0]
        if A.shape != (n, n) or B.shape[0] != n or L.shape != (n, n):
            raise ValueError(f"inconsistent shapes A_p{A.shape} B_p{B.shape} L{L.shape}")
        ctrb = np.hstack([np.linalg.matrix_power(A, i) @ B for i in range(n)])
        if np.linalg.matrix_rank(ctrb) < n:
            raise ValueError("(A_p, B_p) is not controllable")
        try:
            np.linalg.cholesky(L)
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefiniteError("noise precision L is not positive definite") from exc
        object.__setattr__(self, "A_p", A)
        object.__setattr__(self, "B_p", B)
        object.__setattr__(self, "L", L)

    @property
    def n(self):
        return self.A_p.shape[0]

    @property
    def m(self):
        return self.B_p.shape[1]

    @property
    def Sigma(self):
        return np.linalg.inv(self.L)

    def closed_loop(self, F):
        return self.A_p + self.B_p @ np.atleast_2d(F)


@dataclass
class CryptoSetup:
    """Key pair plus the sensitivities used for the gain and the state."""

    pk: object
    sk: object
    delta_F: float
    delta_x: float

    @classmethod
    def generate(cls, k, delta_F, delta_x, rng):
        pk, sk = keygen(k, rng)
        return cls(pk, sk, delta_F, delta_x)


@dataclass
class Trajectory:
    states: np.ndarray  # (T+1, n)
    inputs: np.ndarray  # (T, m)
    seed: int | None = None
    mode: str = "plain"
    max_gap: int = 1  # largest local residue gap met while encoding (encrypted modes)

    @property
    def T(self):
        return self.states.shape[0] - 1


@dataclass
class CipherLog:
    records: list = field(default_factory=list)


def split_seed(seed):
    """Independent (noise Generator, crypto Random) pair derived from one seed."""
    noise_ss, crypto_ss = np.random.SeedSequence(seed).spawn(2)
    crypto_seed = int.from_bytes(crypto_ss.generate_state(4, np.uint64).tobytes(), "little")
    return np.random.default_rng(noise_ss), random.Random(crypto_seed)


def _noise_factor(L):
    try:
        return np.linalg.cholesky(as_matrix(L, "L"))
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError("noise precision L is not positive definite") from exc


def sample_noise(L, rng, size=None):
    """Draw ``w ~ N(0, inv(L))``: with ``L = C C^T``, ``w = C^{-T} z``."""
    C = _noise_factor(L)
    n = C.shape[0]
    z = rng.standard_normal((n,) if size is None else (size, n))
    w = linalg.solve_triangular(C, z.T, lower=True, trans="T")
    return w.T


def run_closed_loop(model, F, T, mode="plain", seed=0, crypto=None, x0=None, noise=True):
    """Simulate ``T`` steps; returns ``(Trajectory, CipherLog)``.

    ``x0`` defaults to a draw from ``N(0, inv(L))``. With ``noise=False`` the
    disturbance is zero (and ``x0`` must then be given or is drawn anyway).
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if mode != "plain" and crypto is None:
        raise ValueError(f"mode {mode!r} needs a CryptoSetup")
    F = np.atleast_2d(np.asarray(F, dtype=float))
    n, m = model.n, model.m
    if F.shape != (m, n):
        raise ValueError(f"F must have shape {(m, n)}, got {F.shape}")
    noise_rng, crypto_rng = split_seed(seed)
    # all disturbances drawn up front: plain and encrypted runs share them exactly
    draws = sample_noise(model.L, noise_rng, size=T + 1)
    w = draws[1:] if noise else np.zeros((T, n))
    x = draws[0] if x0 is None else np.asarray(x0, dtype=float).ravel()

    states = np.empty((T + 1, n))
    inputs = np.empty((T, m))
    states[0] = x
    log = CipherLog()
    max_gap = 1

    if mode != "plain":
        pk, sk = crypto.pk, crypto.sk
        gain = encrypt_gain(F, crypto.delta_F, pk, crypto_rng)
        max_gap = gain.max_gap
        state = dynamic.DynState(pk, sk, 0) if mode == "enc_dynamic" else None

    for t in range(T):
        if mode == "plain":
            u = F @ x
        else:
            if state is not None:
                pk, sk = state.pk, state.sk
            cx = encrypt_state(x, crypto.delta_x, pk, crypto_rng)
            max_gap = max(max_gap, cx.max_gap)
            rec = {"t": t, "c": [ciphertext_to_record(c) for c in cx.cells]}
            if state is not None:
                rec["epoch"] = state.epoch
                rec["h"] = str(pk.h)
            log.records.append(rec)
            try:
                u = restore_input(pk, sk, controller_eval(gain, cx, pk), crypto.delta_F, crypto.delta_x)
            except PlaintextOverflowError as exc:
                raise PlaintextOverflowError(f"step {t}: {exc}") from exc
            if state is not None:
                state, cells = dynamic.epoch_step(state, gain.cells, crypto_rng)
                gain = gain.with_cells(cells)
        inputs[t] = u
        x = model.A_p @ x + model.B_p @ u + w[t]
        states[t + 1] = x

    return Trajectory(states, inputs, seed, mode, max_gap), log


def error_tube(A, B_p, step_bounds):
    """Bound on ``||x_enc_t - x_plain_t||_inf`` given per-step input error bounds.

    With ``e_{t+1} = A e_t + B_p eta_t`` and ``|eta_t|_inf <= b_t`` (``e_0 = 0``),
    ``||e_t||_inf <= sum_{s<t} ||A^{t-1-s} B_p||_inf b_s``.
    """
    A = as_matrix(A)
    B_p = as_matrix(B_p)
    b = np.asarray(step_bounds, dtype=float)
    T = b.size
    gains = np.empty(T)
    M = B_p.copy()
    for i in range(T):
        gains[i] = np.max(np.sum(np.abs(M), axis=1))
        M = A @ M
    tube = np.zeros(T + 1)
    for t in range(1, T + 1):
        tube[t] = np.dot(gains[:t][::-1], b[:t])
    return tube


def stationary_covariance(A, Sigma):
    """Solution of ``X = A X A^T + Sigma`` (needs a Schur ``A``)."""
    return linalg.solve_discrete_lyapunov(as_matrix(A), as_matrix(Sigma))


def write_trajectory_csv(path, traj):
    n = traj.states.shape[1]
    m = traj.inputs.shape[1]
    header = ["t"] + [f"x{i + 1}" for i in range(n)] + [f"u{j + 1}" for j in range(m)]
    with atomic_open(path) as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for t in range(traj.T + 1):
            u = [repr(float(v)) for v in traj.inputs[t]] if t < traj.T else [""] * m
            w.writerow([t] + [repr(float(v)) for v in traj.states[t]] + u)


def read_trajectory_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty trajectory file")
    header = rows[0]
    xs = [i for i, h in enumerate(header) if h.startswith("x")]
    us = [i for i, h in enumerate(header) if h.startswith("u")]
    if not xs:
        raise ValueError(f"{path}: no state columns in header {header}")
    body = rows[1:]
    states = np.array([[float(r[i]) for i in xs] for r in body]).reshape(len(body), len(xs))
    inputs = np.array([[float(r[i]) for i in us] for r in body[:-1]]).reshape(max(len(body) - 1, 0), len(us))
    return Trajectory(states, inputs)


def write_cipherlog(path, log):
    with atomic_open(path) as fh:
        for rec in log.records:
            fh.write(json.dumps(rec) + "\n")
