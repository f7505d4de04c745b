"""Encrypted state feedback ``u = F x`` evaluated with elementwise ciphertext products.

The controller side only ever sees ciphertexts: it multiplies ``Enc(F_ij)`` by
``Enc(x_j)``. The plant side decrypts every product, decodes it with the
product sensitivity ``delta_F * delta_x`` and sums each row.
"""
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from . import codec
from .elgamal import decrypt, encrypt, hom_mul

__all__ = [
    "PlaintextOverflowError",
    "EncryptedGain",
    "EncryptedState",
    "EncryptedProduct",
    "encrypt_gain",
    "encrypt_state",
    "controller_eval",
    "restore_input",
    "input_error_bound",
]


class PlaintextOverflowError(ArithmeticError):
    """Product of encoded magnitudes exceeds q, so decoding would wrap."""


@dataclass(frozen=True)
class EncryptedGain:
    cells: list  # m x n nested lists of Ciphertext
    delta: float
    max_abs: int  # largest |signed encoded entry|, kept plant-side for overflow checks
    max_gap: int = 1

    @property
    def shape(self):
        return len(self.cells), len(self.cells[0])

    def with_cells(self, cells):
        return replace(self, cells=cells)


@dataclass(frozen=True)
class EncryptedState:
    cells: list
    delta: float
    max_abs: int
    max_gap: int = 1


@dataclass(frozen=True)
class EncryptedProduct:
    cells: list
    magnitude_bound: int | None = None


def _encode_all(values, delta, pk):
    codes, mags, gaps = [], [], []
    for v in values:
        m, gap = codec.encode_with_gap(float(v), delta, pk)
        codes.append(m)
        mags.append(abs(codec.signed_value(m, pk)))
        gaps.append(gap)
    return codes, max(mags, default=0), max(gaps, default=1)


def encrypt_gain(F, delta_F, pk, rng):
    F = np.atleast_2d(np.asarray(F, dtype=float))
    codes, max_abs, max_gap = _encode_all(F.ravel(), delta_F, pk)
    n = F.shape[1]
    cts = [encrypt(pk, m, rng) for m in codes]
    cells = [cts[i * n:(i + 1) * n] for i in range(F.shape[0])]
    return EncryptedGain(cells, delta_F, max_abs, max_gap)


def encrypt_state(x, delta_x, pk, rng):
    x = np.asarray(x, dtype=float).ravel()
    codes, max_abs, max_gap = _encode_all(x, delta_x, pk)
    return EncryptedState([encrypt(pk, m, rng) for m in codes], delta_x, max_abs, max_gap)


def controller_eval(gain, cx, pk):
    """Elementwise products ``c_U[i][j] = c_F[i][j] * c_x[j]``; no decryption."""
    cells_x = cx.cells if isinstance(cx, EncryptedState) else list(cx)
    rows, cols = gain.shape
    if len(cells_x) != cols:
        raise ValueError(f"state has {len(cells_x)} entries, gain expects {cols}")
    out = [[hom_mul(pk, gain.cells[i][j], cells_x[j]) for j in range(cols)] for i in range(rows)]
    bound = gain.max_abs * cx.max_abs if isinstance(cx, EncryptedState) else None
    return EncryptedProduct(out, bound)


def restore_input(pk, sk, product, delta_F, delta_x):
    if product.magnitude_bound is not None and product.magnitude_bound > pk.q:
        raise PlaintextOverflowError(
            f"plaintext overflow: encoded product magnitude {product.magnitude_bound} exceeds q = {pk.q}"
        )
    delta = Fraction(delta_F) * Fraction(delta_x)
    u = []
    for row in product.cells:
        total = sum(Fraction(codec.signed_value(decrypt(pk, sk, c), pk)) for c in row)
        u.append(float(total * delta))
    return np.array(u)


def input_error_bound(F, x, delta_F, delta_x, d_max):
    """Per-row bound on ``|u_i - (F x)_i|`` from the quantization of F and x."""
    F = np.atleast_2d(np.asarray(F, dtype=float))
    x = np.asarray(x, dtype=float).ravel()
    half = d_max / 2
    per_cell = (
        np.abs(x)[None, :] * delta_F * half
        + np.abs(F) * delta_x * half
        + delta_F * delta_x * half**2
    )
    return per_cell.sum(axis=1)
