"""Polynomials in the backward-shift operator q^-1.

Coefficients are stored densely, lowest shift power first: ``coeffs[i]``
multiplies ``q^-i``. Nothing is trimmed implicitly, so the degree is always
``len(coeffs) - 1``.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

STABILITY_TOL = 1e-9


class Polynomial:
    """Immutable real polynomial ``c_0 + c_1 q^-1 + ... + c_n q^-n``."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Sequence[float] | np.ndarray):
        arr = np.array(coeffs, dtype=float).reshape(-1)
        if arr.size == 0:
            raise ValueError("a polynomial needs at least one coefficient")
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    def __setattr__(self, name, value):
        raise AttributeError("Polynomial is immutable")

    def __reduce__(self):
        return (Polynomial, (self.coeffs.copy(),))

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    @property
    def is_monic(self) -> bool:
        return self.coeffs[0] == 1.0

    @property
    def is_strictly_delayed(self) -> bool:
        return self.coeffs[0] == 0.0

    def coeff(self, i: int) -> float:
        """Coefficient of ``q^-i``; zero outside ``0..degree``."""
        if 0 <= i <= self.degree:
            return float(self.coeffs[i])
        return 0.0

    def padded(self, length: int) -> np.ndarray:
        out = np.zeros(max(length, self.coeffs.size))
        out[: self.coeffs.size] = self.coeffs
        return out

    def __add__(self, other: Polynomial) -> Polynomial:
        n = max(self.coeffs.size, other.coeffs.size)
        return Polynomial(self.padded(n) + other.padded(n))

    def __mul__(self, other: Polynomial) -> Polynomial:
        return convolve(self, other)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.coeffs.shape == other.coeffs.shape and bool(
            np.all(self.coeffs == other.coeffs)
        )

    def __hash__(self):
        return hash(self.coeffs.tobytes())

    def __len__(self) -> int:
        return self.coeffs.size

    def __repr__(self) -> str:
        return f"Polynomial({self.coeffs.tolist()!r})"

    @classmethod
    def one(cls) -> Polynomial:
        return cls([1.0])

    @classmethod
    def monic(cls, tail: Sequence[float]) -> Polynomial:
        """``1 + tail[0] q^-1 + tail[1] q^-2 + ...``"""
        return cls(np.concatenate(([1.0], np.asarray(tail, dtype=float))))

    @classmethod
    def delayed(cls, tail: Sequence[float]) -> Polynomial:
        """``tail[0] q^-1 + tail[1] q^-2 + ...``"""
        return cls(np.concatenate(([0.0], np.asarray(tail, dtype=float))))


def convolve(p: Polynomial, r: Polynomial) -> Polynomial:
    """Product of two polynomials; coefficient i is ``sum_j p_j r_{i-j}``."""
    return Polynomial(np.convolve(p.coeffs, r.coeffs))


def root_moduli(p: Polynomial) -> np.ndarray:
    """Moduli of the roots of ``z^n + c_1 z^(n-1) + ... + c_n`` (p monic).

    Computed as eigenvalues of the companion matrix.
    """
    n = p.degree
    if n == 0:
        return np.zeros(0)
    comp = np.zeros((n, n))
    comp[0, :] = -p.coeffs[1:] / p.coeffs[0]
    if n > 1:
        comp[np.arange(1, n), np.arange(n - 1)] = 1.0
    return np.abs(np.linalg.eigvals(comp))


def is_stable(p: Polynomial, tol: float = STABILITY_TOL) -> bool:
    """True iff every root lies strictly inside the unit circle.

    A root counts as unstable once its modulus reaches ``1 - tol``, so an
    exact integrator is never reported stable through rounding.
    """
    if p.degree == 0:
        return True
    return bool(np.all(root_moduli(p) < 1.0 - tol))


def filter_step(
    b: Polynomial,
    a: Polynomial,
    input_history: Sequence[float],
    output_history: Sequence[float],
) -> float:
    """One sample of the direct-form filter ``a(q) y = b(q) u``.

    Parameters
    ----------
    b, a : Polynomial
        Numerator and monic denominator.
    input_history : sequence of float
        ``[u_t, u_{t-1}, ...]``, most recent first, at least ``deg b + 1``
        long (zero padded before the start of the record).
    output_history : sequence of float
        ``[y_{t-1}, y_{t-2}, ...]``, at least ``deg a`` long.

    Returns
    -------
    float
        ``y_t = sum_i b_i u_{t-i} - sum_{i>=1} a_i y_{t-i}``.
    """
    bc = b.coeffs
    ac = a.coeffs
    acc = 0.0
    for i in range(bc.size):
        acc += bc[i] * input_history[i]
    for i in range(1, ac.size):
        acc -= ac[i] * output_history[i - 1]
    return float(acc)


def lfilter(b: Polynomial, a: Polynomial, x: Sequence[float]) -> np.ndarray:
    """Filter a whole record from rest by repeated :func:`filter_step`."""
    x = np.asarray(x, dtype=float)
    nb, na = b.coeffs.size, a.coeffs.size
    u_hist = [0.0] * nb
    y_hist = [0.0] * max(na - 1, 1)
    out = np.empty_like(x)
    for t, xt in enumerate(x):
        u_hist = [float(xt)] + u_hist[:-1]
        yt = filter_step(b, a, u_hist, y_hist)
        y_hist = [yt] + y_hist[:-1]
        out[t] = yt
    return out


def closed_loop_denominator(model, ctrl) -> Polynomial:
    """``A M + B L`` for an ARMAX plant ``B/A`` under the controller ``L/M``.

    Monic whenever A and M are monic and B is strictly delayed.
    """
    return convolve(model.a, ctrl.m) + convolve(model.b, ctrl.l)
