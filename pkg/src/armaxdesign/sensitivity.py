"""Load sensitivity ``G_d = B M / (A M + B L)`` and the output-perturbation
constraint it induces on the next perturbation sample."""

from __future__ import annotations

import math
from operator import mul
from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .poly import Polynomial, closed_loop_denominator, convolve, is_stable

G1_EPSILON = 1e-8


@dataclass(frozen=True)
class Limits:
    d_min: float = -0.3
    d_max: float = 0.3
    yd_min: float = -math.inf
    yd_max: float = math.inf

    def __post_init__(self):
        if not self.d_min < self.d_max:
            raise ValueError(f"need d_min < d_max, got {self.d_min}, {self.d_max}")
        if not self.yd_min < self.yd_max:
            raise ValueError(f"need yd_min < yd_max, got {self.yd_min}, {self.yd_max}")

    @classmethod
    def symmetric(cls, d_max: float, yd_max: float) -> Limits:
        return cls(-d_max, d_max, -yd_max, yd_max)


@dataclass(frozen=True)
class SensitivityModel:
    a_tilde: Polynomial
    b_tilde: Polynomial
    g: np.ndarray  # g_1 .. g_k
    stable: bool

    @property
    def k(self) -> int:
        return self.g.size

    @property
    def g1(self) -> float:
        return float(self.g[0])


@dataclass(frozen=True)
class ConstraintContext:
    g1: float
    h: float
    d_lo: float
    d_hi: float
    feasible: bool = True
    degenerate: bool = False
    projected: bool = False


def impulse_response(b_tilde: Polynomial, a_tilde: Polynomial, k: int) -> np.ndarray:
    """``g_1..g_k`` from ``g_i = b_i - sum_{j=1}^{i} a_j g_{i-j}``, ``g_0 = 0``."""
    bt = b_tilde.coeffs.tolist()
    bt += [0.0] * (k + 1 - len(bt))
    neg_a = (-a_tilde.coeffs[:0:-1]).tolist()  # -a_n, ..., -a_1
    p = len(neg_a)
    # p leading zeros stand in for g_{1-p} .. g_0; g[i : i + p] is g_{i-p} .. g_{i-1}
    g = [0.0] * (p + 1)
    for i in range(1, k + 1):
        g.append(bt[i] + sum(map(mul, neg_a, g[i : i + p])))
    return np.array(g[p + 1 :])


def build_sensitivity(model, ctrl, k: int) -> SensitivityModel:
    """Sensitivity polynomials and truncated impulse response at ``model``.

    An unstable closed-loop denominator is reported through ``stable`` rather
    than raised; callers decide what to do with it.
    """
    if k < 1:
        raise ValueError(f"horizon k must be >= 1, got {k}")
    b_tilde = convolve(model.b, ctrl.m)
    a_tilde = closed_loop_denominator(model, ctrl)
    return SensitivityModel(
        a_tilde, b_tilde, impulse_response(b_tilde, a_tilde, k), is_stable(a_tilde)
    )


def tail_contribution(g: np.ndarray, d_history: Sequence[float]) -> float:
    """``h_t = sum_{i=2}^{k} g_i d_{t+1-i}`` for ``d_history = [d_{t-1}, ...]``."""
    n = min(g.size - 1, len(d_history))
    if n <= 0:
        return 0.0
    return float(np.dot(g[1 : n + 1], np.asarray(d_history, dtype=float)[:n]))


def constraint_bounds(
    s: SensitivityModel, d_history: Sequence[float], limits: Limits
) -> ConstraintContext:
    """Interval for ``d_t`` keeping ``g_1 d_t + h_t`` inside the output limits.

    If the intersection with the input bounds is empty (possible while the
    estimate is still moving) the input bound whose predicted output lands
    closest to the admissible band is returned as a one-point interval and
    the context is flagged ``projected``.
    """
    g1 = s.g1
    h = tail_contribution(s.g, d_history)
    if abs(g1) < G1_EPSILON:
        return ConstraintContext(g1, h, limits.d_min, limits.d_max, degenerate=True)
    lo_ratio = (limits.yd_min - h) / g1
    hi_ratio = (limits.yd_max - h) / g1
    d_lo = max(limits.d_min, min(lo_ratio, hi_ratio))
    d_hi = min(limits.d_max, max(lo_ratio, hi_ratio))
    if d_lo <= d_hi:
        return ConstraintContext(g1, h, d_lo, d_hi)

    def miss(d: float) -> float:
        pred = g1 * d + h
        return max(limits.yd_min - pred, pred - limits.yd_max, 0.0)

    best = min((limits.d_min, limits.d_max), key=miss)
    return ConstraintContext(g1, h, best, best, feasible=False, projected=True)


class PerturbationHistory:
    """The last ``k - 1`` applied perturbations, most recent first."""

    def __init__(self, k: int):
        self._buf: deque[float] = deque([0.0] * max(k - 1, 0), maxlen=max(k - 1, 0))

    def push(self, d: float) -> None:
        if self._buf.maxlen:
            self._buf.appendleft(float(d))

    def values(self) -> np.ndarray:
        return np.fromiter(self._buf, dtype=float, count=len(self._buf))

    def __len__(self) -> int:
        return len(self._buf)


def truncation_bound(model, ctrl, k: int, d_bound: float, extra: int = 5000) -> float:
    """Worst-case contribution of impulse-response samples beyond ``k``."""
    s = build_sensitivity(model, ctrl, k + extra)
    return float(d_bound * np.sum(np.abs(s.g[k:])))
