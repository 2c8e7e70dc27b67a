"""Closed-form one-step D-optimal input perturbation.

Maximizing ``psi^T R psi`` over an interval, where only the first entry of
``psi`` depends on ``d`` (linearly, with unit slope), is a convex quadratic
in ``d``; its maximum sits at whichever endpoint is farther from the
vertex ``d_m``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .sensitivity import ConstraintContext, Limits


@dataclass(frozen=True)
class DesignInputs:
    R11: float
    R12: np.ndarray
    xi: np.ndarray
    u_hat: float
    bounds: ConstraintContext

    def __post_init__(self):
        if not self.R11 > 0:
            raise ValueError(f"R11 must be positive, got {self.R11}")
        if np.shape(self.R12) != np.shape(self.xi):
            raise ValueError("R12 and xi must have the same length")


@dataclass(frozen=True)
class Diagnostics:
    d_m: float
    d_lo: float
    d_hi: float
    branch: str  # "lower" or "upper"
    output_active: bool
    feasible: bool
    degenerate: bool
    projected: bool


def compute_u_hat(u_t: float, tau_history: Sequence[float], c_hat: Sequence[float]) -> float:
    """``u_t - c_1 tau_t - ... - c_nc tau_{t-nc+1}``."""
    return float(u_t - np.dot(np.asarray(c_hat, dtype=float), np.asarray(tau_history, dtype=float)))


def design_step(
    inputs: DesignInputs, limits: Limits | None = None
) -> tuple[float, Diagnostics]:
    """Optimal perturbation and a record of how it was chosen.

    Ties (vertex exactly at the midpoint) go to the upper endpoint. When
    ``limits`` is given, ``output_active`` reports whether the chosen
    endpoint came from the output constraint rather than the input bound.
    """
    ctx = inputs.bounds
    values = (inputs.R11, inputs.u_hat, ctx.d_lo, ctx.d_hi)
    if any(math.isnan(v) for v in values) or np.any(np.isnan(inputs.xi)) or np.any(
        np.isnan(inputs.R12)
    ):
        raise ValueError(f"NaN in design inputs: {inputs}")
    d_m = -float(np.dot(inputs.R12, inputs.xi)) / inputs.R11 - inputs.u_hat
    if d_m > 0.5 * (ctx.d_lo + ctx.d_hi):
        d_star, branch = ctx.d_lo, "lower"
    else:
        d_star, branch = ctx.d_hi, "upper"
    if limits is None:
        active = False
    elif branch == "lower":
        active = d_star > limits.d_min
    else:
        active = d_star < limits.d_max
    diag = Diagnostics(
        d_m, ctx.d_lo, ctx.d_hi, branch, active, ctx.feasible, ctx.degenerate, ctx.projected
    )
    return d_star, diag


def design_inputs(est, R: np.ndarray, u_t: float, bounds: ConstraintContext) -> DesignInputs:
    """Split the next gradient of ``est`` into its known parts.

    Everything in ``psi_{t+1}`` except its first entry is fixed before
    ``d_t`` is chosen; the regressor is built with that entry zeroed and the
    first entry is replaced by ``u_hat`` (so that ``tau_{t+1} = u_hat + d``).
    """
    psi_known = est.filtered(est.regressor(0.0))
    u_hat = compute_u_hat(u_t, est.tau_history, est.c_hat)
    return DesignInputs(float(R[0, 0]), R[0, 1:], psi_known[1:], u_hat, bounds)


def objective(R: np.ndarray, psi: np.ndarray) -> float:
    """``psi^T R psi``; larger means a smaller covariance determinant."""
    return float(psi @ R @ psi)
