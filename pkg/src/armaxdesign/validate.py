"""Quick numerical self-checks, each against an independent route."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .designer import DesignInputs, design_step, objective
from .harness.config import ExperimentConfig, reference_controller, reference_system
from .harness.experiment import noise_sequence, run_single
from .plant import ClosedLoop, theta_vector
from .poly import Polynomial, lfilter
from .rpem import Rpem, update_R
from .sensitivity import ConstraintContext, build_sensitivity


def check_sensitivity_equivalence(k: int = 50) -> float:
    model, ctrl = reference_system(), reference_controller()
    s = build_sensitivity(model, ctrl, k)
    impulse = np.zeros(k + 1)
    impulse[0] = 1.0
    direct = lfilter(s.b_tilde, s.a_tilde, impulse)[1:]
    loop = ClosedLoop(model, ctrl)
    measured = []
    for t in range(k):
        _, delta, _ = loop.step(0.0, 1.0 if t == 0 else 0.0, 0.0)
        measured.append(delta)
    return max(np.max(np.abs(direct - s.g)), np.max(np.abs(np.array(measured) - s.g)))


def check_twin_identity(steps: int = 1000) -> float:
    loop = ClosedLoop(reference_system(), reference_controller())
    e = noise_sequence(1, steps, 0.01)
    return max(abs(loop.step(1.0, 0.0, e[t])[1]) for t in range(steps))


def check_determinant_lemma(trials: int = 200, seed: int = 0) -> float:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        a = rng.standard_normal((5, 5))
        R = a @ a.T + 0.5 * np.eye(5)
        psi = rng.standard_normal(5)
        lhs = np.linalg.det(np.linalg.inv(update_R(R, psi)))
        rhs = np.linalg.det(np.linalg.inv(R)) * (1 + psi @ R @ psi)
        worst = max(worst, abs(lhs - rhs) / abs(rhs))
    return worst


def check_closed_form(trials: int = 100, grid: int = 10_001, seed: int = 0) -> float:
    """Largest amount by which a grid point beats the closed-form choice."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        n = 5
        a = rng.standard_normal((n, n))
        R = a @ a.T + 0.1 * np.eye(n)
        xi = rng.standard_normal(n - 1)
        u_hat = rng.standard_normal()
        lo, hi = np.sort(rng.uniform(-1, 1, 2))
        ctx = ConstraintContext(1.0, 0.0, lo, hi)
        d, _ = design_step(DesignInputs(R[0, 0], R[0, 1:], xi, u_hat, ctx))
        best = objective(R, np.concatenate(([u_hat + d], xi)))
        ds = np.linspace(lo, hi, grid)
        psis = np.column_stack((u_hat + ds, np.tile(xi, (grid, 1))))
        vals = np.einsum("ij,jk,ik->i", psis, R, psis)
        worst = max(worst, float(vals.max() - best))
    return worst


def check_gradient(n: int = 300, h: float = 1e-6, seed: int = 0) -> float:
    """Largest relative error of the recursive gradient vs central differences."""
    model = reference_system()
    orders = model.orders
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(n)
    y = lfilter(model.b, model.a, u) + lfilter(model.c, model.a, 0.1 * rng.standard_normal(n))
    theta = theta_vector(model) + 0.05 * rng.standard_normal(sum(orders))

    def residuals(th):
        est = Rpem(orders)
        est.theta = th.copy()
        return [est.step(y[t], u[t - 1], update=False)[1:] for t in range(1, n)]

    psi_rec = np.array([p for _, p in residuals(theta)])
    fd = np.empty_like(psi_rec)
    for i in range(theta.size):
        tp, tm = theta.copy(), theta.copy()
        tp[i] += h
        tm[i] -= h
        ep = np.array([e for e, _ in residuals(tp)])
        em = np.array([e for e, _ in residuals(tm)])
        fd[:, i] = -(ep - em) / (2 * h)
    scale = np.maximum(np.abs(fd), 1e-3)
    return float(np.max(np.abs(psi_rec - fd) / scale))


def check_determinism(steps: int = 600) -> float:
    cfg = ExperimentConfig(steps=steps, warm_up=200, yd_min=-0.1, yd_max=0.1)
    a, b = run_single(cfg, 7), run_single(cfg, 7)
    same = np.array_equal(a.delta, b.delta) and np.array_equal(a.theta, b.theta)
    return 0.0 if same else 1.0


CHECKS: list[tuple[str, Callable[[], float], float]] = [
    ("sensitivity impulse response vs direct filter and twin loop", check_sensitivity_equivalence, 1e-10),
    ("twin loop gives zero perturbation for d = 0", check_twin_identity, 1e-12),
    ("matrix determinant lemma after rank-one update", check_determinant_lemma, 1e-8),
    ("closed-form design vs grid search", check_closed_form, 1e-10),
    ("recursive gradient vs finite differences", check_gradient, 1e-4),
    ("bit-identical reruns", check_determinism, 0.0),
]


def run_checks(echo=print) -> bool:
    ok = True
    for name, fn, tol in CHECKS:
        value = fn()
        passed = value <= tol
        ok &= passed
        echo(f"{'PASS' if passed else 'FAIL'}  {name}: {value:.3g} (tol {tol:g})")
    return ok
