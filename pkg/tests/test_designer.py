import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from armaxdesign.designer import (
    DesignInputs,
    compute_u_hat,
    design_inputs,
    design_step,
    objective,
)
from armaxdesign.rpem import Rpem
from armaxdesign.sensitivity import ConstraintContext, Limits


def box(lo=-0.3, hi=0.3):
    return ConstraintContext(1.0, 0.0, lo, hi)


def random_instance(rng, n=5):
    a = rng.standard_normal((n, n))
    R = a @ a.T + 0.1 * np.eye(n)
    xi = rng.standard_normal(n - 1)
    u_hat = rng.standard_normal()
    lo, hi = np.sort(rng.uniform(-1.0, 1.0, 2))
    return R, xi, u_hat, lo, hi


def grid_quadratic(R, xi, u_hat, ds):
    psis = np.column_stack((u_hat + ds, np.broadcast_to(xi, (ds.size, xi.size))))
    return np.einsum("ij,jk,ik->i", psis, R, psis)


def grid_det(R, xi, u_hat, ds):
    psis = np.column_stack((u_hat + ds, np.broadcast_to(xi, (ds.size, xi.size))))
    info = np.linalg.inv(R)[None] + psis[:, :, None] * psis[:, None, :]
    return 1.0 / np.linalg.det(info)


def test_u_hat_examples():
    assert compute_u_hat(1.5, [], []) == 1.5
    assert compute_u_hat(1.0, [5.0], [0.2]) == pytest.approx(0.0)


def test_u_hat_matches_realized_gradient(rng):
    est = Rpem((3, 3, 2))
    for _ in range(30):
        est.step(rng.standard_normal(), rng.standard_normal())
    est.theta[-2:] = [0.3, -0.1]
    R = np.eye(est.dim)
    for d in (-0.3, 0.0, 0.17):
        u_t = 0.42
        inputs = design_inputs(est, R, u_t, box())
        psi = est.filtered(est.regressor(u_t + d))
        assert abs(psi[0] - (inputs.u_hat + d)) < 1e-12
        np.testing.assert_allclose(psi[1:], inputs.xi, atol=1e-15)


def test_tie_goes_to_upper():
    d, diag = design_step(DesignInputs(1.0, np.zeros(2), np.zeros(2), 0.0, box()))
    assert d == 0.3 and diag.d_m == 0.0 and diag.branch == "upper"


def test_far_vertex_picks_opposite_end():
    d, diag = design_step(DesignInputs(1.0, np.zeros(2), np.zeros(2), 10.0, box()))
    assert diag.d_m == -10.0 and d == 0.3
    d, _ = design_step(DesignInputs(1.0, np.zeros(2), np.zeros(2), -10.0, box()))
    assert d == -0.3


def test_nan_rejected():
    with pytest.raises(ValueError):
        design_step(DesignInputs(1.0, np.zeros(1), np.array([np.nan]), 0.0, box()))
    with pytest.raises(ValueError):
        DesignInputs(0.0, np.zeros(1), np.zeros(1), 0.0, box())


def test_output_activity_flag():
    lim = Limits.symmetric(0.3, 0.05)
    _, diag = design_step(DesignInputs(1.0, np.zeros(1), np.zeros(1), 5.0, box(-0.1, 0.1)), lim)
    assert diag.output_active
    _, diag = design_step(DesignInputs(1.0, np.zeros(1), np.zeros(1), 5.0, box(-0.1, 0.3)), lim)
    assert not diag.output_active


def test_closed_form_beats_grid(rng):
    grid = 100_000
    for _ in range(1000):
        R, xi, u_hat, lo, hi = random_instance(rng)
        d, _ = design_step(DesignInputs(R[0, 0], R[0, 1:], xi, u_hat, box(lo, hi)))
        ds = np.linspace(lo, hi, grid)
        best = grid_quadratic(R, xi, u_hat, np.array([d]))[0]
        assert best >= grid_quadratic(R, xi, u_hat, ds).max() - 1e-10


def test_closed_form_minimizes_determinant(rng):
    for _ in range(100):
        R, xi, u_hat, lo, hi = random_instance(rng)
        d, _ = design_step(DesignInputs(R[0, 0], R[0, 1:], xi, u_hat, box(lo, hi)))
        ds = np.linspace(lo, hi, 10_001)
        assert grid_det(R, xi, u_hat, np.array([d]))[0] <= grid_det(R, xi, u_hat, ds).min() + 1e-12


@given(
    seed=st.integers(0, 2**32 - 1),
    scale=st.floats(1e-6, 1e6),
)
def test_scale_invariance_and_bang_bang(seed, scale):
    rng = np.random.default_rng(seed)
    R, xi, u_hat, lo, hi = random_instance(rng)
    d1, _ = design_step(DesignInputs(R[0, 0], R[0, 1:], xi, u_hat, box(lo, hi)))
    Rs = scale * R
    d2, _ = design_step(DesignInputs(Rs[0, 0], Rs[0, 1:], xi, u_hat, box(lo, hi)))
    assert d1 == d2
    assert d1 in (lo, hi)


@given(seed=st.integers(0, 2**32 - 1))
def test_never_worse_than_no_perturbation(seed):
    rng = np.random.default_rng(seed)
    R, xi, u_hat, _, _ = random_instance(rng)
    lo, hi = -rng.uniform(0, 1), rng.uniform(0, 1)
    d, _ = design_step(DesignInputs(R[0, 0], R[0, 1:], xi, u_hat, box(lo, hi)))
    with_d = objective(R, np.concatenate(([u_hat + d], xi)))
    without = objective(R, np.concatenate(([u_hat], xi)))
    assert with_d >= without - 1e-12
