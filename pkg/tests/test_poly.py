import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from armaxdesign.poly import (
    Polynomial,
    closed_loop_denominator,
    convolve,
    filter_step,
    is_stable,
    lfilter,
)

B = Polynomial([0.0, 0.57, -0.38, 0.118])
M = Polynomial([1.0, -1.0])

coeff_lists = st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=6)


def test_convolve_identity():
    assert convolve(Polynomial.one(), B) == B


def test_convolve_b_with_integrator():
    out = convolve(B, M)
    np.testing.assert_allclose(out.coeffs, [0, 0.57, -0.95, 0.498, -0.118], atol=1e-15)
    assert out.degree == B.degree + M.degree


def test_pure_delays_compose():
    d = Polynomial([0.0, 1.0])
    assert convolve(d, d) == Polynomial([0.0, 0.0, 1.0])


@given(coeff_lists, coeff_lists, coeff_lists)
def test_convolution_commutes_and_associates(p, q, r):
    p, q, r = Polynomial(p), Polynomial(q), Polynomial(r)
    np.testing.assert_allclose(convolve(p, q).coeffs, convolve(q, p).coeffs, atol=1e-12)
    np.testing.assert_allclose(
        convolve(convolve(p, q), r).coeffs, convolve(p, convolve(q, r)).coeffs, atol=1e-9
    )


def test_addition_zero_pads():
    assert Polynomial([1.0]) + Polynomial([0.0, 0.0, 2.0]) == Polynomial([1.0, 0.0, 2.0])


def test_polynomial_is_immutable():
    p = Polynomial([1.0, 2.0])
    with pytest.raises(ValueError):
        p.coeffs[0] = 3.0
    with pytest.raises(AttributeError):
        p.coeffs = np.zeros(2)


def test_pickle_roundtrip():
    import pickle

    p = Polynomial([1.0, -0.5, 0.25])
    assert pickle.loads(pickle.dumps(p)) == p


def test_closed_loop_denominator(model, ctrl):
    a_tilde = closed_loop_denominator(model, ctrl)
    np.testing.assert_allclose(
        a_tilde.coeffs, [1, -1.90300, 1.34167, -0.61877, 0.18356], atol=1e-5
    )
    assert a_tilde.is_monic


def test_closed_loop_denominator_without_feedback(model, ctrl):
    no_fb = type(ctrl)(Polynomial([0.0]), ctrl.m)
    assert closed_loop_denominator(model, no_fb) == convolve(model.a, ctrl.m)
    zero_plant = type(model)(Polynomial([0.0, 0.0]), model.a, model.c)
    np.testing.assert_array_equal(
        closed_loop_denominator(zero_plant, ctrl).coeffs,
        convolve(model.a, ctrl.m).coeffs,
    )


@given(
    st.lists(st.floats(-3, 3), min_size=1, max_size=4),
    st.lists(st.floats(-3, 3), min_size=1, max_size=3),
    st.lists(st.floats(-3, 3), min_size=1, max_size=3),
)
def test_closed_loop_denominator_is_monic(a, b, l):
    model = type("M", (), {"a": Polynomial.monic(a), "b": Polynomial.delayed(b)})
    ctrl = type("K", (), {"l": Polynomial(l), "m": Polynomial.monic([-1.0])})
    assert closed_loop_denominator(model, ctrl).coeffs[0] == 1.0


@pytest.mark.parametrize(
    "coeffs, expected",
    [([1, -0.5], True), ([1, -1], False), ([1.0], True), ([1, 0, 0.81], True), ([1, 0, 1.0], False)],
)
def test_is_stable_examples(coeffs, expected):
    assert is_stable(Polynomial(coeffs)) is expected


def test_closed_loop_of_reference_example_is_stable(model, ctrl):
    assert is_stable(closed_loop_denominator(model, ctrl))


@settings(max_examples=300)
@given(
    st.lists(
        st.tuples(st.floats(0.05, 1.6), st.floats(0, np.pi)), min_size=1, max_size=3
    ).filter(lambda rs: all(abs(r - 1.0) > 1e-3 for r, _ in rs))
)
def test_is_stable_agrees_with_roots(roots):
    # real polynomial of degree <= 3 from a drawn root set (complex roots in pairs)
    zs = []
    for r, ang in roots:
        if len(zs) + 2 <= 3 and ang > 0.1:
            z = r * np.exp(1j * ang)
            zs += [z, np.conj(z)]
        elif len(zs) < 3:
            zs.append(r if ang < np.pi / 2 else -r)
    p = Polynomial(np.real(np.poly(zs)))
    assert is_stable(p) == bool(np.all(np.abs(zs) < 1.0))


def test_filter_step_examples():
    assert filter_step(Polynomial([0, 1]), Polynomial([1]), [0.0, 3.0], []) == 3.0
    assert filter_step(Polynomial([1]), Polynomial([1, -0.9]), [0.0], [1.0]) == pytest.approx(0.9)


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=8))
def test_unit_impulse_reproduces_fir_coefficients(b):
    b = Polynomial(b)
    x = np.zeros(len(b) + 3)
    x[0] = 1.0
    out = lfilter(b, Polynomial.one(), x)
    np.testing.assert_array_equal(out[: len(b)], b.coeffs)
    np.testing.assert_array_equal(out[len(b) :], 0.0)


def test_lfilter_matches_scipy(rng):
    from scipy import signal

    b, a = Polynomial([0.2, 0.5, -0.1]), Polynomial([1.0, -0.6, 0.2])
    x = rng.standard_normal(200)
    np.testing.assert_allclose(lfilter(b, a, x), signal.lfilter(b.coeffs, a.coeffs, x), atol=1e-12)
