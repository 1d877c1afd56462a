import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from fejerlab import kernels as kn

finite_lam = st.floats(-50, 50, allow_nan=False)


# ------------------------------------------------------------ examples

def test_dirichlet_at_zero():
    assert kn.dirichlet(10, 0.0) == 11
    assert kn.dirichlet(7, 0.0, "line") == 7
    assert kn.dirichlet(5, np.zeros(2), "line", d=2) == pytest.approx(25)
    assert kn.dirichlet(6, 2 * np.pi) == pytest.approx(7)


def test_dirichlet_matches_exponential_sum():
    lam = np.linspace(-3, 3, 41)
    for T in (4, 6):
        direct = sum(np.exp(1j * t * lam) for t in range(-T // 2, T // 2 + 1)).real
        np.testing.assert_allclose(kn.dirichlet(T, lam), direct, atol=1e-12)


def test_dirichlet_line_is_transform_of_window():
    T, lam = 3.0, 0.7
    val, _ = integrate.quad(lambda t: math.cos(t * lam), -T / 2, T / 2)
    assert kn.dirichlet(T, lam, "line") == pytest.approx(val, rel=1e-12)


def test_fejer_multi_examples():
    T = 16.0
    assert kn.fejer_multi(T, [0.0], 2, "line") == pytest.approx(T / (2 * np.pi))
    zero = 2 * np.pi / (T + 1)
    assert kn.fejer_multi(int(T), [zero, 0.3], 3) == pytest.approx(0, abs=1e-12)
    u = np.array([0.2, -0.5])
    assert kn.fejer_multi(9, u, 3) == pytest.approx(kn.fejer_multi(9, u[::-1], 3))
    with pytest.raises(ValueError):
        kn.fejer_multi(9, [0.1], 1)


def test_kernel_norm_p2():
    for T in (5, 16, 33):
        assert kn.kernel_norm(T, 2) ** 2 == pytest.approx(T, rel=1e-12)
        assert kn.discrete_norm_power_exact(T, 2) == T
    for T in (4.0, 64.0):
        assert kn.kernel_norm(T, 2, "line") ** 2 == pytest.approx(2 * np.pi * T, rel=1e-6)


def test_kernel_norm_p4_gap_is_order_inverse_square():
    c4 = (2 / np.pi) * kn.sinc_power_integral(4) / 2  # full-line integral halved
    assert c4 == pytest.approx(2 / 3, rel=1e-9)  # int_0^inf sinc^4 = pi/3
    gaps = []
    for T in (64, 256, 1024):
        gaps.append(abs(kn.kernel_norm(T, 4) ** 4 - c4 * T ** 3) / (c4 * T ** 3))
    # exact count (2T^3 + T)/3 gives gap 1/(2T^2)
    np.testing.assert_allclose(gaps, [1 / (2 * T * T) for T in (64, 256, 1024)], rtol=1e-3)
    assert kn.discrete_norm_power_exact(10, 4) == (2 * 1000 + 10) // 3


def test_kernel_norm_errors():
    with pytest.raises(ValueError):
        kn.kernel_norm(10, 1.0, method="closed-form-bound")
    with pytest.raises(ValueError):
        kn.kernel_norm(10, 3, "line", method="exact")
    with pytest.raises(ValueError):
        kn.kernel_norm(10, 2, method="nope")


def test_l1_asymptotic():
    assert kn.dirichlet_l1_asymptotic(1).value == pytest.approx(1.0)
    rows = [kn.dirichlet_l1_asymptotic(2 ** j) for j in (6, 10, 14)]
    ratios = [r.ratio for r in rows]
    assert ratios[0] > ratios[1] > ratios[2] > 1
    # the gap to (4/pi^2) log T settles to a constant
    offsets = [r.value - r.reference for r in rows]
    assert abs(offsets[2] - offsets[1]) < 0.01


def test_kernel_property_examples():
    rep = kn.verify_kernel_property(lambda u: np.cos(u[..., 0]), [64, 256, 1024])
    assert rep.decreasing and rep.converged
    assert rep.deviations[-1] < 0.02
    rep = kn.verify_kernel_property(lambda u: np.ones(u.shape[:-1]), [8, 32])
    assert max(rep.deviations) < 1e-12
    rep = kn.verify_kernel_property(lambda u: u[..., 0], [8, 32])
    assert max(rep.deviations) < 1e-12
    rep = kn.verify_kernel_property(lambda u: np.cos(u[..., 0]) * np.cos(u[..., 1]), [8, 32], n=3)
    assert rep.decreasing
    rep = kn.verify_kernel_property(lambda u: np.exp(-u[..., 0] ** 2), [16.0, 64.0], domain="line")
    assert rep.decreasing and rep.deviations[-1] < 0.05


# ------------------------------------------------------------ properties

@given(st.integers(1, 200), finite_lam)
def test_discrete_kernel_even_bounded_periodic(T, lam):
    v = kn.dirichlet(T, lam)
    assert v == pytest.approx(kn.dirichlet(T, -lam), abs=1e-9)
    assert abs(v) <= T + 1 + 1e-9
    assert v == pytest.approx(kn.dirichlet(T, lam + 2 * np.pi), abs=1e-7 * (T + 1))


@given(st.floats(0.5, 500), finite_lam)
def test_line_kernel_even_bounded(T, lam):
    v = kn.dirichlet(T, lam, "line")
    assert v == pytest.approx(kn.dirichlet(T, -lam, "line"), abs=1e-9)
    assert abs(v) <= T * (1 + 1e-12)


@given(st.integers(2, 300), st.floats(1.1, 6))
def test_quadrature_below_bound(T, p):
    for dom in ("torus", "line"):
        q = kn.kernel_norm(T, p, dom)
        b = kn.kernel_norm(T, p, dom, method="closed-form-bound")
        assert q <= b * (1 + 1e-6)


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_fejer_multi_is_symmetric(a, b):
    v1 = kn.fejer_multi(12, [a, b], 3)
    v2 = kn.fejer_multi(12, [b, a], 3)
    assert v1 == pytest.approx(v2, rel=1e-9, abs=1e-12)
