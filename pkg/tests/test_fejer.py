import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from fejerlab import fejer, graph_core as gc
from fejerlab.fejer import FejerIntegralSpec, UnreliableWarning

COS2 = fejer.cosine_band([0.0, 1.0])  # 2 cos(lambda)
AR = fejer.ar1(0.5)


def mu_integral(func):
    """Normalised-measure integral over the torus by adaptive quadrature."""
    val, _ = integrate.quad(func, -np.pi, np.pi, limit=200)
    return val / (2 * np.pi)


# ------------------------------------------------------------ Fourier / Toeplitz

def test_fourier_coefficients_examples():
    c = fejer.fourier_coefficients(fejer.constant(3.0), 4).values
    np.testing.assert_allclose(c, [0, 0, 0, 0, 3, 0, 0, 0, 0], atol=1e-14)
    c = fejer.fourier_coefficients(COS2, 3).values
    np.testing.assert_allclose(c, [0, 0, 1, 0, 1, 0, 0], atol=1e-14)


def test_fourier_coefficients_ar1_closed_form():
    tab = fejer.fourier_coefficients(AR, 6)
    for k in range(-6, 7):
        assert tab.coef(k) == pytest.approx(0.5 ** abs(k) / 0.75, abs=1e-12)
    with pytest.raises(IndexError):
        tab.coef(7)


def test_fourier_conjugate_symmetry_for_real_symbol():
    f = fejer.SpectralSymbol(lambda x: 1 + np.sin(x) + 0.3 * np.cos(2 * x), even=False)
    tab = fejer.fourier_coefficients(f, 5)
    np.testing.assert_allclose(tab.values, np.conj(tab.values[::-1]), atol=1e-14)


def test_fourier_line_matches_quad():
    f = fejer.gaussian_bump(1.0)
    tab = fejer.fourier_coefficients(f, 4, step=0.5)
    for k in range(5):
        expected = math.sqrt(2 * math.pi) * math.exp(-(0.5 * k) ** 2 / 2)
        assert tab.coef(k).real == pytest.approx(expected, abs=1e-8)  # band-limit truncation


def test_toeplitz_examples():
    np.testing.assert_allclose(fejer.toeplitz_matrix(fejer.constant(2.5), 5), 2.5 * np.eye(5), atol=1e-14)
    band = np.diag(np.ones(3), 1) + np.diag(np.ones(3), -1)
    np.testing.assert_allclose(fejer.toeplitz_matrix(COS2, 4), band, atol=1e-14)
    m = fejer.toeplitz_matrix(AR, 12)
    np.testing.assert_allclose(m, m.conj().T)
    with pytest.raises(MemoryError):
        fejer.toeplitz_matrix(AR, 10, max_size=9)


def test_toeplitz_two_dimensional_constant():
    c = fejer.constant(2.0, fejer.SpectralDomain("torus", 2))
    np.testing.assert_allclose(fejer.toeplitz_matrix(c, 3), 2 * np.eye(9), atol=1e-13)


def test_toeplitz_line_nystrom():
    f = fejer.gaussian_bump(1.0)
    m = fejer.toeplitz_matrix(f, 8.0, nystrom=64)
    h = 8.0 / 64
    assert m.shape == (64, 64)
    assert m[0, 0] == pytest.approx(math.sqrt(2 * math.pi) * h, rel=1e-9)
    assert m[3, 0] == pytest.approx(math.sqrt(2 * math.pi) * math.exp(-(3 * h) ** 2 / 2) * h, rel=1e-9)


def test_trace_product_examples():
    consts = [fejer.constant(c) for c in (1.5, 2.0, -3.0)]
    assert fejer.trace_product(consts, 7) == pytest.approx(7 * 1.5 * 2.0 * -3.0)
    for N in (3, 8, 17):
        assert fejer.trace_product([COS2, COS2], N) == pytest.approx(2 * (N - 1))
    syms = [AR, COS2, fejer.ar1(-0.3)]
    a = fejer.trace_product(syms, 9)
    assert fejer.trace_product(syms[1:] + syms[:1], 9) == pytest.approx(a, rel=1e-12)
    with pytest.raises(ValueError):
        fejer.trace_product([AR, fejer.gaussian_bump()], 4)


# ------------------------------------------------------------ Fejér integrals

@pytest.mark.parametrize("syms", [[COS2, COS2], [AR, AR], [AR, fejer.cosine_band([1.0, 0.4, 0.2])]])
def test_cycle2_trace_equals_spectral(syms):
    M = gc.cycle_graph(2)
    q = fejer.fejer_graph_integral(FejerIntegralSpec(M, syms, 8), points=128)
    assert q == pytest.approx(fejer.trace_product(syms, 8), rel=1e-2)


def test_cycle3_trace_equals_spectral():
    syms = [AR, COS2, fejer.cosine_band([0.5, 0.25])]
    M = gc.cycle_graph(3)
    q = fejer.fejer_graph_integral(FejerIntegralSpec(M, syms, 8), points=64)
    assert q == pytest.approx(fejer.trace_product(syms, 8), rel=1e-2)


def test_constants_give_power_of_T():
    M = gc.cycle_graph(3)
    syms = [fejer.constant(c) for c in (2.0, 0.5, 3.0)]
    for T in (4, 5):
        assert fejer.fejer_graph_integral(FejerIntegralSpec(M, syms, T)) == pytest.approx(3.0 * T)


def test_tree_limit_is_product_at_zero():
    tree = gc.IncidenceLikeMatrix.from_edges(3, [(0, 1), (1, 2)])
    syms = [fejer.cosine_band([1.0, 0.3]), fejer.cosine_band([0.5, 0.2])]
    target = fejer.limit_integral(gc.cycle_coordinates(tree).mstar_array(), syms)
    assert target == pytest.approx(1.6 * 0.9)
    errs = []
    for T in (8, 16, 32):
        J = fejer.fejer_graph_integral(FejerIntegralSpec(tree, syms, T))
        errs.append(abs(J / T - target))
    assert errs[0] > errs[1] > errs[2]


def test_row_deletion_flag_recorded():
    spec = FejerIntegralSpec(gc.cycle_graph(3), [AR] * 3, 4)
    assert spec.row_deletion_ok
    with pytest.raises(ValueError):
        FejerIntegralSpec(gc.cycle_graph(3), [AR] * 2, 4)


def test_quadrature_cap():
    M = gc.IncidenceLikeMatrix.from_edges(2, [(0, 1)] * 7)
    with pytest.raises(ValueError):
        fejer.fejer_graph_integral(FejerIntegralSpec(M, [AR] * 7, 4))


# ------------------------------------------------------------ convolutions and limits

def test_graph_convolution_cycle2_at_zero():
    coords = gc.cycle_coordinates(gc.cycle_graph(2))
    h0 = fejer.graph_convolution(coords.mstar_array(), coords.n_array(), [AR, AR], [0.0], points=512)
    assert h0 == pytest.approx(mu_integral(lambda x: AR(np.array(x)) ** 2), rel=1e-10)


def test_graph_convolution_bounded_by_norms_and_continuous():
    coords = gc.cycle_coordinates(gc.cycle_graph(3))
    syms = [AR, COS2, fejer.ar1(-0.4)]
    bound = math.prod(s.lp_norm(math.inf) for s in syms)
    prev = None
    for u in np.linspace(-2, 2, 9):
        h = fejer.graph_convolution(coords.mstar_array(), coords.n_array(), syms, [u, 0.5 * u], points=256)
        assert abs(h) <= bound
    for delta in (1e-1, 1e-2, 1e-3):
        h1 = fejer.graph_convolution(coords.mstar_array(), coords.n_array(), syms, [0.3 + delta, 0.1])
        h0 = fejer.graph_convolution(coords.mstar_array(), coords.n_array(), syms, [0.3, 0.1])
        if prev is not None:
            assert abs(h1 - h0) < prev
        prev = abs(h1 - h0)


def test_graph_convolution_flags_violation():
    coords = gc.cycle_coordinates(gc.cycle_graph(2))
    # z = (5/6, 5/6) sums past the single cycle's rank
    heavy = fejer.SpectralSymbol(lambda x: np.maximum(np.abs(x), 1e-8) ** -0.4, declared_p=1.2)
    with pytest.warns(UnreliableWarning):
        fejer.graph_convolution(coords.mstar_array(), coords.n_array(), [heavy, heavy], [0.0], points=64)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        fejer.graph_convolution(coords.mstar_array(), coords.n_array(), [AR, AR], [0.0], points=64)


def test_limit_integral_examples():
    mstar = gc.cycle_coordinates(gc.cycle_graph(3)).mstar_array()
    syms = [AR, COS2, fejer.ar1(-0.3)]
    direct = mu_integral(lambda x: AR(np.array(x)) * 2 * np.cos(x) * syms[2](np.array(x)))
    assert fejer.limit_integral(mstar, syms) == pytest.approx(direct, rel=1e-9)
    consts = [fejer.constant(c) for c in (2.0, 3.0, 0.5)]
    assert fejer.limit_integral(mstar, consts) == pytest.approx(3.0)


def test_two_by_four_matrix_constant_is_half():
    # vertex (0,0,1,1): int int f3(x1+x2) f4(x1-x2) dx = ||f3||_1 ||f4||_1 / 2
    M = gc.IncidenceLikeMatrix(((1, 0, 1, 1), (0, 1, 1, -1)), gc.GENERAL)
    one = fejer.constant(1.0, "line")
    g = fejer.gaussian_bump(1.0)
    g2 = fejer.gaussian_bump(0.7, centre=0.3)
    val = fejer.limit_integral(M.to_array(), [one, one, g, g2], points=160, half_width=12)
    K = gc.holder_constant_at_vertex(M, [2, 3])
    assert val == pytest.approx(K * g.lp_norm(1) * g2.lp_norm(1), rel=1e-6)
    # at a unimodular vertex the constant is 1
    val = fejer.limit_integral(M.to_array(), [g, g2, one, one], points=160, half_width=12)
    assert val == pytest.approx(g.lp_norm(1) * g2.lp_norm(1), rel=1e-6)


def test_hybl_inequality_at_vertices_for_bumps():
    M = gc.IncidenceLikeMatrix(((1, 0, 1, 1), (0, 1, 1, -1)), gc.GENERAL)
    bumps = [fejer.gaussian_bump(w, c, p=2.0) for w, c in [(0.8, 0.1), (1.2, -0.2), (0.6, 0.0), (1.0, 0.4)]]
    val = fejer.limit_integral(M.to_array(), bumps, points=160, half_width=12)
    for v in gc.pcp_vertices(M, "C3-lebesgue"):
        K = gc.holder_constant_at_vertex(M, [j for j in range(4) if v[j]])
        bound = K * math.prod(b.lp_norm(1 if zj else math.inf) for b, zj in zip(bumps, v))
        assert abs(val) <= bound * (1 + 1e-6)


def test_unimodular_hybl_torus_constant_one():
    # cycle graph on the torus, z = (1/2, 1/2): |int f g| <= ||f||_2 ||g||_2
    mstar = gc.cycle_coordinates(gc.cycle_graph(2)).mstar_array()
    f, g = AR, fejer.cosine_band([1.0, 0.45])
    val = abs(fejer.limit_integral(mstar, [f, g]))
    assert val <= f.lp_norm(2) * g.lp_norm(2)


# ------------------------------------------------------------ Szegő checks

def test_szego_ar1_cycle2():
    rep = fejer.szego_limit_check(gc.cycle_graph(2), [AR, AR], [256, 1024, 4096])
    target = mu_integral(lambda x: AR(np.array(x)) ** 2)
    assert rep.rows[0][2] == pytest.approx(target, rel=1e-10)
    assert rep.rel_errors[-1] < 0.05
    assert rep.tail_monotone()
    assert rep.to_csv().splitlines()[0] == "T,value,target,rel_error"


def test_szego_constants_exact():
    rep = fejer.szego_limit_check(gc.cycle_graph(3), [fejer.constant(c) for c in (2.0, 1.5, -1.0)], [4, 9, 16])
    assert max(rep.rel_errors) < 1e-12


def test_szego_three_cycle_mixed():
    syms = [AR, COS2, fejer.ar1(-0.3)]
    rep = fejer.szego_limit_check(gc.cycle_graph(3), syms, [64, 256, 1024])
    assert rep.rel_errors[-1] < 0.05 and rep.tail_monotone()


def test_szego_non_cycle_graph_uses_quadrature():
    # two vertices joined by three parallel edges: co = 1, C = 2
    M = gc.IncidenceLikeMatrix.from_edges(2, [(0, 1), (0, 1), (1, 0)])
    syms = [fejer.cosine_band([1.0, 0.3])] * 3
    rep = fejer.szego_limit_check(M, syms, [4, 8, 16], points=64)
    assert rep.tail_monotone()
    assert rep.rel_errors[-1] < 0.1


def test_sub_critical_normalisation_decreases():
    # z above the polytope: alpha > co and J_T / T^alpha shrinks for bounded symbols
    M = gc.cycle_graph(2)
    z = [1, 1]
    alpha = gc.alpha_exponent(M, z)
    assert alpha > gc.corank(M)
    vals = [fejer.trace_product([COS2, COS2], T) / T ** float(alpha) for T in (8, 32, 128)]
    assert vals[0] > vals[1] > vals[2]


# ------------------------------------------------------------ cumulants and Hermite sums

def test_gaussian_qf_cumulant_examples():
    B, F = fejer.toeplitz_matrix(AR, 6), fejer.toeplitz_matrix(COS2, 6)
    P = B @ F
    assert fejer.gaussian_qf_cumulant(2, AR, COS2, 6) == pytest.approx(2 * np.trace(P @ P))
    one = fejer.constant(1.0)
    Fm = fejer.toeplitz_matrix(AR, 7)
    assert fejer.gaussian_qf_cumulant(4, one, AR, 7) == pytest.approx(8 * 6 * np.trace(np.linalg.matrix_power(Fm, 4)))
    C = fejer.toeplitz_matrix(COS2, 5)
    assert fejer.gaussian_qf_cumulant(3, COS2, COS2, 5) == pytest.approx(8 * np.trace(np.linalg.matrix_power(C @ C, 3)))
    with pytest.raises(ValueError):
        fejer.gaussian_qf_cumulant(1, AR, AR, 4)


def test_hermite_sum_variance_examples():
    assert fejer.hermite_sum_variance(fejer.constant(1.7), 3) == pytest.approx(1.7 ** 3)
    assert fejer.hermite_sum_variance(AR, 2) == pytest.approx(mu_integral(lambda x: AR(np.array(x)) ** 2), rel=1e-10)
    f = fejer.cosine_band([1.0, 0.4])
    # f^{*3}(0) = sum_k f_hat(k)^3 = 1 + 2 * 0.4^3
    assert fejer.hermite_sum_variance(f, 3) == pytest.approx(1 + 2 * 0.4 ** 3)
    grid = fejer.torus_grid(64)
    vals = f(grid)
    conv = np.array([[vals[i] * vals[j] * f(np.array(-grid[i] - grid[j])) for j in range(64)] for i in range(64)])
    assert fejer.hermite_sum_variance(f, 3) == pytest.approx(conv.mean(), rel=1e-10)


def test_hermite_sum_variance_line():
    g = fejer.gaussian_bump(1.0, p=2.0)
    # (g * g)(0) = sqrt(pi) for exp(-x^2/2)
    assert fejer.hermite_sum_variance(g, 2, points=1 << 14, half_width=30) == pytest.approx(math.sqrt(math.pi), rel=1e-6)


def test_hermite_sum_variance_warns_outside_condition():
    heavy = fejer.SpectralSymbol(lambda x: np.maximum(np.abs(x), 1e-8) ** -0.4, declared_p=1.2)
    with pytest.warns(UnreliableWarning):
        fejer.hermite_sum_variance(heavy, 3, points=1 << 10)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        fejer.hermite_sum_variance(fejer.constant(1.0), 3)


# ------------------------------------------------------------ serialisation

def test_spec_from_dict():
    spec = fejer.spec_from_dict({"edges": [[0, 1], [1, 0]], "symbols": [{"family": "ar1", "phi": 0.5}], "T": 16})
    assert spec.M.n_cols == 2 and spec.T == 16
    spec = fejer.spec_from_dict({"matrix": [[1, 0, 1, 1], [0, 1, 1, -1]],
                                 "symbols": [{"family": "constant", "c": 1.0}] * 4, "T": 4})
    assert spec.M.kind == gc.GENERAL
    with pytest.raises(ValueError):
        fejer.symbol_from_dict({"family": "nope"})
    with pytest.raises(ValueError):
        fejer.symbol_from_dict({"family": "ar1"})
    assert fejer.symbol_from_dict(AR.to_dict())(np.array(0.3)) == pytest.approx(AR(np.array(0.3)))


def test_symbol_validation():
    for s in (AR, COS2, fejer.frbm(0.2, 1.0), fejer.gaussian_bump(1.0)):
        s.validate()
    odd = fejer.SpectralSymbol(lambda x: np.sin(x), even=True)
    with pytest.raises(ValueError):
        odd.validate()


@given(st.floats(-0.9, 0.9), st.integers(2, 24))
def test_trace_cyclic_and_real(phi, T):
    syms = [fejer.ar1(phi), COS2, fejer.cosine_band([0.3, -0.2, 0.1])]
    vals = [fejer.trace_product(syms[i:] + syms[:i], T) for i in range(3)]
    assert vals[1] == pytest.approx(vals[0], rel=1e-9, abs=1e-9)
    assert vals[2] == pytest.approx(vals[0], rel=1e-9, abs=1e-9)
