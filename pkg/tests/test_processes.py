import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate, special, stats

from fejerlab import processes as P


# ------------------------------------------------------------ innovations

def test_gamma_cumulants_match_scipy_moments():
    inn = P.Innovation("gamma", shape=2.5, rate=1.5)
    mean, var, skew, kurt = stats.gamma(2.5, scale=1 / 1.5).stats(moments="mvsk")
    assert inn.cumulant(2) == pytest.approx(var)
    assert inn.cumulant(3) == pytest.approx(skew * var ** 1.5)
    assert inn.cumulant(4) == pytest.approx(kurt * var ** 2)


def test_gamma_cumulants_scale_with_cell_length():
    inn = P.Innovation("gamma", shape=2.0, rate=1.0)
    for k in (2, 3, 4, 5):
        assert inn.cumulant(k, h=0.25) == pytest.approx(0.25 * inn.cumulant(k))


@pytest.mark.parametrize("p", [0.5, 0.2, 0.7])
def test_two_point_cumulants_against_bernoulli(p):
    inn = P.Innovation("two-point", variance=2.0, p=p)
    a, b = inn._two_point_atoms()
    width = a + b
    q = 1 - p
    # Bernoulli cumulants scaled by the atom spacing
    assert inn.cumulant(2) == pytest.approx(width ** 2 * p * q)
    assert inn.cumulant(3) == pytest.approx(width ** 3 * p * q * (q - p))
    assert inn.cumulant(4) == pytest.approx(width ** 4 * p * q * (1 - 6 * p * q))


def test_symmetric_two_point_fourth_cumulant():
    assert P.Innovation("two-point", 1.0).d4 == pytest.approx(-2.0)


@pytest.mark.parametrize("inn", [P.Innovation("gamma", shape=0.7, rate=2.0),
                                 P.Innovation("two-point", 1.3, p=0.3),
                                 P.Innovation("gaussian", 0.8)])
def test_fourth_cumulant_is_m4_minus_three_m2_squared(inn):
    if inn.family == "two-point":
        a, b = inn._two_point_atoms()
        m2 = inn.p * a ** 2 + (1 - inn.p) * b ** 2
        m4 = inn.p * a ** 4 + (1 - inn.p) * b ** 4
    elif inn.family == "gamma":
        d = stats.gamma(inn.shape, scale=1 / inn.rate)
        mu = d.mean()
        m2 = d.expect(lambda x: (x - mu) ** 2)
        m4 = d.expect(lambda x: (x - mu) ** 4)
    else:
        m2, m4 = inn.variance, 3 * inn.variance ** 2
    assert inn.d4 == pytest.approx(m4 - 3 * m2 ** 2, rel=1e-7, abs=1e-12)


def test_two_point_rejects_fractional_cells():
    with pytest.raises(ValueError):
        P.Innovation("two-point").cumulant(2, h=0.5)
    with pytest.raises(ValueError):
        P.Innovation("two-point").sample(np.random.default_rng(0), 4, h=0.5)


def test_innovation_samples_are_centred():
    rng = np.random.default_rng(3)
    for inn in (P.Innovation("gamma", shape=0.5, rate=0.5), P.Innovation("two-point", 2.0, p=0.25)):
        x = inn.sample(rng, 200_000)
        assert abs(x.mean()) < 5 * math.sqrt(inn.d2 / len(x))
        assert x.var() == pytest.approx(inn.d2, rel=0.03)


def test_innovation_validation():
    with pytest.raises(ValueError):
        P.Innovation("cauchy")
    with pytest.raises(ValueError):
        P.Innovation("gamma", shape=-1)


# ------------------------------------------------------------ linear models

def test_ar1_autocovariance_closed_form():
    phi = 0.6
    m = P.ar1_model(phi)
    h = np.arange(6)
    assert np.allclose(m.autocovariance(h), phi ** h / (1 - phi ** 2), rtol=1e-5)


def test_ar1_truncation_tail_below_tolerance():
    phi = 0.9
    m = P.ar1_model(phi)
    kept = np.sum(m.kernel_array ** 2)
    assert 1 / (1 - phi ** 2) - kept < P.KERNEL_TAIL_TOL / (1 - phi ** 2)


def test_spectral_density_integrates_to_covariance():
    m = P.ar1_model(0.5)
    lam = 2 * np.pi * np.arange(4096) / 4096
    F = m.spectral_density(lam)
    assert np.allclose(F, 1 / np.abs(1 - 0.5 * np.exp(-1j * lam)) ** 2, rtol=1e-5)
    for h in range(4):
        assert np.mean(F * np.cos(h * lam)) == pytest.approx(m.autocovariance(h)[0], rel=1e-9)


def test_second_order_density_is_spectral_density():
    m = P.ma_model([1.0, -0.4, 0.2], P.Innovation("gaussian", 2.0))
    for lam in (0.3, 1.7, -2.2):
        assert P.spectral_density_k(m, 2, [lam]).real == pytest.approx(m.spectral_density(lam))


def test_higher_order_density_from_kernel():
    inn = P.Innovation("gamma", shape=1.0, rate=1.0)
    m = P.ma_model([1.0, 0.5], inn)
    A = lambda x: 1 + 0.5 * np.exp(-1j * x)
    val = P.spectral_density_k(m, 3, [0.4, 1.1])
    assert val == pytest.approx(inn.cumulant(3) * A(0.4) * A(1.1) * A(-1.5))
    with pytest.raises(ValueError):
        P.spectral_density_k(m, 3, [0.4])


def test_model_from_transfer_recovers_ma_kernel():
    a = lambda lam: 1 + 0.5 * np.exp(-1j * lam) + 0.5 * np.exp(1j * lam)
    m = P.model_from_transfer(a, max_lag=64)
    assert m.offset == 1
    assert np.allclose(m.kernel, [0.5, 1.0, 0.5])


def test_marginal_cumulant():
    inn = P.Innovation("gamma", shape=2.0, rate=1.0)
    m = P.ma_model([1.0, 0.5], inn)
    assert m.marginal_cumulant(3) == pytest.approx(inn.cumulant(3) * (1 + 0.125))


def test_simulation_is_reproducible_and_matches_covariance():
    m = P.ar1_model(0.5)
    s1 = P.simulate_linear(m, 1000, 42)
    s2 = P.simulate_linear(m, 1000, 42)
    assert np.array_equal(s1.values, s2.values) and s1.seed == 42
    x = P.simulate_linear(m, 400_000, 7).values
    assert np.var(x) == pytest.approx(m.autocovariance(0)[0], rel=0.02)
    assert np.mean(x[:-1] * x[1:]) == pytest.approx(m.autocovariance(1)[0], rel=0.03)


def test_series_csv_round_trip():
    s = P.SampleSeries(np.array([0.1, -2.5, 1e-17]), step=0.125, seed=9)
    back = P.SampleSeries.from_csv(s.to_csv())
    assert np.array_equal(back.values, s.values) and back.step == 0.125 and back.seed == 9


def test_series_rejects_nonfinite():
    with pytest.raises(ValueError):
        P.SampleSeries(np.array([1.0, np.nan]))


# ------------------------------------------------------------ periodogram and functionals

def test_periodogram_fft_and_direct_routes_agree():
    x = np.random.default_rng(1).standard_normal(128)
    lam, I = P.periodogram(x, step=0.5)
    lam2, I2 = P.periodogram(x, lam, step=0.5)
    assert np.allclose(I, I2)
    assert lam[0] == pytest.approx(2 * np.pi / 64)


def test_white_noise_periodogram_mean():
    rng = np.random.default_rng(2)
    vals = [P.periodogram(rng.standard_normal(256))[1].mean() for _ in range(200)]
    assert np.mean(vals) == pytest.approx(1 / (2 * np.pi), rel=0.02)


@given(st.floats(0.1, 10.0))
def test_periodogram_scales_quadratically(c):
    x = np.random.default_rng(5).standard_normal(64)
    assert np.allclose(P.periodogram(c * x)[1], c * c * P.periodogram(x)[1])


def _brute_qf(x, bhat, r):
    K = len(bhat) // 2
    n = len(x)
    tot = 0.0
    for t in range(n):
        for s in range(n):
            k = t - s
            if abs(k) <= K:
                tot += bhat[K + k] * (x[t] * x[s] - r[abs(k)])
    return tot


def test_quadratic_form_matches_double_sum():
    x = np.random.default_rng(4).standard_normal(40)
    bhat = [0.1, -0.3, 1.0, -0.3, 0.1]
    r = [1.0, 0.4, 0.1]
    assert P.quadratic_form(x, bhat, r) == pytest.approx(_brute_qf(x, bhat, r), rel=1e-12)


def test_quadratic_form_rejects_asymmetric_kernel():
    with pytest.raises(ValueError):
        P.quadratic_form(np.ones(8), [0.1, 1.0, 0.2], [1.0, 0.0])


@given(st.lists(st.floats(-2, 2), min_size=2, max_size=2), st.floats(-3, 3))
def test_quadratic_form_is_linear_in_kernel(b, c):
    x = np.random.default_rng(6).standard_normal(30)
    r = [1.0, 0.2, 0.0]
    b1 = [b[0], 1.0, b[0]]
    b2 = [b[1], -0.5, b[1]]
    comb = [u + c * v for u, v in zip(b1, b2)]
    lhs = P.quadratic_form(x, comb, r)
    rhs = P.quadratic_form(x, b1, r) + c * P.quadratic_form(x, b2, r)
    assert lhs == pytest.approx(rhs, abs=1e-9)


def test_appell_sum_gaussian_second_order():
    x = np.random.default_rng(8).standard_normal(50)
    assert P.appell_sum(x, 2, [0.0, 1.7]) == pytest.approx(np.sum(x * x - 1.7))
    # third-order Hermite with variance v: x^3 - 3 v x
    assert P.appell_sum(x, 3, [0.0, 2.0, 0.0]) == pytest.approx(np.sum(x ** 3 - 6 * x))


# ------------------------------------------------------------ variance oracles

def test_exact_qf_variance_by_enumeration():
    """Two-point innovations on a tiny window: enumerate every outcome."""
    inn = P.Innovation("two-point", 1.0, p=0.3)
    m = P.ma_model([1.0, 0.6], inn)
    n = 3
    bhat = [0.4, 1.0, 0.4]
    r = m.autocovariance(np.arange(2))
    a, b = inn._two_point_atoms()
    vals, probs = [], []
    for signs in itertools.product([0, 1], repeat=n + 1):
        xi = np.array([a if s else -b for s in signs])
        pr = np.prod([inn.p if s else 1 - inn.p for s in signs])
        x = np.convolve(xi, m.kernel_array, mode="valid")
        vals.append(_brute_qf(x, bhat, r))
        probs.append(pr)
    vals, probs = np.array(vals), np.array(probs)
    mean = np.sum(vals * probs)
    var = np.sum((vals - mean) ** 2 * probs)
    assert mean == pytest.approx(0.0, abs=1e-12)
    assert P.exact_qf_variance(m, bhat, n) == pytest.approx(var, rel=1e-10)


@pytest.mark.parametrize("inn", [P.Innovation(), P.Innovation("gamma", shape=0.5, rate=math.sqrt(0.5))])
def test_qf_target_is_limit_of_exact_variance(inn):
    m = P.ar1_model(0.5, inn)
    bhat = [0.25, 0.5, 0.25]
    target = P.qf_variance_target(m, bhat)
    errs = [abs(P.exact_qf_variance(m, bhat, n) / n - target) / target for n in (128, 512)]
    assert errs[1] < errs[0] and errs[1] < 5e-3


def test_hermite_targets_two_routes():
    m = P.ar1_model(0.4)
    for l in (2, 3):
        a = P.hermite_variance_target(m, l)
        b = P.hermite_variance_lag_sum(m, l)
        assert a == pytest.approx(b, rel=1e-8)
        assert P.exact_hermite_variance(m, l, 4096) / 4096 == pytest.approx(b, rel=1e-3)


# ------------------------------------------------------------ FRBM

def _direct_transfer_kernel(t, a, g):
    f = lambda l: (1j * l) ** (-a) * (1 + 1j * l) ** (-g)
    head = integrate.quad(lambda l: (f(l) * np.exp(1j * t * l)).real, 0, 1, limit=400)[0]
    tail_c = integrate.quad(lambda l: f(l).real, 1, np.inf, weight="cos", wvar=abs(t), limlst=300)[0]
    tail_s = integrate.quad(lambda l: f(l).imag, 1, np.inf, weight="sin", wvar=abs(t), limlst=300)[0]
    return 2 * (head + tail_c - math.copysign(1, t) * tail_s)


@pytest.mark.parametrize("a,g", [(0.0, 1.0), (0.2, 1.0), (0.3, 1.5), (0.1, 0.8)])
@pytest.mark.parametrize("t", [0.5, 1.0, 3.0])
def test_time_kernel_against_fourier_integral(a, g, t):
    assert P.rb_time_kernel(t, a, g) == pytest.approx(_direct_transfer_kernel(t, a, g), rel=1e-7)
    assert abs(_direct_transfer_kernel(-t, a, g)) < 1e-7


def test_time_kernel_ornstein_uhlenbeck():
    t = np.array([-1.0, 0.0, 0.5, 2.0])
    assert np.allclose(P.rb_time_kernel(t, 0.0, 1.0), [0, 2 * np.pi, 2 * np.pi * np.exp(-0.5), 2 * np.pi * np.exp(-2)])


def test_time_kernel_reproduces_covariance():
    """d_2 int a(t) a(t+h) dt equals r(h) for f = 2 pi d_2 |a|^2."""
    a, g = 0.2, 1.2
    theta = P.ThetaFRBM(a, g, 2 * np.pi)
    for h in (0.0, 0.7):
        val = integrate.quad(lambda t: P.rb_time_kernel(t, a, g) * P.rb_time_kernel(t + h, a, g),
                             0, np.inf, limit=400)[0]
        assert val == pytest.approx(P.frbm_autocovariance(theta, [h])[0], rel=1e-6)


def test_time_kernel_large_t_is_stable():
    t = np.array([50.0, 200.0, 700.0])
    v = P.rb_time_kernel(t, 0.3, 1.2)
    assert np.all(np.isfinite(v)) and np.all(np.diff(v) < 0) and np.all(v > 0)


def test_matern_special_cases():
    x = np.linspace(0, 5, 11)
    assert np.allclose(P.matern_covariance(x, 1.0, 1), np.exp(-x))
    z = np.array([0.3, 2.0])
    assert np.allclose(special.kv(0.5, z), np.sqrt(np.pi / 2) * np.exp(-z) / np.sqrt(z))
    assert P.matern_covariance(0.0, 1.7, 2) == 1.0


@pytest.mark.parametrize("gamma", [0.8, 1.0, 1.6])
def test_matern_is_normalised_covariance_of_density(gamma):
    theta = P.ThetaFRBM(0.0, gamma)
    lags = [0.4, 1.5]
    r = P.frbm_autocovariance(theta, [0.0] + lags)
    assert np.allclose(P.matern_covariance(np.array(lags), gamma, 1), r[1:] / r[0], rtol=1e-6)


def test_matern_large_argument_stable():
    assert 0 < P.matern_covariance(700.0, 1.5, 1) < 1e-290


@given(st.floats(0.0, 0.45), st.floats(0.55, 2.5))
def test_frbm_variance_matches_quadrature(alpha, gamma):
    theta = P.ThetaFRBM(alpha, gamma)
    f = lambda w: P.frbm_spectral(w, theta)
    val = 2 * (integrate.quad(f, 0, 1, limit=200)[0] + integrate.quad(f, 1, np.inf, limit=200)[0])
    assert P.frbm_variance(theta) == pytest.approx(val, rel=1e-6)


def test_frbm_integrability():
    assert P.frbm_integrable(0.2, 0.5)
    assert not P.frbm_integrable(0.0, 0.5)
    assert not P.frbm_integrable(0.5, 1.0)
    assert P.frbm_integrable(0.7, 1.0, d=2)


def test_frbm_spectral_pole_and_two_dims():
    theta = P.ThetaFRBM(0.2, 1.0, 3.0)
    with pytest.raises(ValueError):
        P.frbm_spectral(0.0, theta)
    assert P.frbm_spectral(0.0, theta, allow_pole=True) == np.inf
    assert P.frbm_spectral(np.array([0.6, 0.8]), theta, d=2) == pytest.approx(3.0 / 2.0)
    assert P.frbm_spectral(0.0, P.ThetaFRBM(0.0, 1.0)) == 1.0


def test_theta_validation():
    for bad in [(0.5, 1.0, 1.0), (0.2, 0.3, 1.0), (0.1, 1.0, 0.0), (-0.1, 1.0, 1.0)]:
        with pytest.raises(ValueError):
            P.ThetaFRBM(*bad)


@pytest.mark.parametrize("alpha", [0.0, 0.25, 0.4])
def test_synthesis_covariance(alpha):
    theta = P.ThetaFRBM(alpha, 1.0)
    syn = P.synthesize_frbm(theta, 2048, 1 / 16)
    g = syn.kernel
    cov = np.fft.irfft(np.abs(np.fft.rfft(g)) ** 2, len(g)) * syn.step
    assert np.allclose(cov[[0, 8, 32]], P.frbm_autocovariance(theta, [0, 0.5, 2.0]), rtol=1e-3)


def test_synthesis_sample_variance():
    theta = P.ThetaFRBM(0.1, 1.0)
    syn = P.synthesize_frbm(theta, 1024, 1 / 8, P.Innovation("gamma", shape=1.0, rate=1.0))
    rng = np.random.default_rng(11)
    v = np.mean([np.mean(syn.sample(rng).values ** 2) for _ in range(300)])
    assert v == pytest.approx(P.frbm_variance(theta), rel=0.1)


# ------------------------------------------------------------ Monte Carlo

def test_replica_generators_reproducible_and_distinct():
    g1 = [g.standard_normal() for g in P.replica_generators(5, 4)]
    g2 = [g.standard_normal() for g in P.replica_generators(5, 4)]
    assert g1 == g2 and len(set(g1)) == 4


def test_mc_experiment_thread_independent():
    m = P.ar1_model(0.3)
    cfg = P.ClTConfig(m, "quadratic", T=512, replicas=40, seed=3, bhat=(0.5, 1.0, 0.5))
    one = P.mc_clt_experiment(cfg)
    two = P.mc_clt_experiment(P.ClTConfig(m, "quadratic", T=512, replicas=40, seed=3,
                                          bhat=(0.5, 1.0, 0.5), threads=2))
    assert one == two


def test_mc_experiment_sum_functional():
    m = P.ar1_model(0.3)
    rec = P.mc_clt_experiment(P.ClTConfig(m, "sum", T=1024, replicas=300, seed=1, l=2))
    assert rec["ratio"] == pytest.approx(1.0, abs=5 * rec["variance_se"] / rec["target"])
    with pytest.raises(ValueError):
        P.mc_clt_experiment(P.ClTConfig(m, "cubic"))
