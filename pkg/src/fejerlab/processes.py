"""Linear processes, their simulation, and Monte Carlo CLT experiments.

Discrete models are X_t = sum_j a_hat(j) xi_(t-j) with i.i.d. innovations.
Spectral quantities use the normalised measure mu(d lambda) = d lambda / 2 pi
on the torus, so the spectral density of a discrete model is
F(lambda) = d_2 |A(lambda)|^2 with A(lambda) = sum_j a_hat(j) e^{-i j lambda}
and r(h) = int e^{i h lambda} F d mu. Continuous-time models on the line
use Lebesgue measure: r(h) = int e^{i h lambda} f(lambda) d lambda.
"""
from __future__ import annotations

import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, signal, special, stats

from . import graph_core, wick
from .fejer import SpectralSymbol, limit_integral, hermite_sum_variance
from .kernels import SpectralDomain

KERNEL_TAIL_TOL = 1e-12
MAX_KERNEL_LENGTH = 1 << 16
POLE_CELLS = 16


# ------------------------------------------------------------ innovations

@dataclass(frozen=True)
class Innovation:
    """I.i.d. innovation family with closed-form cumulants.

    Families
    --------
    ``gaussian``
        N(0, variance); d_k = 0 for k >= 3.
    ``gamma``
        centred Gamma(shape, rate); d_k = shape (k-1)! / rate^k. Over a
        cell of length h the increment is Gamma(shape h, rate), so the
        cumulants scale with h as for a Levy process.
    ``two-point``
        centred two-point law taking a > 0 with probability p and -b
        otherwise, scaled to ``variance``. Not infinitely divisible, so
        only h = 1 is allowed.
    """

    family: str = "gaussian"
    variance: float = 1.0
    shape: float = 1.0
    rate: float = 1.0
    p: float = 0.5

    def __post_init__(self):
        if self.family not in ("gaussian", "gamma", "two-point"):
            raise ValueError(f"unknown innovation family {self.family!r}")
        if self.family == "gaussian" and self.variance <= 0:
            raise ValueError("variance must be positive")
        if self.family == "gamma" and (self.shape <= 0 or self.rate <= 0):
            raise ValueError("gamma shape and rate must be positive")
        if self.family == "two-point" and not 0 < self.p < 1:
            raise ValueError("two-point probability must lie in (0, 1)")

    def _two_point_atoms(self) -> tuple[float, float]:
        # a p = b (1 - p) and a^2 p + b^2 (1 - p) = variance
        a = math.sqrt(self.variance * (1 - self.p) / self.p)
        b = math.sqrt(self.variance * self.p / (1 - self.p))
        return a, b

    def cumulant(self, k: int, h: float = 1.0) -> float:
        """k-th cumulant of the innovation attached to a cell of length h."""
        if k < 1:
            raise ValueError("cumulant order must be positive")
        if k == 1:
            return 0.0
        if self.family == "gaussian":
            return self.variance * h if k == 2 else 0.0
        if self.family == "gamma":
            return h * self.shape * math.factorial(k - 1) / self.rate ** k
        if h != 1.0:
            raise ValueError("two-point innovations are only defined on unit cells")
        a, b = self._two_point_atoms()
        moments = {}
        for size in range(1, k + 1):
            m = self.p * a ** size + (1 - self.p) * (-b) ** size
            for S in _subsets_of_size(k, size):
                moments[S] = m
        return float(wick.moments_to_cumulants(moments, k)[frozenset(range(k))])

    @property
    def d2(self) -> float:
        return self.cumulant(2)

    @property
    def d4(self) -> float:
        return self.cumulant(4)

    def sample(self, rng: np.random.Generator, n: int, h: float = 1.0) -> np.ndarray:
        if self.family == "gaussian":
            return rng.standard_normal(n) * math.sqrt(self.variance * h)
        if self.family == "gamma":
            k = self.shape * h
            return rng.gamma(k, 1.0 / self.rate, size=n) - k / self.rate
        if h != 1.0:
            raise ValueError("two-point innovations are only defined on unit cells")
        a, b = self._two_point_atoms()
        return np.where(rng.random(n) < self.p, a, -b)

    def to_dict(self) -> dict:
        return {"family": self.family, "variance": self.variance, "shape": self.shape,
                "rate": self.rate, "p": self.p}


def _subsets_of_size(n: int, size: int):
    import itertools

    return (frozenset(c) for c in itertools.combinations(range(n), size))


# ------------------------------------------------------------ discrete linear models

@dataclass(frozen=True)
class LinearProcessModel:
    """X_t = sum_j kernel[j] xi_(t - j + offset) on the integers.

    ``kernel[offset]`` is a_hat(0); the kernel need not be causal.
    """

    kernel: tuple[float, ...]
    innovation: Innovation = Innovation()
    offset: int = 0
    name: str = "custom"

    def __post_init__(self):
        k = tuple(float(x) for x in self.kernel)
        object.__setattr__(self, "kernel", k)
        if not k:
            raise ValueError("empty kernel")
        if len(k) > MAX_KERNEL_LENGTH:
            raise ValueError("kernel too long")
        if not all(math.isfinite(x) for x in k):
            raise ValueError("kernel has non-finite entries")

    @property
    def kernel_array(self) -> np.ndarray:
        return np.asarray(self.kernel)

    def autocovariance(self, lags) -> np.ndarray:
        """r(h) = d_2 sum_j a_hat(j) a_hat(j + h), exact for the stored kernel."""
        a = self.kernel_array
        full = np.correlate(a, a, mode="full")  # lags -(L-1) .. L-1
        L = len(a)
        lags = np.abs(np.atleast_1d(np.asarray(lags, dtype=int)))
        out = np.where(lags < L, full[np.minimum(lags, L - 1) + L - 1], 0.0)
        return self.innovation.d2 * out

    def transfer(self, lam) -> np.ndarray:
        """A(lambda) = sum_j a_hat(j) e^{-i j lambda}."""
        lam = np.asarray(lam, dtype=float)
        j = np.arange(len(self.kernel)) - self.offset
        return np.exp(-1j * np.multiply.outer(lam, j)) @ self.kernel_array

    def spectral_density(self, lam) -> np.ndarray:
        """F = d_2 |A|^2, the density of r against the normalised measure."""
        return self.innovation.d2 * np.abs(self.transfer(lam)) ** 2

    def spectral_symbol(self) -> SpectralSymbol:
        return SpectralSymbol(lambda lam: self.spectral_density(lam), math.inf, True,
                              SpectralDomain(), f"{self.name}-density")

    def marginal_cumulant(self, k: int) -> float:
        """kappa_k(X_t) = d_k sum_j a_hat(j)^k."""
        return self.innovation.cumulant(k) * float(np.sum(self.kernel_array ** k))

    def to_dict(self) -> dict:
        return {"name": self.name, "offset": self.offset, "kernel_length": len(self.kernel),
                "innovation": self.innovation.to_dict()}


def _truncate_geometric(phi: float, tol: float) -> int:
    if phi == 0:
        return 1
    # tail mass phi^(2L) / (1 - phi^2) relative to 1 / (1 - phi^2)
    return int(math.ceil(math.log(tol) / (2 * math.log(abs(phi))))) + 1


def ar1_model(phi: float, innovation: Innovation = Innovation(), tol: float = KERNEL_TAIL_TOL) -> LinearProcessModel:
    """Causal AR(1): a_hat(j) = phi^j, truncated where the L2 tail is below tol."""
    if not -1 < phi < 1:
        raise ValueError("AR(1) needs |phi| < 1")
    L = _truncate_geometric(phi, tol)
    if L > MAX_KERNEL_LENGTH:
        raise ValueError("kernel truncation exceeds the length cap")
    return LinearProcessModel(tuple(phi ** np.arange(L)), innovation, 0, f"ar1({phi})")


def ma_model(coeffs: Sequence[float], innovation: Innovation = Innovation()) -> LinearProcessModel:
    return LinearProcessModel(tuple(coeffs), innovation, 0, "ma")


def white_noise(scale: float = 1.0, innovation: Innovation = Innovation()) -> LinearProcessModel:
    return LinearProcessModel((scale,), innovation, 0, "white")


def model_from_transfer(a: Callable, innovation: Innovation = Innovation(), max_lag: int = 4096,
                        tol: float = KERNEL_TAIL_TOL) -> LinearProcessModel:
    """Kernel a_hat(k) = int e^{ik lambda} a(lambda) d mu, truncated symmetrically."""
    G = 1 << int(math.ceil(math.log2(8 * max_lag)))
    lam = 2 * np.pi * np.arange(G) / G
    coef = np.fft.ifft(a(lam))
    idx = np.arange(-max_lag, max_lag + 1)
    kern = coef[idx % G]
    if np.max(np.abs(kern.imag)) > 1e-9 * max(1.0, np.max(np.abs(kern.real))):
        raise ValueError("transfer function does not give a real kernel")
    kern = kern.real
    # keep the central part whose discarded two-sided tail is below tol
    sq = kern ** 2
    total = np.sum(sq)
    central = sq[max_lag] + np.concatenate([[0.0], np.cumsum(sq[max_lag + 1:] + sq[max_lag - 1::-1])])
    ok = np.nonzero(total - central <= tol * total)[0]
    if not len(ok):
        raise ValueError("kernel truncation mass exceeds tolerance")
    keep = int(ok[0])
    return LinearProcessModel(tuple(kern[max_lag - keep:max_lag + keep + 1]), innovation, keep, "transfer")


def spectral_density_k(model: LinearProcessModel, k: int, lams) -> complex:
    """d_k a(lambda_1) ... a(lambda_(k-1)) a(-sum lambda_i)."""
    if k < 2:
        raise ValueError("k must be at least 2")
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    if lams.shape[-1] != k - 1:
        raise ValueError(f"need {k - 1} frequencies")
    val = model.innovation.cumulant(k) * model.transfer(-lams.sum(axis=-1))
    for i in range(k - 1):
        val = val * model.transfer(lams[..., i])
    return complex(val) if np.ndim(val) == 0 else val


# ------------------------------------------------------------ sample series

@dataclass(frozen=True)
class SampleSeries:
    values: np.ndarray
    step: float = 1.0
    seed: int | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or not np.all(np.isfinite(v)):
            raise ValueError("series must be a finite one-dimensional array")
        object.__setattr__(self, "values", v)

    @property
    def length(self) -> float:
        return len(self.values) * self.step

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# step={self.step!r}\n# seed={self.seed}\nvalue\n")
        for x in self.values:
            buf.write(f"{float(x)!r}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "SampleSeries":
        step, seed, vals, header = 1.0, None, [], False
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                if key == "step":
                    step = float(val)
                elif key == "seed" and val not in ("", "None"):
                    seed = int(val)
                continue
            if not header:
                header = True
                continue
            vals.append(float(line))
        return cls(np.array(vals), step, seed)


def simulate_linear(model: LinearProcessModel, n: int, rng: np.random.Generator | int,
                    seed: int | None = None) -> SampleSeries:
    """n consecutive values of the moving average, innovations from ``rng``."""
    if isinstance(rng, (int, np.integer)):
        seed = int(rng)
        rng = np.random.Generator(np.random.Philox(seed))
    a = model.kernel_array
    xi = model.innovation.sample(rng, n + len(a) - 1)
    x = signal.fftconvolve(xi, a, mode="valid") if len(a) > 64 else np.convolve(xi, a, mode="valid")
    return SampleSeries(x, 1.0, seed)


# ------------------------------------------------------------ periodogram and functionals

def fourier_frequencies(n: int, step: float = 1.0) -> np.ndarray:
    """2 pi j / (n step), j = 1 .. floor(n/2)."""
    return 2 * np.pi * np.arange(1, n // 2 + 1) / (n * step)


def periodogram(series: SampleSeries | np.ndarray, lam=None, step: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """I(lambda) = |h sum_k X_k e^{-i t_k lambda}|^2 / (2 pi T), T = n h.

    Without ``lam`` the positive Fourier frequencies are used (FFT);
    otherwise the sum is evaluated directly on the given grid.
    """
    if isinstance(series, SampleSeries):
        x, h = series.values, series.step if step is None else step
    else:
        x, h = np.asarray(series, dtype=float), 1.0 if step is None else step
    n = len(x)
    T = n * h
    if lam is None:
        lam = fourier_frequencies(n, h)
        dft = np.fft.fft(x)[1:n // 2 + 1]
    else:
        lam = np.asarray(lam, dtype=float)
        t = np.arange(n) * h
        dft = np.exp(-1j * np.multiply.outer(lam, t)) @ x
    return lam, (h * np.abs(dft)) ** 2 / (2 * np.pi * T)


def _lagged_products(x: np.ndarray, max_lag: int) -> np.ndarray:
    """sum_t x_t x_(t+k) for k = 0 .. max_lag."""
    n = len(x)
    size = 1 << int(math.ceil(math.log2(2 * n)))
    fx = np.fft.rfft(x, size)
    acf = np.fft.irfft(fx * np.conj(fx), size)[:max_lag + 1]
    return acf


def quadratic_form(series: SampleSeries | np.ndarray, bhat: Sequence[float], r: Sequence[float],
                   step: float = 1.0) -> float:
    """Q = h^2 sum_{t,s} b_hat(t - s) (X_t X_s - r(t - s)).

    ``bhat`` lists b_hat(-K .. K) and must be symmetric; ``r`` gives the
    model autocovariance r(0 .. K) used for the Wick centring.
    """
    x = series.values if isinstance(series, SampleSeries) else np.asarray(series, dtype=float)
    if isinstance(series, SampleSeries):
        step = series.step
    b = np.asarray(bhat, dtype=float)
    if len(b) % 2 != 1:
        raise ValueError("bhat must list lags -K..K")
    K = len(b) // 2
    if not np.allclose(b, b[::-1], rtol=0, atol=1e-14 * max(1.0, np.max(np.abs(b)))):
        raise ValueError("bhat must be symmetric")
    r = np.asarray(r, dtype=float)
    if len(r) < K + 1:
        raise ValueError("autocovariance must cover lags 0..K")
    n = len(x)
    K_eff = min(K, n - 1)
    prods = _lagged_products(x, K_eff)
    lags = np.arange(K_eff + 1)
    centred = prods - (n - lags) * r[:K_eff + 1]
    weights = np.where(lags == 0, 1.0, 2.0) * b[K + lags]
    return float(step * step * math.fsum(weights * centred))


def appell_sum(series: SampleSeries | np.ndarray, l: int, cumulants: Sequence[float], step: float = 1.0) -> float:
    """S = h sum_t P_l(X_t) with P_l the Appell polynomial of the marginal law.

    ``cumulants`` lists kappa_1, kappa_2, ... of X_t (Gaussian: [0, r(0)]).
    """
    if not 1 <= l <= 6:
        raise ValueError("l must lie in 1..6")
    x = series.values if isinstance(series, SampleSeries) else np.asarray(series, dtype=float)
    if isinstance(series, SampleSeries):
        step = series.step
    coeffs = [float(c) for c in wick.appell_polynomial(l, list(cumulants))]
    vals = np.polynomial.polynomial.polyval(x, coeffs)
    return float(step * math.fsum(vals))


def model_cumulants(model: LinearProcessModel, order: int) -> list[float]:
    return [model.marginal_cumulant(k) for k in range(1, order + 1)]


# ------------------------------------------------------------ CLT targets

def _trig_symbol(coeffs: np.ndarray, offset: int, name: str) -> SpectralSymbol:
    """sum_k c_k e^{-i k lambda} for real symmetric c (k = -offset ..)."""
    j = np.arange(len(coeffs)) - offset

    def f(lam):
        lam = np.asarray(lam, dtype=float)
        return np.real(np.exp(-1j * np.multiply.outer(lam, j)) @ coeffs)

    return SpectralSymbol(f, math.inf, True, SpectralDomain(), name)


def kernel_symbol(bhat: Sequence[float]) -> SpectralSymbol:
    """b(lambda) = sum_k b_hat(k) e^{-ik lambda} for b_hat on lags -K..K."""
    b = np.asarray(bhat, dtype=float)
    return _trig_symbol(b, len(b) // 2, "kernel")


def qf_variance_target(model: LinearProcessModel, bhat: Sequence[float], points: int = 4096) -> float:
    """Limit of Var(Q_T) / T: 2 int b^2 F^2 d mu + (d_4 / d_2^2) (int b F d mu)^2.

    Both integrals are limit integrals of cycle graphs (the 4-cycle with
    alternating kernel and density edges, and the 2-cycle).
    """
    b = kernel_symbol(bhat)
    F = model.spectral_symbol()
    c4 = graph_core.cycle_coordinates(graph_core.cycle_graph(4)).mstar_array()
    c2 = graph_core.cycle_coordinates(graph_core.cycle_graph(2)).mstar_array()
    gauss = 2 * limit_integral(c4, [b, F, b, F], points=points)
    bf = limit_integral(c2, [b, F], points=points)
    d2, d4 = model.innovation.d2, model.innovation.d4
    return float(gauss + d4 / d2 ** 2 * bf ** 2)


def hermite_variance_target(model: LinearProcessModel, l: int, points: int = 1 << 14) -> float:
    """Limit of Var(S_T) / T for Gaussian models: l! F^(*l)(0)."""
    return math.factorial(l) * hermite_sum_variance(model.spectral_symbol(), l, points)


def hermite_variance_lag_sum(model: LinearProcessModel, l: int, max_lag: int | None = None) -> float:
    """Second route to the same limit: l! sum_h r(h)^l."""
    L = len(model.kernel) if max_lag is None else max_lag
    r = model.autocovariance(np.arange(L))
    return math.factorial(l) * float(r[0] ** l + 2 * np.sum(r[1:] ** l))


def _toeplitz_sym(vals: np.ndarray, n: int) -> np.ndarray:
    import scipy.linalg

    col = np.zeros(n)
    m = min(n, len(vals))
    col[:m] = vals[:m]
    return scipy.linalg.toeplitz(col)


def exact_qf_variance(model: LinearProcessModel, bhat: Sequence[float], n: int) -> float:
    """Var(Q_n) at finite n: 2 Tr[(B R)^2] + d_4 sum_u (sum_{t,s} b(t-s) a(t-u) a(s-u))^2."""
    if n > 4096:
        raise ValueError("exact variance is limited to n <= 4096")
    b = np.asarray(bhat, dtype=float)
    K = len(b) // 2
    B = _toeplitz_sym(b[K:], n)
    R = _toeplitz_sym(model.autocovariance(np.arange(n)), n)
    P = B @ R
    gauss = 2 * float(np.sum(P * P.T))
    d4 = model.innovation.d4
    if d4 == 0:
        return gauss
    a = model.kernel_array
    L = len(a)
    # X_t = sum_j a[j] xi_(t - j + offset); column u indexes xi_(u - L + 1 + offset)
    A = np.zeros((n, n + L - 1))
    for t in range(n):
        A[t, t:t + L] = a[::-1]
    diag = np.einsum("tu,ts,su->u", A, B, A)
    return gauss + d4 * float(np.sum(diag ** 2))


def exact_hermite_variance(model: LinearProcessModel, l: int, n: int) -> float:
    """Var(sum_{t<n} H_l(X_t)) for Gaussian models: l! sum_{t,s} r(t-s)^l."""
    r = model.autocovariance(np.arange(n))
    lags = np.arange(n)
    weights = np.where(lags == 0, n, 2 * (n - lags))
    return math.factorial(l) * float(np.sum(weights * r ** l))


# ------------------------------------------------------------ FRBM

@dataclass(frozen=True)
class ThetaFRBM:
    """Parameters of c / (|lambda|^(2 alpha) (1 + lambda^2)^gamma)."""

    alpha: float
    gamma: float
    c: float = 1.0

    def __post_init__(self):
        if not 0 <= self.alpha < 0.5:
            raise ValueError("alpha must lie in [0, 1/2)")
        if self.gamma < 0.5:
            raise ValueError("gamma must be at least 1/2")
        if self.c <= 0:
            raise ValueError("c must be positive")
        if self.alpha + self.gamma <= 0.5:
            raise ValueError("alpha + gamma must exceed 1/2")

    def as_array(self) -> np.ndarray:
        """(alpha, gamma, c), the order used by the estimators."""
        return np.array([self.alpha, self.gamma, self.c])


def frbm_integrable(alpha: float, gamma: float, d: int = 1) -> bool:
    """Integrability of the FRBM density on R^d: 0 <= alpha < d/2 < alpha + gamma."""
    return 0 <= alpha < d / 2 < alpha + gamma


def frbm_spectral(lam, theta: ThetaFRBM, d: int = 1, allow_pole: bool = False):
    """c / (|lambda|^(2 alpha) (1 + |lambda|^2)^gamma); for d = 2 the last axis holds coordinates."""
    lam = np.asarray(lam, dtype=float)
    norm = np.sqrt(np.sum(lam ** 2, axis=-1)) if d == 2 else np.abs(lam)
    if theta.alpha > 0 and np.any(norm == 0) and not allow_pole:
        raise ValueError("the FRBM density has a pole at lambda = 0")
    with np.errstate(divide="ignore"):
        out = theta.c / (norm ** (2 * theta.alpha) * (1 + norm * norm) ** theta.gamma)
    return out if np.ndim(out) else float(out)


def frbm_variance(theta: ThetaFRBM) -> float:
    """r(0) = int f d lambda = c B(1/2 - alpha, alpha + gamma - 1/2) in d = 1."""
    return theta.c * special.beta(0.5 - theta.alpha, theta.alpha + theta.gamma - 0.5)


def matern_covariance(x, gamma: float, d: int = 1):
    """Normalised Matérn covariance 2^(1-nu) / Gamma(nu) x^nu K_nu(x), nu = gamma - d/2.

    Uses the exponentially scaled Bessel function for stability; B(0) = 1.
    """
    nu = gamma - d / 2
    if nu <= 0:
        raise ValueError("need gamma > d/2")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("x must be non-negative")
    with np.errstate(invalid="ignore", divide="ignore"):
        val = 2 ** (1 - nu) / special.gamma(nu) * x ** nu * special.kve(nu, x) * np.exp(-x)
    out = np.where(x == 0, 1.0, val)
    return out if out.ndim else float(out)


def hyp1f1(a: float, b: float, z):
    """Confluent hypergeometric 1F1(a, b; z)."""
    return special.hyp1f1(a, b, z)


def rb_time_kernel(t, alpha: float, gamma: float):
    """a_hat(t) = int e^{it lambda} (i lambda)^(-alpha) (1 + i lambda)^(-gamma) d lambda.

    Equals 2 pi t^(alpha+gamma-1) 1F1(gamma, alpha+gamma; -t) / Gamma(alpha+gamma)
    for t > 0 and 0 for t < 0. The Kummer form keeps the series
    argument non-positive, avoiding cancellation at large t.
    """
    if alpha < 0 or alpha + gamma <= 0.5:
        raise ValueError("need alpha >= 0 and alpha + gamma > 1/2")
    t = np.asarray(t, dtype=float)
    s = alpha + gamma
    pos = np.where(t > 0, t, 1.0)
    val = 2 * np.pi / special.gamma(s) * pos ** (s - 1) * special.hyp1f1(gamma, s, -pos)
    out = np.where(t > 0, val, 0.0)
    # right limit at t = 0
    if s == 1:
        out = np.where(t == 0, 2 * np.pi, out)
    elif s < 1:
        out = np.where(t == 0, np.inf, out)
    return out if out.ndim else float(out)


def frbm_aliased(lam, theta: ThetaFRBM, step: float, folds: int = 200) -> np.ndarray:
    """Aliased density sum_{|j| <= folds} f(lambda + 2 pi j / h) on |lambda| <= pi / h."""
    lam = np.asarray(lam, dtype=float)
    shifts = 2 * np.pi / step * np.arange(-folds, folds + 1)
    grid = np.add.outer(lam, shifts)
    with np.errstate(divide="ignore"):
        vals = frbm_spectral(grid, theta, allow_pole=True)
    return np.sum(vals, axis=-1)


@dataclass(frozen=True)
class FrbmSynthesis:
    """Circulant moving-average synthesis of a sampled FRBM path.

    X_k = sum_n g_(k-n mod M) xi_n on a circle of M = 2 n points, where
    xi_n are innovation increments over cells of length ``step`` and g is
    the inverse DFT of q_m = sqrt(M S_m / (d_2 h)) with S_m the aliased
    spectral mass of frequency cell m. The pole cell m = 0 is integrated.
    """

    theta: ThetaFRBM
    n: int
    step: float
    innovation: Innovation
    kernel: np.ndarray = field(repr=False)

    def sample(self, rng: np.random.Generator) -> SampleSeries:
        M = len(self.kernel)
        xi = self.innovation.sample(rng, M, self.step)
        x = np.fft.irfft(np.fft.rfft(self.kernel) * np.fft.rfft(xi), M)[: self.n]
        return SampleSeries(x, self.step)


def synthesize_frbm(theta: ThetaFRBM, n: int, step: float = 1 / 16,
                    innovation: Innovation = Innovation(), folds: int = 200) -> FrbmSynthesis:
    """Precompute the circulant kernel for paths of n samples with spacing ``step``."""
    M = 2 * n
    dw = 2 * np.pi / (M * step)
    m = np.fft.fftfreq(M, 1.0 / M)
    omega = m * dw
    S = np.empty(M)
    nz = m != 0
    S[nz] = frbm_aliased(omega[nz], theta, step, folds) * dw
    # cells near the pole are integrated; the rest use the midpoint rule
    shifts = 2 * np.pi / step * np.concatenate([np.arange(-folds, 0), np.arange(1, folds + 1)])
    for j in np.nonzero(np.abs(m) <= POLE_CELLS)[0]:
        lo, hi = omega[j] - dw / 2, omega[j] + dw / 2
        if m[j] == 0:
            core = 2 * integrate.quad(lambda w: frbm_spectral(w, theta, allow_pole=True), 0, hi, limit=200)[0]
        else:
            core = integrate.quad(lambda w: frbm_spectral(w, theta), lo, hi)[0]
        S[j] = core + float(np.sum(frbm_spectral(omega[j] + shifts, theta))) * dw
    d2 = innovation.d2
    q = np.sqrt(M * S / (d2 * step))
    g = np.real(np.fft.ifft(q))
    return FrbmSynthesis(theta, n, step, innovation, g)


def frbm_autocovariance(theta: ThetaFRBM, lags) -> np.ndarray:
    """r(h) = int e^{ih lambda} f d lambda by oscillatory quadrature."""
    out = []
    for h in np.atleast_1d(np.asarray(lags, dtype=float)):
        if h == 0:
            out.append(frbm_variance(theta))
            continue
        f = lambda w: frbm_spectral(w, theta) if w > 0 else 0.0
        head, _ = integrate.quad(lambda w: f(w) * math.cos(h * w), 0, 1, limit=400, points=[0.0])
        tail, _ = integrate.quad(f, 1, np.inf, weight="cos", wvar=h, limlst=200)
        out.append(2 * (head + tail))
    return np.array(out)


# ------------------------------------------------------------ Monte Carlo CLT

def replica_generators(seed: int, replicas: int) -> list[np.random.Generator]:
    """Independent Philox streams spawned from one master seed."""
    return [np.random.Generator(np.random.Philox(s)) for s in np.random.SeedSequence(seed).spawn(replicas)]


@dataclass(frozen=True)
class ClTConfig:
    """Monte Carlo CLT experiment.

    ``functional`` is ``"sum"`` (Appell sum of order ``l``) or
    ``"quadratic"`` (kernel ``bhat`` on lags -K..K).
    """

    model: LinearProcessModel
    functional: str = "quadratic"
    T: int = 1 << 14
    replicas: int = 2000
    seed: int = 0
    l: int = 2
    bhat: tuple[float, ...] = (1.0,)
    threads: int = 1


def _replica_value(cfg: ClTConfig, rng: np.random.Generator, r: np.ndarray, cums: list[float]) -> float:
    x = simulate_linear(cfg.model, cfg.T, rng).values
    if cfg.functional == "quadratic":
        return quadratic_form(x, cfg.bhat, r) / math.sqrt(cfg.T)
    return appell_sum(x, cfg.l, cums) / math.sqrt(cfg.T)


def clt_replica_values(cfg: ClTConfig) -> np.ndarray:
    """T^(-1/2) x functional for each replica, in replica order for any thread count."""
    if cfg.functional not in ("sum", "quadratic"):
        raise ValueError(f"unknown functional {cfg.functional!r}")
    K = len(cfg.bhat) // 2
    r = cfg.model.autocovariance(np.arange(K + 1))
    cums = model_cumulants(cfg.model, cfg.l) if cfg.functional == "sum" else []
    gens = replica_generators(cfg.seed, cfg.replicas)

    def run(i):
        try:
            return _replica_value(cfg, gens[i], r, cums)
        except Exception as exc:
            raise RuntimeError(f"replica {i} failed: {exc}") from exc

    if cfg.threads > 1:
        with ThreadPoolExecutor(cfg.threads) as pool:
            return np.array(list(pool.map(run, range(cfg.replicas))))
    return np.array([run(i) for i in range(cfg.replicas)])


def clt_targets(cfg: ClTConfig) -> tuple[float, float]:
    """(limit variance, exact finite-T variance / T) of the normalised functional."""
    if cfg.functional == "quadratic":
        n = min(cfg.T, 1024)
        return qf_variance_target(cfg.model, cfg.bhat), exact_qf_variance(cfg.model, cfg.bhat, n) / n
    if cfg.model.innovation.family != "gaussian":
        raise ValueError("Appell-sum targets are implemented for Gaussian models")
    return (hermite_variance_target(cfg.model, cfg.l),
            exact_hermite_variance(cfg.model, cfg.l, cfg.T) / cfg.T)


def mc_clt_experiment(cfg: ClTConfig) -> dict:
    """Empirical law of T^(-1/2) x functional over replicas against the CLT target."""
    target, finite = clt_targets(cfg)
    return summarize(clt_replica_values(cfg), target, finite)


def summarize(values: np.ndarray, target: float, finite_target: float | None = None) -> dict:
    n = len(values)
    mean = math.fsum(values) / n
    centred = values - mean
    var = math.fsum(centred ** 2) / (n - 1)
    m4 = math.fsum(centred ** 4) / n
    var_se = math.sqrt(max(m4 - ((n - 1) / n * var) ** 2, 0.0) / n)
    if var > 0:
        skew = float(stats.skew(values))
        kurt = float(stats.kurtosis(values))
        ks = float(stats.kstest(centred / math.sqrt(var), "norm").statistic)
    else:
        skew = kurt = ks = 0.0
    return {
        "replicas": n,
        "mean": mean,
        "mean_se": math.sqrt(var / n),
        "variance": var,
        "variance_se": var_se,
        "skewness": skew,
        "excess_kurtosis": kurt,
        "ks_distance": ks,
        "target": target,
        "finite_T_target": finite_target,
        "ratio": var / target if target else float("nan"),
    }
