"""Minimum-contrast spectral estimation for continuous-time models.

Two contrasts are provided. The Whittle objective
(4 pi)^-1 int (log f + I / f) w d lambda treats every parameter, including
the scale c, as a free coordinate. The Ibragimov objective
-int I w log psi d lambda uses the factorisation f = sigma^2(theta) psi with
int psi w d lambda = 1, so the scale is estimated separately by the
weighted periodogram integral.

Frequency integrals are taken over the real line by adaptive quadrature
for population quantities and over the positive Fourier frequencies up to
Nyquist for periodogram-based objectives (even integrands are doubled).

The fourth-cumulant ratio d_4 / d_2^2 enters the sandwich covariances.
With ``convention="time"`` d_k are the cumulants of the driving noise per
unit time (as produced by :class:`fejerlab.processes.Innovation`). With
``convention="spectral"`` the ratio is assumed to be already divided by
2 pi, the normalisation in which the fourth-order spectral density carries
no extra factor.
"""
from __future__ import annotations

import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, optimize, special
from scipy.stats import qmc

from . import processes

FD_STEP = 1e-5


# ------------------------------------------------------------ weights and families

@dataclass(frozen=True)
class WeightFunction:
    """Non-negative even weight w(lambda)."""

    func: Callable
    params: tuple = ()
    symmetric: bool = True
    name: str = "custom"

    def __call__(self, lam):
        return self.func(np.asarray(lam, dtype=float))

    def check(self, grid: np.ndarray) -> bool:
        v = self(grid)
        ok = bool(np.all(v >= 0))
        if self.symmetric:
            ok = ok and bool(np.allclose(v, self(-grid)))
        return ok


def power_weight(a: float, b: float) -> WeightFunction:
    """w(lambda) = |lambda|^(2b) / (1 + lambda^2)^a."""
    return WeightFunction(lambda x: np.abs(x) ** (2 * b) / (1 + x * x) ** a,
                          (("a", a), ("b", b)), True, "power")


def cauchy_weight() -> WeightFunction:
    """w(lambda) = 1 / (1 + lambda^2)."""
    return power_weight(1.0, 0.0)


@dataclass(frozen=True)
class SpectralModelFamily:
    """Parametric spectral densities f(lambda; theta) on the line.

    ``grad_log_f`` returns an array of shape (m, *lam.shape); when absent,
    central differences with relative step ``FD_STEP`` are used.
    """

    f: Callable
    bounds: tuple[tuple[float, float], ...]
    names: tuple[str, ...]
    grad_log_f: Callable | None = None
    name: str = "custom"

    @property
    def dim(self) -> int:
        return len(self.bounds)

    def __call__(self, lam, theta) -> np.ndarray:
        return self.f(np.asarray(lam, dtype=float), np.asarray(theta, dtype=float))

    def in_box(self, theta) -> bool:
        return all(lo <= t <= hi for t, (lo, hi) in zip(theta, self.bounds))

    def log_f(self, lam, theta) -> np.ndarray:
        v = self(lam, theta)
        if np.any(v <= 0):
            raise ValueError("spectral density must be positive on the grid")
        return np.log(v)

    def grad(self, lam, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if self.grad_log_f is not None:
            return np.asarray(self.grad_log_f(np.asarray(lam, dtype=float), theta))
        return _central_grad(lambda t: self.log_f(lam, t), theta)


def _central_grad(fun: Callable, theta: np.ndarray) -> np.ndarray:
    out = []
    for i in range(len(theta)):
        h = FD_STEP * max(1.0, abs(theta[i]))
        e = np.zeros_like(theta)
        e[i] = h
        out.append((fun(theta + e) - fun(theta - e)) / (2 * h))
    return np.array(out)


def _frbm_f(lam, theta):
    alpha, gamma, c = theta
    x = np.abs(lam)
    return c / (x ** (2 * alpha) * (1 + x * x) ** gamma)


def _frbm_grad(lam, theta):
    alpha, gamma, c = theta
    x2 = np.asarray(lam, dtype=float) ** 2
    return np.array([-np.log(x2), -np.log1p(x2), np.full_like(x2, 1.0 / c)])


DEFAULT_FRBM_BOX = ((0.01, 0.49), (0.5, 2.0), (0.1, 10.0))


def frbm_family(bounds=DEFAULT_FRBM_BOX) -> SpectralModelFamily:
    """FRBM densities with theta = (alpha, gamma, c) and analytic gradients."""
    return SpectralModelFamily(_frbm_f, tuple(bounds), ("alpha", "gamma", "c"), _frbm_grad, "frbm")


def identifiability_check(family: SpectralModelFamily, grid: np.ndarray, samples: int = 20,
                          seed: int = 0, tol: float = 1e-8) -> bool:
    """Spot check that distinct sampled parameters give distinct densities on the grid."""
    pts = _box_points(family.bounds, samples, seed)
    logs = [family.log_f(grid, p) for p in pts]
    for i in range(samples):
        for j in range(i + 1, samples):
            if np.max(np.abs(logs[i] - logs[j])) <= tol:
                return False
    return True


def _box_points(bounds, n: int, seed: int = 0) -> np.ndarray:
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    u = qmc.Halton(d=len(bounds), scramble=True, seed=seed).random(n)
    return lo + u * (hi - lo)


# ------------------------------------------------------------ factorisation

@dataclass(frozen=True)
class FactorizedFamily:
    """f(lambda; theta) = sigma^2(theta) psi(lambda; theta) with int psi w = 1.

    ``log_sigma2`` may carry analytic derivatives (``grad_log_sigma2``,
    ``hess_log_sigma2``); otherwise quadrature and differences are used.
    """

    base: SpectralModelFamily
    weight: WeightFunction
    log_sigma2: Callable | None = None
    grad_log_sigma2: Callable | None = None
    hess_log_sigma2: Callable | None = None
    hess_log_f: Callable | None = None

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def bounds(self):
        return self.base.bounds

    def sigma2(self, theta) -> float:
        if self.log_sigma2 is not None:
            return float(np.exp(self.log_sigma2(np.asarray(theta, dtype=float))))
        return line_integral(lambda x: self.base(x, theta) * self.weight(x))

    def psi(self, lam, theta) -> np.ndarray:
        return self.base(lam, theta) / self.sigma2(theta)

    def log_psi(self, lam, theta) -> np.ndarray:
        return self.base.log_f(lam, theta) - math.log(self.sigma2(theta))

    def grad_log_psi(self, lam, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        g = self.base.grad(lam, theta)
        if self.grad_log_sigma2 is not None:
            gs = np.asarray(self.grad_log_sigma2(theta))
        else:
            gs = _central_grad(lambda t: np.array(math.log(self.sigma2(t))), theta)
        return g - gs.reshape((-1,) + (1,) * (g.ndim - 1))

    def hess_log_psi(self, lam, theta) -> np.ndarray:
        """Array (m, m, *lam.shape) of second derivatives of log psi."""
        theta = np.asarray(theta, dtype=float)
        lam = np.asarray(lam, dtype=float)
        if self.hess_log_f is not None and self.hess_log_sigma2 is not None:
            hf = np.asarray(self.hess_log_f(lam, theta))
            hs = np.asarray(self.hess_log_sigma2(theta))
            return hf - hs.reshape(hs.shape + (1,) * lam.ndim)
        m = self.dim
        out = np.empty((m, m) + lam.shape)
        for i in range(m):
            h = FD_STEP * max(1.0, abs(theta[i]))
            e = np.zeros(m)
            e[i] = h
            out[i] = (self.grad_log_psi(lam, theta + e) - self.grad_log_psi(lam, theta - e)) / (2 * h)
        return 0.5 * (out + np.swapaxes(out, 0, 1))


def _frbm_shape_f(lam, theta):
    return _frbm_f(lam, (theta[0], theta[1], 1.0))


def _frbm_shape_grad(lam, theta):
    return _frbm_grad(lam, (theta[0], theta[1], 1.0))[:2]


def frbm_factorized(weight: WeightFunction, bounds=DEFAULT_FRBM_BOX[:2]) -> FactorizedFamily:
    """FRBM shape parameters (alpha, gamma) under a power weight, in closed form.

    sigma^2(theta) = B(b - alpha + 1/2, a + gamma - b + alpha - 1/2) for c = 1,
    and log f is linear in (alpha, gamma), so the Hessian of log psi is the
    negative Hessian of log sigma^2.
    """
    params = dict(weight.params)
    if weight.name != "power":
        raise ValueError("closed-form factorisation needs a power weight")
    a, b = params["a"], params["b"]

    def xy(theta):
        alpha, gamma = theta[0], theta[1]
        return b - alpha + 0.5, a + gamma - b + alpha - 0.5

    def log_s2(theta):
        x, y = xy(theta)
        if x <= 0 or y <= 0:
            raise ValueError("weighted FRBM density is not integrable")
        return special.betaln(x, y)

    def grad_s2(theta):
        x, y = xy(theta)
        return np.array([special.digamma(y) - special.digamma(x),
                         special.digamma(y) - special.digamma(x + y)])

    def hess_s2(theta):
        x, y = xy(theta)
        t1, ty, txy = special.polygamma(1, x), special.polygamma(1, y), special.polygamma(1, x + y)
        return np.array([[t1 + ty, ty], [ty, ty - txy]])

    base = SpectralModelFamily(_frbm_shape_f, tuple(bounds), ("alpha", "gamma"), _frbm_shape_grad, "frbm-shape")
    zero_hess = lambda lam, theta: np.zeros((2, 2) + np.shape(lam))
    return FactorizedFamily(base, weight, log_s2, grad_s2, hess_s2, zero_hess)


# ------------------------------------------------------------ quadrature

def line_integral(g: Callable, cutoff: float | None = None) -> float:
    """int_R g for even g, split at 1 so log singularities at 0 stay endpoint ones."""
    scalar = lambda x: float(g(np.array(x)))
    head = integrate.quad(scalar, 0, 1, limit=400)[0]
    if cutoff is None:
        tail = integrate.quad(scalar, 1, np.inf, limit=400)[0]
    elif cutoff > 1:
        tail = integrate.quad(scalar, 1, cutoff, limit=400)[0]
    else:
        head = integrate.quad(scalar, 0, cutoff, limit=400)[0]
        tail = 0.0
    return 2 * (head + tail)


def log_nodes(n: int = 4001, smin: float = -40.0, smax: float = 40.0) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for int_R g of even g via lambda = e^s and the trapezoid rule.

    The substitution turns power-law ends into exponential decay, where the
    trapezoid rule converges geometrically.
    """
    s = np.linspace(smin, smax, n)
    h = s[1] - s[0]
    x = np.exp(s)
    wts = 2 * h * x
    wts[0] *= 0.5
    wts[-1] *= 0.5
    return x, wts


# ------------------------------------------------------------ periodogram container

@dataclass(frozen=True)
class PeriodogramData:
    """Periodogram on positive frequencies with spacing ``dlam``."""

    freqs: np.ndarray
    values: np.ndarray
    dlam: float

    @classmethod
    def from_series(cls, series: processes.SampleSeries) -> "PeriodogramData":
        lam, I = processes.periodogram(series)
        return cls(lam, I, 2 * np.pi / series.length)

    @classmethod
    def from_density(cls, family: SpectralModelFamily, theta, n: int, step: float) -> "PeriodogramData":
        """Population version: I replaced by f(.; theta) on the same grid."""
        lam = processes.fourier_frequencies(n, step)
        return cls(lam, family(lam, theta), 2 * np.pi / (n * step))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# dlam={self.dlam!r}\nlambda,I\n")
        for x, y in zip(self.freqs, self.values):
            buf.write(f"{float(x)!r},{float(y)!r}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "PeriodogramData":
        dlam, rows, header = None, [], False
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                if key == "dlam":
                    dlam = float(val)
                continue
            if not header:
                header = True
                continue
            x, y = line.split(",")
            rows.append((float(x), float(y)))
        arr = np.array(rows)
        if dlam is None:
            dlam = float(arr[1, 0] - arr[0, 0])
        return cls(arr[:, 0], arr[:, 1], dlam)


# ------------------------------------------------------------ objectives and contrasts

def whittle_objective(pg: PeriodogramData, family: SpectralModelFamily, w: WeightFunction, theta) -> float:
    """(4 pi)^-1 sum over +-frequencies of (log f + I / f) w dlam."""
    f = family(pg.freqs, theta)
    if np.any(f <= 0) or not np.all(np.isfinite(f)):
        raise ValueError("spectral density must be positive and finite on the grid")
    terms = (np.log(f) + pg.values / f) * w(pg.freqs)
    return 2 * math.fsum(terms) * pg.dlam / (4 * np.pi)


def whittle_contrast(family: SpectralModelFamily, w: WeightFunction, theta0, theta,
                     cutoff: float | None = None, nodes: tuple | None = None) -> float:
    """(4 pi)^-1 int (f0 / f - 1 - log(f0 / f)) w d lambda, non-negative.

    Adaptive quadrature by default; ``nodes`` from :func:`log_nodes` gives
    a fixed rule suited to scanning many parameter values.
    """
    def g(x):
        r = family(x, theta0) / family(x, theta)
        return (r - 1 - np.log(r)) * w(x)

    if nodes is not None:
        x, wts = nodes
        return float(np.dot(g(x), wts)) / (4 * np.pi)
    return line_integral(g, cutoff) / (4 * np.pi)


def ibragimov_objective(pg: PeriodogramData, fam: FactorizedFamily, theta) -> float:
    """-sum over +-frequencies of I w log psi dlam."""
    psi = fam.psi(pg.freqs, theta)
    if np.any(psi <= 0):
        raise ValueError("psi must be positive on the grid")
    return -2 * math.fsum(pg.values * fam.weight(pg.freqs) * np.log(psi)) * pg.dlam


def ibragimov_contrast(fam: FactorizedFamily, theta0, theta, cutoff: float | None = None) -> float:
    """int f0 w log(psi0 / psi) d lambda, non-negative by Jensen."""
    s0, s1 = fam.sigma2(theta0), fam.sigma2(theta)

    def g(x):
        f0 = fam.base(x, theta0)
        return f0 * fam.weight(x) * (np.log(f0 / s0) - np.log(fam.base(x, theta) / s1))

    return line_integral(g, cutoff)


def psi_normalization(fam: FactorizedFamily, theta) -> float:
    """int psi w d lambda by quadrature (should be 1)."""
    return line_integral(lambda x: fam.psi(x, theta) * fam.weight(x))


def sigma2_estimate(pg: PeriodogramData, w: WeightFunction) -> float:
    """Weighted periodogram integral over +-frequencies."""
    return 2 * math.fsum(pg.values * w(pg.freqs)) * pg.dlam


# ------------------------------------------------------------ optimiser

@dataclass
class EstimationResult:
    theta: np.ndarray
    objective: float
    iterations: int
    converged: bool
    names: tuple[str, ...] = ()
    covariance: np.ndarray | None = None
    conditions: list | None = None
    trace: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "theta": dict(zip(self.names, map(float, self.theta))) if self.names else list(map(float, self.theta)),
            "objective": float(self.objective),
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
            "covariance": None if self.covariance is None else np.asarray(self.covariance).tolist(),
            "conditions": self.conditions,
            "trace": self.trace,
            "metadata": self.metadata,
        }


def fit(objective: Callable, bounds: Sequence[tuple[float, float]], starts: int = 5, xatol: float = 1e-6,
        maxiter: int = 4000, x0=None, names: Sequence[str] = ()) -> EstimationResult:
    """Multi-start Nelder-Mead in unit-cube coordinates with box clipping.

    Starts are the first ``starts`` non-trivial points of the Halton
    sequence (plus ``x0`` when given). The lowest objective wins; ties go
    to the earlier start. A start that hits ``maxiter`` is flagged in the
    trace and the result, not raised.
    """
    lo = np.array([b[0] for b in bounds], dtype=float)
    hi = np.array([b[1] for b in bounds], dtype=float)
    if np.any(hi <= lo):
        raise ValueError("empty parameter box")
    m = len(bounds)
    to_theta = lambda u: lo + np.clip(u, 0, 1) * (hi - lo)
    pts = list(qmc.Halton(d=m, scramble=False).random(starts + 1)[1:])
    if x0 is not None:
        pts.insert(0, (np.asarray(x0, dtype=float) - lo) / (hi - lo))

    def fun(u):
        val = objective(to_theta(u))
        return val if np.isfinite(val) else 1e300

    best, trace = None, []
    for k, u0 in enumerate(pts):
        res = optimize.minimize(fun, np.clip(u0, 0, 1), method="Nelder-Mead", bounds=[(0, 1)] * m,
                                options={"xatol": xatol, "fatol": np.inf, "maxiter": maxiter, "maxfev": 4 * maxiter})
        theta = to_theta(res.x)
        trace.append({"start": k, "theta": theta.tolist(), "objective": float(res.fun),
                      "iterations": int(res.nit), "converged": bool(res.success)})
        if best is None or res.fun < best[1].fun:
            best = (theta, res)
    theta, res = best
    return EstimationResult(theta, float(res.fun), int(res.nit), bool(res.success), tuple(names), trace=trace)


def fit_whittle(pg: PeriodogramData, family: SpectralModelFamily, w: WeightFunction, **kw) -> EstimationResult:
    res = fit(lambda t: whittle_objective(pg, family, w, t), family.bounds, names=family.names, **kw)
    res.metadata.update({"contrast": "whittle", "n_freqs": len(pg.freqs), "dlam": pg.dlam})
    return res


def fit_ibragimov(pg: PeriodogramData, fam: FactorizedFamily, **kw) -> EstimationResult:
    res = fit(lambda t: ibragimov_objective(pg, fam, t), fam.bounds, names=fam.base.names, **kw)
    res.metadata.update({"contrast": "ibragimov", "n_freqs": len(pg.freqs), "dlam": pg.dlam,
                         "sigma2_hat": sigma2_estimate(pg, fam.weight)})
    return res


# ------------------------------------------------------------ asymptotic covariances

def _ratio(d2: float, d4: float, convention: str) -> float:
    if convention not in ("time", "spectral"):
        raise ValueError("convention must be 'time' or 'spectral'")
    r = d4 / d2 ** 2
    return r / (2 * np.pi) if convention == "time" else r


def _sym_matrix(m: int, entry: Callable[[int, int], float]) -> np.ndarray:
    out = np.empty((m, m))
    for i in range(m):
        for j in range(i, m):
            out[i, j] = out[j, i] = entry(i, j)
    return out


@dataclass
class SandwichCovariance:
    """Bread, meat and sandwich matrices with diagnostics."""

    bread: np.ndarray
    meat_parts: dict
    sigma: np.ndarray | None
    flags: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"bread": self.bread.tolist(), **{k: v.tolist() for k, v in self.meat_parts.items()},
                "sigma": None if self.sigma is None else self.sigma.tolist(), "flags": self.flags,
                **{k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in self.extra.items()}}


def _sandwich(bread: np.ndarray, meat: np.ndarray, what: str) -> tuple[np.ndarray | None, list]:
    flags = []
    if np.linalg.cond(bread) > 1e12:
        return None, [f"{what} is singular"]
    inv = np.linalg.inv(bread)
    sig = inv @ meat @ inv
    sig = 0.5 * (sig + sig.T)
    for name, mat in ((what, bread), ("sandwich", sig)):
        if np.min(np.linalg.eigvalsh(0.5 * (mat + mat.T))) <= 0:
            flags.append(f"{name} is not positive definite")
    return sig, flags


def whittle_asymptotic_cov(family: SpectralModelFamily, w: WeightFunction, theta, d2: float = 1.0,
                           d4: float = 0.0, convention: str = "time") -> SandwichCovariance:
    """W_1, W_2, V and W_1^-1 (W_2 + V) W_1^-1 by quadrature over the line.

    w1_ij = (4 pi)^-1 int w d_i log f d_j log f, w2_ij the same with w^2,
    v_ij = (8 pi)^-1 rho int w d_i log f int w d_j log f with rho the
    spectral-convention ratio d_4 / d_2^2.
    """
    m = family.dim
    g = lambda x, i: family.grad(x, theta)[i]
    W1 = _sym_matrix(m, lambda i, j: line_integral(lambda x: w(x) * g(x, i) * g(x, j)) / (4 * np.pi))
    W2 = _sym_matrix(m, lambda i, j: line_integral(lambda x: w(x) ** 2 * g(x, i) * g(x, j)) / (4 * np.pi))
    rho = _ratio(d2, d4, convention)
    lin = np.array([line_integral(lambda x: w(x) * g(x, i)) for i in range(m)])
    V = rho / (8 * np.pi) * np.outer(lin, lin)
    sig, flags = _sandwich(W1, W2 + V, "W1")
    if np.min(np.linalg.eigvalsh(W2)) <= 0:
        flags.append("W2 is not positive definite")
    return SandwichCovariance(W1, {"W2": W2, "V": V}, sig, flags)


def _beta_log_moments(s: float, q: float) -> dict:
    """Closed forms of int |x|^(2s) (1 + x^2)^-q (ln x^2)^i (ln(1 + x^2))^j dx, i + j <= 2.

    Derivatives of B(s + 1/2, q - s - 1/2) in s give powers of ln x^2 and
    derivatives in q give powers of -ln(1 + x^2).
    """
    x, y = s + 0.5, q - s - 0.5
    B = special.beta(x, y)
    dg, tg = special.digamma, lambda z: special.polygamma(1, z)
    ds = dg(x) - dg(y)
    dq = dg(y) - dg(q)
    dss = tg(x) + tg(y)
    dqq = tg(y) - tg(q)
    dsq = -tg(y)
    return {
        (0, 0): B,
        (1, 0): B * ds,
        (0, 1): -B * dq,
        (2, 0): B * (dss + ds * ds),
        (0, 2): B * (dqq + dq * dq),
        (1, 1): -B * (dsq + ds * dq),
    }


def frbm_whittle_closed_form(a: float, b: float, c0: float, d2: float = 1.0, d4: float = 0.0,
                             convention: str = "time") -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """W_1, W_2, V for FRBM under w = |x|^(2b) / (1 + x^2)^a, order (alpha, gamma, c).

    Entries reduce to log-moments of Beta-type integrals; only c0 enters.
    """
    def mats(mom):
        L, G = mom[(1, 0)], mom[(0, 1)]  # ln x^2, ln(1 + x^2)
        M = np.array([
            [mom[(2, 0)], mom[(1, 1)], -L / c0],
            [mom[(1, 1)], mom[(0, 2)], -G / c0],
            [-L / c0, -G / c0, mom[(0, 0)] / c0 ** 2],
        ])
        return M / (4 * np.pi), np.array([-L, -G, mom[(0, 0)] / c0])

    W1, lin = mats(_beta_log_moments(b, a))
    W2, _ = mats(_beta_log_moments(2 * b, 2 * a))
    V = _ratio(d2, d4, convention) / (8 * np.pi) * np.outer(lin, lin)
    return W1, W2, V


def ibragimov_asymptotic_cov(fam: FactorizedFamily, theta, d2: float = 1.0, d4: float = 0.0,
                             convention: str = "time", scale: float = 1.0) -> SandwichCovariance:
    """S, A and S^-1 A S^-1 for the factorised contrast.

    S is the Hessian of the contrast, s_ij = -int f w d_ij log psi, which
    is positive definite; route two evaluates
    -sigma^2 int w (d_ij psi - d_i psi d_j psi / psi) with psi
    differentiated numerically. a_ij = 4 pi int f^2 w^2 d_i log psi d_j log psi
    + 2 pi rho int w f d_i psi / psi int w f d_j psi / psi. The density is
    f = scale * sigma^2(theta) psi.
    """
    theta = np.asarray(theta, dtype=float)
    m = fam.dim
    w = fam.weight
    f = lambda x: scale * fam.base(x, theta)
    H = lambda x, i, j: fam.hess_log_psi(x, theta)[i, j]
    G = lambda x, i: fam.grad_log_psi(x, theta)[i]
    S = _sym_matrix(m, lambda i, j: -line_integral(lambda x: f(x) * w(x) * H(x, i, j)))
    S_alt = _psi_difference_hessian(fam, theta, scale)
    A = _sym_matrix(m, lambda i, j: 4 * np.pi * line_integral(lambda x: (f(x) * w(x)) ** 2 * G(x, i) * G(x, j)))
    rho = _ratio(d2, d4, convention)
    lin = np.array([line_integral(lambda x: w(x) * f(x) * G(x, i)) for i in range(m)])
    A4 = 2 * np.pi * rho * np.outer(lin, lin)
    sig, flags = _sandwich(S, A + A4, "S")
    gap = float(np.max(np.abs(S - S_alt)) / np.max(np.abs(S)))
    return SandwichCovariance(S, {"A_gaussian": A, "A_fourth": A4}, sig, flags,
                              {"S_alt": S_alt, "s_route_gap": gap, "sigma2": scale * fam.sigma2(theta)})


def _psi_difference_hessian(fam: FactorizedFamily, theta: np.ndarray, scale: float) -> np.ndarray:
    """Second route for S with psi differentiated by five-point stencils."""
    m = fam.dim
    h = 1e-3

    def psi_at(x, shift):
        return fam.psi(x, theta + shift)

    def d1(x, i):
        e = np.zeros(m)
        e[i] = h
        return (-psi_at(x, 2 * e) + 8 * psi_at(x, e) - 8 * psi_at(x, -e) + psi_at(x, -2 * e)) / (12 * h)

    def d2(x, i, j):
        ei = np.zeros(m)
        ei[i] = h
        if i == j:
            return (-psi_at(x, 2 * ei) + 16 * psi_at(x, ei) - 30 * psi_at(x, 0 * ei)
                    + 16 * psi_at(x, -ei) - psi_at(x, -2 * ei)) / (12 * h * h)
        ej = np.zeros(m)
        ej[j] = h
        return (psi_at(x, ei + ej) - psi_at(x, ei - ej) - psi_at(x, ej - ei) + psi_at(x, -ei - ej)) / (4 * h * h)

    s2 = scale * fam.sigma2(theta)
    w = fam.weight
    return _sym_matrix(m, lambda i, j: -s2 * line_integral(
        lambda x: w(x) * (d2(x, i, j) - d1(x, i) * d1(x, j) / psi_at(x, np.zeros(m)))))


# ------------------------------------------------------------ condition checks

def _tail_slope(g: Callable, xs: Sequence[float]) -> float:
    v = np.abs(np.array([float(g(np.array(x))) for x in xs]))
    if np.any(v == 0):
        return -np.inf
    return float(np.polyfit(np.log(xs), np.log(v), 1)[0])


def lp_status(g: Callable, p: float, margin: float = 0.05) -> str:
    """L_p(R) membership of g from log-log slopes near 0 and infinity.

    |g|^p is integrable at infinity when its slope is below -1 and at 0
    when it is above -1; slopes within ``margin`` of -1 are inconclusive.
    """
    small = _tail_slope(g, [1e-7, 1e-8, 1e-9]) * p
    large = _tail_slope(g, [1e6, 1e7, 1e8]) * p
    if not np.isfinite(large):
        large = -np.inf
    if small > -1 + margin and large < -1 - margin:
        return "pass"
    if small < -1 - margin or large > -1 + margin:
        return "fail"
    return "inconclusive"


def _combine(statuses: Sequence[str]) -> str:
    if "fail" in statuses:
        return "fail"
    if "inconclusive" in statuses:
        return "inconclusive"
    return "pass"


def frbm_weight_constraints(a: float, b: float, gamma_range: float) -> dict:
    """{b > 1}, {a > b + 2} and {a > A + 2} with A the length of the gamma range."""
    checks = {"b>1": b > 1, "a>b+2": a > b + 2, "a>A+2": a > gamma_range + 2}
    return {"checks": checks, "status": "pass" if all(checks.values()) else "fail"}


def window_bias_ladder(theta: processes.ThetaFRBM, family: SpectralModelFamily, w: WeightFunction,
                       step: float, n_list: Sequence[int]) -> list[float]:
    """sqrt(T) int (E I_T - f_h) w d_i(1/f) over the grid, for each n in ``n_list``.

    E I_T is exact for the sampled process; f_h is its aliased density, so
    only the finite-window part of the bias is measured.
    """
    out = []
    th = np.array([theta.alpha, theta.gamma, theta.c])
    for n in n_list:
        syn = processes.synthesize_frbm(theta, n, step)
        g = syn.kernel
        M = len(g)
        r = np.fft.irfft(np.abs(np.fft.rfft(g)) ** 2, M) * step  # r(k h), k < M
        k = np.arange(n)
        acov = np.where(k == 0, n, 2 * (n - k)) * r[:n]
        lam = processes.fourier_frequencies(n, step)
        EI = step * step / (2 * np.pi * n * step) * (np.cos(np.multiply.outer(lam * step, k)) @ acov)
        f_alias = processes.frbm_aliased(lam, theta, step)
        f = family(lam, th)
        grads = family.grad(lam, th)
        vals = [2 * np.sum((EI - f_alias) * w(lam) * (-grads[i] / f)) * 2 * np.pi / (n * step)
                for i in range(family.dim)]
        out.append(math.sqrt(n * step) * float(np.max(np.abs(vals))))
    return out


def check_conditions(family: SpectralModelFamily, w: WeightFunction, theta0, thetas: Sequence,
                     pq: tuple[float, float] = (2.0, math.inf), weight_params: tuple | None = None,
                     fam: FactorizedFamily | None = None, bias_ladder: Sequence[int] | None = None,
                     step: float = 0.25) -> list[dict]:
    """Report pass/fail/inconclusive per condition for a family and weight.

    Integrability conditions are judged by :func:`lp_status`; (p, q) is the
    declared Hölder pair for the mixed condition; ``weight_params`` given as
    (a, b, gamma_range) adds the power-weight restrictions.
    """
    theta0 = np.asarray(theta0, dtype=float)
    report = []

    def add(name, status, **detail):
        report.append({"condition": name, "status": status, **detail})

    grid = np.linspace(0.01, 50, 500)
    add("weight non-negative and even", "pass" if w.check(grid) else "fail")
    add("identifiability spot check", "pass" if identifiability_check(family, grid) else "fail")
    f0 = lambda x: family(x, theta0)

    st = [_combine([lp_status(lambda x: f0(x) * w(x) / family(x, t), p) for p in (1, 2)]) for t in thetas]
    add("consistency: f0 w / f in L1 and L2", _combine(st))

    st = []
    for t in thetas:
        for i in range(family.dim):
            for j in range(family.dim):
                def g(x, t=t, i=i, j=j):
                    gr = family.grad(x, t)
                    # second derivative of 1/f: (d_i log f d_j log f - d_ij log f) / f
                    hij = _central_grad(lambda s: family.grad(x, s)[i], np.asarray(t, dtype=float))[j]
                    return f0(x) * w(x) * (gr[i] * gr[j] - hij) / family(x, t)
                st.extend(lp_status(g, p) for p in (1, 2))
    add("normality: f0 w d_ij(1/f) in L1 and L2", _combine(st))

    p, q = pq
    holder = 1 / p + 1 / q <= 0.5
    st = [lp_status(f0, p)] if math.isfinite(p) else []
    for t in thetas:
        for i in range(family.dim):
            g = lambda x, t=t, i=i: w(x) * family.grad(x, t)[i] / family(x, t)
            st.append(lp_status(g, q) if math.isfinite(q) else
                      ("pass" if np.all(np.isfinite(g(np.logspace(-9, 8, 200)))) and
                       _tail_slope(g, [1e6, 1e7, 1e8]) <= 0 and _tail_slope(g, [1e-7, 1e-8, 1e-9]) >= 0 else "fail"))
    add("normality: f0 in L_p, w d_i(1/f) in L_q", _combine(st) if holder else "fail",
        p=p, q=q, holder_ok=holder)

    if weight_params is not None:
        a, b, A = weight_params
        res = frbm_weight_constraints(a, b, A)
        add("power-weight restrictions", res["status"], **res["checks"])

    if fam is not None:
        st = [_combine([lp_status(lambda x, t=t: f0(x) * w(x) * fam.log_psi(x, t), p) for p in (1, 2)])
              for t in thetas]
        add("factorised: f0 w log psi in L1 and L2", _combine(st))
        st = []
        for t in thetas:
            for i in range(fam.dim):
                g = lambda x, t=t, i=i: w(x) * fam.grad_log_psi(x, t)[i]
                st.append(lp_status(g, q) if math.isfinite(q) else
                          ("pass" if _tail_slope(g, [1e6, 1e7, 1e8]) <= 0 else "fail"))
        add("factorised: w d_i log psi in L_q", _combine(st) if holder else "fail")

    if bias_ladder is not None and family.name == "frbm":
        th = processes.ThetaFRBM(*theta0)
        vals = window_bias_ladder(th, family, w, step, bias_ladder)
        decreasing = all(b2 < b1 for b1, b2 in zip(vals, vals[1:]))
        add("window bias decays", "pass" if decreasing else "inconclusive", values=vals, n=list(bias_ladder))
    return report


# ------------------------------------------------------------ Monte Carlo

def mc_whittle(theta0: processes.ThetaFRBM, n: int, step: float, replicas: int, seed: int,
               w: WeightFunction, family: SpectralModelFamily | None = None,
               innovation: processes.Innovation = processes.Innovation(), threads: int = 1,
               starts: int = 2) -> np.ndarray:
    """Whittle estimates for ``replicas`` synthetic FRBM paths, one row per replica."""
    family = family or frbm_family()
    syn = processes.synthesize_frbm(theta0, n, step, innovation)
    gens = processes.replica_generators(seed, replicas)
    x0 = theta0.as_array()

    def run(i):
        pg = PeriodogramData.from_series(syn.sample(gens[i]))
        return fit_whittle(pg, family, w, starts=starts, x0=x0).theta

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return np.array(list(pool.map(run, range(replicas))))
    return np.array([run(i) for i in range(replicas)])


def mc_sigma2(theta0: processes.ThetaFRBM, n: int, step: float, replicas: int, seed: int,
              w: WeightFunction, innovation: processes.Innovation = processes.Innovation()) -> np.ndarray:
    """Weighted periodogram integrals for synthetic FRBM paths."""
    syn = processes.synthesize_frbm(theta0, n, step, innovation)
    gens = processes.replica_generators(seed, replicas)
    return np.array([sigma2_estimate(PeriodogramData.from_series(syn.sample(g)), w) for g in gens])
