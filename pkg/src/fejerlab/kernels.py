"""Dirichlet and multivariate Fejér kernels on the torus and the line.

Conventions
-----------
Torus frequencies live in [-pi, pi)^d with the normalised Lebesgue measure;
line frequencies carry plain Lebesgue measure. The discrete kernel of
window size ``T`` is the symmetric sum over t = -T/2, ..., T/2, i.e. T + 1
points; ``dirichlet_points`` gives the general n-point closed form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

SMALL = 1e-6
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


@dataclass(frozen=True)
class SpectralDomain:
    """Spectral space: ``kind`` is "torus" or "line", ``d`` in {1, 2}."""

    kind: str = "torus"
    d: int = 1

    def __post_init__(self):
        if self.kind not in ("torus", "line"):
            raise ValueError(f"unknown domain {self.kind!r}")
        if self.d not in (1, 2):
            raise ValueError("only d = 1 and d = 2 are supported")

    @property
    def discrete(self) -> bool:
        return self.kind == "torus"


def as_domain(domain, d: int | None = None) -> SpectralDomain:
    if isinstance(domain, SpectralDomain):
        return domain if d is None or d == domain.d else SpectralDomain(domain.kind, d)
    return SpectralDomain(str(domain), 1 if d is None else d)


def reduce_torus(lam):
    """Map frequencies to [-pi, pi)."""
    return np.mod(np.asarray(lam, dtype=float) + np.pi, 2 * np.pi) - np.pi


def dirichlet_points(n, lam):
    """sin(n lam / 2) / sin(lam / 2), the n-point symmetric exponential sum.

    No reduction modulo 2 pi is applied: for even ``n`` the sum has
    half-integer frequencies and is anti-periodic, which matters when
    kernels are multiplied along graph cycles. Near multiples of 2 pi the
    removable singularity is evaluated by its series.
    """
    lam = np.asarray(lam, dtype=float)
    k = np.round(lam / (2 * np.pi))
    x = lam - 2 * np.pi * k
    sign = np.where(np.mod(k * (n - 1), 2) == 0, 1.0, -1.0)
    small = np.abs(x) < SMALL
    with np.errstate(invalid="ignore", divide="ignore"):
        val = np.sin(n * lam / 2) / np.sin(lam / 2)
    series = sign * n * (1 - (n * n - 1) * x * x / 24)
    out = np.where(small, series, val)
    return out if out.ndim else float(out)


def dirichlet(T, lam, domain="torus", d: int | None = None):
    """Dirichlet kernel of window size T.

    Torus: sum_{t=-T/2}^{T/2} e^{i t lam} = sin((T+1) lam/2) / sin(lam/2),
    evaluated on the reduced frequency. Line: sin(T lam/2) / (lam/2).
    For d = 2 the last axis of ``lam`` holds the coordinates and the
    kernel is the product over them.
    """
    dom = as_domain(domain, d)
    if T <= 0:
        raise ValueError("T must be positive")
    lam = np.asarray(lam, dtype=float)
    if dom.d == 2:
        if lam.shape[-1] != 2:
            raise ValueError("d = 2 needs a trailing axis of length 2")
        return dirichlet(T, lam[..., 0], dom.kind, 1) * dirichlet(T, lam[..., 1], dom.kind, 1)
    if dom.discrete:
        return dirichlet_points(T + 1, reduce_torus(lam))
    out = T * np.sinc(T * lam / (2 * np.pi))
    return out if np.ndim(out) else float(out)


def window_measure(T, domain="torus", d: int | None = None) -> float:
    """mu(I_T): number of lattice points (torus) or volume (line)."""
    dom = as_domain(domain, d)
    return float((T + 1) ** dom.d) if dom.discrete else float(T ** dom.d)


def fejer_multi(T, u, n: int, domain="torus", d: int | None = None):
    """Multivariate Fejér kernel with n - 1 free arguments.

    ``u`` has shape (..., n-1) for d = 1 or (..., n-1, 2) for d = 2. The
    kernel is normalised by (2 pi)^((n-1) d) times the measure of the
    window, so it integrates to one against Lebesgue measure.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    dom = as_domain(domain, d)
    u = np.asarray(u, dtype=float)
    axis = -2 if dom.d == 2 else -1
    if u.shape[axis] != n - 1:
        raise ValueError(f"expected {n - 1} arguments along the free axis")
    total = -u.sum(axis=axis)
    val = dirichlet(T, total, dom)
    for e in range(n - 1):
        val = val * dirichlet(T, np.take(u, e, axis=axis), dom)
    norm = (2 * np.pi) ** ((n - 1) * dom.d) * window_measure(T, dom)
    return val / norm


# ------------------------------------------------------------------ norms

def _lobe_quadrature(func: Callable, breaks: np.ndarray) -> float:
    """Gauss-Legendre on every panel [breaks[i], breaks[i+1]]."""
    a, b = breaks[:-1, None], breaks[1:, None]
    x = (a + b) / 2 + (b - a) / 2 * _GL_NODES[None, :]
    vals = func(x)
    return float(np.sum(vals * _GL_WEIGHTS[None, :] * (b - a) / 2))


def _abs_sin_mean(p: float) -> float:
    """Average of |sin|^p over a period."""
    return math.gamma((p + 1) / 2) / (math.sqrt(math.pi) * math.gamma(p / 2 + 1))


def discrete_norm_power(T: int, p: float) -> float:
    """int_0^1 |sum_{t=0}^{T-1} e^{2 pi i t x}|^p dx by quadrature between zeros."""
    T = int(T)
    if T == 1:
        return 1.0
    breaks = np.arange(0, T // 2 + 1) / T
    if T % 2:
        breaks = np.append(breaks, 0.5)

    def f(x):
        return np.abs(np.sin(np.pi * T * x) / np.sin(np.pi * x)) ** p

    return 2.0 * _lobe_quadrature(f, breaks)


def discrete_norm_power_exact(T: int, p: int) -> int:
    """Exact value for even integer p: number of equal-sum 2q-tuples in [0, T)."""
    if p % 2 or p <= 0:
        raise ValueError("exact evaluation needs a positive even integer p")
    q = p // 2
    counts = [1]
    for _ in range(q):
        nxt = [0] * (len(counts) + T - 1)
        for i, c in enumerate(counts):
            for t in range(T):
                nxt[i + t] += c
        counts = nxt
    return sum(c * c for c in counts)


def sinc_power_integral(p: float, lobes: int = 20000) -> float:
    """int_R |sin z / z|^p dz with an averaged analytic tail."""
    breaks = np.arange(0, lobes + 1) * np.pi

    def f(x):
        return np.abs(np.sinc(x / np.pi)) ** p

    head = _lobe_quadrature(f, breaks)
    z0 = breaks[-1]
    tail = _abs_sin_mean(p) * z0 ** (1 - p) / (p - 1)
    return 2.0 * (head + tail)


def continuous_norm_power(T: float, p: float, lobes: int = 20000) -> float:
    """int_R |sin(T lam/2)/(lam/2)|^p d lam by lobe-wise quadrature.

    Beyond the last lobe the oscillating factor |sin|^p is replaced by its
    mean; the neglected oscillatory part is O(Lambda^-p) per unit length.
    """
    breaks = np.arange(0, lobes + 1) * (2 * np.pi / T)

    def f(x):
        return np.abs(T * np.sinc(T * x / (2 * np.pi))) ** p

    head = _lobe_quadrature(f, breaks)
    lam0 = breaks[-1]
    tail = _abs_sin_mean(p) * 2 ** p * lam0 ** (1 - p) / (p - 1)
    return 2.0 * (head + tail)


DISCRETE_BOUND_CONSTANT = 1 + math.pi  # |sin(T x/2)/sin(x/2)| <= (1+pi) T / (1 + T|x|) on [-pi, pi]


def kernel_norm(T, p: float, domain="torus", d: int | None = None, method: str = "quadrature") -> float:
    """L_p norm of the Dirichlet kernel.

    Torus: the T-term kernel with the normalised measure (equivalently the
    unit interval). Line: sin(T lam/2)/(lam/2) with Lebesgue measure. For
    d = 2 the norm factorises over coordinates.

    Methods
    -------
    ``quadrature``
        numerical integration.
    ``exact``
        lattice-point count, torus with even integer p only.
    ``closed-form-bound``
        torus: (1+pi) T^(1-1/p) (pi (p-1))^(-1/p), from the pointwise bound;
        line: T^(1-1/p) C_p with C_p = (2 int |sin z/z|^p)^(1/p).
    """
    dom = as_domain(domain, d)
    if method == "closed-form-bound" and p <= 1:
        raise ValueError("the bound needs p > 1")
    if p < 1:
        raise ValueError("p must be at least 1")
    if method == "quadrature":
        one = discrete_norm_power(int(T), p) if dom.discrete else continuous_norm_power(T, p)
    elif method == "exact":
        if not dom.discrete:
            raise ValueError("exact evaluation is only available on the torus")
        one = float(discrete_norm_power_exact(int(T), int(p)))
    elif method == "closed-form-bound":
        if dom.discrete:
            one = (DISCRETE_BOUND_CONSTANT ** p) * T ** (p - 1) / (math.pi * (p - 1))
        else:
            one = T ** (p - 1) * 2 * sinc_power_integral(p)
    else:
        raise ValueError(f"unknown method {method!r}")
    return one ** (dom.d / p)


@dataclass(frozen=True)
class L1Asymptotic:
    T: int
    value: float
    reference: float
    ratio: float


def dirichlet_l1_asymptotic(T: int) -> L1Asymptotic:
    """L_1 norm of the T-term kernel on [0, 1) against (4/pi^2) log T."""
    if T < 1:
        raise ValueError("T must be positive")
    value = discrete_norm_power(int(T), 1.0)
    ref = 4 / math.pi ** 2 * math.log(T)
    ratio = value / ref if ref > 0 else math.inf
    return L1Asymptotic(int(T), value, ref, ratio)


# ---------------------------------------------------------- kernel property

@dataclass
class KernelPropertyReport:
    """Integrals of C against the Fejér kernel along a T ladder."""

    rows: list = field(default_factory=list)  # (T, value, deviation, converged)
    target: float = 0.0

    @property
    def deviations(self) -> list[float]:
        return [r[2] for r in self.rows]

    @property
    def decreasing(self) -> bool:
        dev = self.deviations
        return all(b <= a for a, b in zip(dev, dev[1:]))

    @property
    def converged(self) -> bool:
        return all(r[3] for r in self.rows)

    def to_csv(self) -> str:
        lines = ["T,value,deviation"] + [f"{T},{v!r},{d!r}" for T, v, d, _ in self.rows]
        return "\n".join(lines) + "\n"


def _kernel_integral(C: Callable, T, n: int, dom: SpectralDomain, points: int) -> float:
    if dom.d != 1:
        raise ValueError("kernel property checks are implemented for d = 1")
    if dom.discrete:
        # midpoint grid: symmetric about 0 and exact for trigonometric
        # polynomials of degree below ``points``
        grid = -np.pi + 2 * np.pi * (np.arange(points) + 0.5) / points
        step = 2 * np.pi / points
    else:
        half = 2 * np.pi * 400 / T  # 400 lobes on each side
        grid = -half + 2 * half * (np.arange(points) + 0.5) / points
        step = 2 * half / points
    if n == 2:
        vals = C(grid[:, None]) * fejer_multi(T, grid[:, None], 2, dom)
        return float(np.sum(vals) * step)
    if n == 3:
        total = 0.0
        for u1 in grid:
            u = np.column_stack([np.full_like(grid, u1), grid])
            total += float(np.sum(C(u) * fejer_multi(T, u, 3, dom)))
        return total * step * step
    raise ValueError("kernel property checks support n = 2 and n = 3")


def verify_kernel_property(C: Callable, T_list: Sequence, n: int = 2, domain="torus",
                           points: int | None = None, rtol: float = 1e-8) -> KernelPropertyReport:
    """Integrate C against the Fejér kernel for each T and compare with C(0).

    ``C`` takes an array of shape (..., n-1). Each value is computed on two
    grids; disagreement beyond ``rtol`` marks the row as not converged.
    """
    dom = as_domain(domain)
    target = float(np.asarray(C(np.zeros((1, n - 1)))).ravel()[0])
    rep = KernelPropertyReport(target=target)
    for T in T_list:
        base = points or (int(8 * (T + 1)) if dom.discrete else 16 * 800)
        if n == 3:
            base = min(base, 2048)
        v1 = _kernel_integral(C, T, n, dom, base)
        v2 = _kernel_integral(C, T, n, dom, 2 * base)
        ok = abs(v1 - v2) <= rtol * max(1.0, abs(v2))
        rep.rows.append((T, v2, abs(v2 - target), ok))
    return rep
