"""Fejér graph integrals, Toeplitz traces and their limits.

The discrete observation window used here is {0, ..., T-1}^d, so Toeplitz
matrices are T^d x T^d and the matching Dirichlet kernel is the T-point
sum. Torus integrals use the normalised measure d lambda / (2 pi)^d, line
integrals plain Lebesgue measure, and Fourier coefficients are
f_hat(k) = int e^{i k lambda} f(lambda) mu(d lambda) in both cases.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
import scipy.linalg
from scipy import integrate, signal

from . import graph_core
from .graph_core import IncidenceLikeMatrix
from .kernels import SpectralDomain, as_domain, dirichlet_points, reduce_torus

MAX_MATRIX_SIZE = 4096
MAX_QUAD_EDGES = 6
MAX_QUAD_CYCLES = 3
MAX_AXIS_POINTS = 256


class UnreliableWarning(RuntimeWarning):
    """A value was computed outside the conditions that guarantee it."""


@dataclass(frozen=True)
class SpectralSymbol:
    """A function on the spectral domain with declared integrability.

    Parameters
    ----------
    func : callable
        Vectorised evaluation. For d = 2 the last axis holds coordinates.
    declared_p : float
        Claimed L_p membership (``math.inf`` for bounded symbols).
    even : bool
        Whether f(-lambda) = f(lambda).
    domain : SpectralDomain
    name, params : str, dict
        Family name and parameters, used for serialisation.
    """

    func: Callable
    declared_p: float = math.inf
    even: bool = True
    domain: SpectralDomain = SpectralDomain()
    name: str = "custom"
    params: tuple = ()

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=float)
        if self.domain.discrete:
            lam = reduce_torus(lam)
        return self.func(lam)

    @property
    def exponent(self) -> Fraction:
        """Inverse integrability index z = 1/p."""
        if math.isinf(self.declared_p):
            return Fraction(0)
        return Fraction(1) / Fraction(self.declared_p).limit_denominator(10**6)

    def grid_samples(self, points: int) -> np.ndarray:
        return self(torus_grid(points)) if self.domain.discrete else self(np.linspace(-1, 1, points))

    def to_dict(self) -> dict:
        return {"family": self.name, **dict(self.params)}

    def lp_norm(self, p: float, points: int = 1 << 14, half_width: float = 60.0) -> float:
        """L_p norm on a uniform grid (normalised measure on the torus)."""
        if self.domain.d != 1:
            raise ValueError("norms are implemented for d = 1")
        if self.domain.discrete:
            vals, w = np.abs(self(torus_grid(points))), 1.0 / points
        else:
            x = -half_width + 2 * half_width * (np.arange(points) + 0.5) / points
            vals, w = np.abs(self(x)), 2 * half_width / points
        if math.isinf(p):
            return float(np.max(vals))
        return float((np.sum(vals ** p) * w) ** (1 / p))

    def validate(self, points: int = 1 << 12) -> None:
        """Check evenness and finiteness of the declared norm on a grid."""
        if self.domain.d != 1:
            return
        grid = torus_grid(points)[1:] if self.domain.discrete else np.linspace(-20, 20, points)
        grid = grid[np.abs(grid) > 1e-9]
        vals = self(grid)
        if not np.all(np.isfinite(vals)):
            raise ValueError("symbol is not finite away from the origin")
        if self.even and not np.allclose(vals, self(-grid), rtol=1e-10, atol=1e-12):
            raise ValueError("symbol declared even but f(-x) != f(x)")
        if not math.isfinite(self.lp_norm(self.declared_p, points)):
            raise ValueError("declared L_p norm is not finite")


def torus_grid(points: int) -> np.ndarray:
    return -np.pi + 2 * np.pi * np.arange(points) / points


# -------------------------------------------------------- symbol families

def constant(c: float, domain="torus") -> SpectralSymbol:
    dom = as_domain(domain)
    return SpectralSymbol(lambda lam: np.full(np.shape(lam)[:-1] if dom.d == 2 else np.shape(lam), float(c)),
                          math.inf, True, dom, "constant", (("c", c),))


def cosine_band(coeffs: Sequence[float]) -> SpectralSymbol:
    """f(lambda) = c_0 + sum_{k>=1} 2 c_k cos(k lambda), so f_hat(+-k) = c_k."""
    coeffs = tuple(float(c) for c in coeffs)

    def f(lam):
        out = np.full(np.shape(lam), coeffs[0])
        for k, c in enumerate(coeffs[1:], 1):
            out = out + 2 * c * np.cos(k * lam)
        return out

    return SpectralSymbol(f, math.inf, True, SpectralDomain(), "cosine-band", (("coeffs", coeffs),))


def ar1(phi: float, scale: float = 1.0) -> SpectralSymbol:
    """scale / (1 - 2 phi cos lambda + phi^2); f_hat(k) = scale phi^|k| / (1 - phi^2)."""
    if not -1 < phi < 1:
        raise ValueError("AR(1) needs |phi| < 1")
    return SpectralSymbol(lambda lam: scale / (1 - 2 * phi * np.cos(lam) + phi * phi), math.inf, True,
                          SpectralDomain(), "ar1", (("phi", phi), ("scale", scale)))


def frbm(alpha: float, gamma: float, c: float = 1.0) -> SpectralSymbol:
    """c / (|lambda|^(2 alpha) (1 + lambda^2)^gamma) on the line."""
    # L_p near the pole needs 2 alpha p < 1
    p = math.inf if alpha == 0 else 0.999 / (2 * alpha)

    def f(lam):
        a = np.abs(lam)
        with np.errstate(divide="ignore"):
            return c / (a ** (2 * alpha) * (1 + a * a) ** gamma)

    return SpectralSymbol(f, p, True, SpectralDomain("line"), "frbm",
                          (("alpha", alpha), ("gamma", gamma), ("c", c)))


def gaussian_bump(width: float = 1.0, centre: float = 0.0, domain="line", p: float = 1.0) -> SpectralSymbol:
    """exp(-(lambda - centre)^2 / (2 width^2)); in every L_p, declared as L_p."""
    dom = as_domain(domain)
    return SpectralSymbol(lambda lam: np.exp(-(lam - centre) ** 2 / (2 * width * width)), p, centre == 0,
                          dom, "gaussian-bump", (("width", width), ("centre", centre)))


def symbol_from_dict(spec: dict) -> SpectralSymbol:
    """Build a built-in symbol from ``{"family": ..., **params}``."""
    fam = spec.get("family")
    params = {k: v for k, v in spec.items() if k != "family"}
    try:
        if fam == "constant":
            return constant(params["c"], params.get("domain", "torus"))
        if fam == "cosine-band":
            return cosine_band(params["coeffs"])
        if fam == "ar1":
            return ar1(params["phi"], params.get("scale", 1.0))
        if fam == "gaussian-bump":
            return gaussian_bump(params.get("width", 1.0), params.get("centre", 0.0),
                                 params.get("domain", "line"), params.get("p", 1.0))
        if fam == "frbm":
            return frbm(params["alpha"], params["gamma"], params.get("c", 1.0))
    except KeyError as exc:
        raise ValueError(f"symbol family {fam!r} is missing parameter {exc.args[0]!r}") from None
    raise ValueError(f"unknown symbol family {fam!r}")


# ---------------------------------------------------- Fourier and Toeplitz

@dataclass(frozen=True)
class FourierTable:
    """Coefficients f_hat(k) for |k_i| <= nmax, stored centred."""

    values: np.ndarray
    nmax: int

    def coef(self, k) -> complex:
        k = np.atleast_1d(np.asarray(k, dtype=int))
        if np.any(np.abs(k) > self.nmax):
            raise IndexError("index outside the computed range")
        return complex(self.values[tuple(k + self.nmax)])


def _grid_size(nmax: int, points: int | None) -> int:
    if points is None:
        points = 1 << max(12, int(math.ceil(math.log2(8 * (nmax + 1)))))
    if points <= 2 * nmax:
        raise ValueError("grid too coarse for the requested coefficients")
    return points


def fourier_coefficients(f: SpectralSymbol, nmax: int, points: int | None = None,
                         step: float = 1.0) -> FourierTable:
    """Fourier coefficients on |k| <= nmax by dense-grid summation.

    Torus: f_hat(k) = (1/G) sum_j f(lambda_j) e^{i k lambda_j}, exact up to
    aliasing. Line: f_hat(k h) = int e^{i k h lambda} f(lambda) d lambda
    truncated to |lambda| <= pi / h; an integrable singularity at
    lambda = 0 is integrated over its grid cell.
    """
    G = _grid_size(nmax, points)
    dom = f.domain
    if dom.discrete:
        lam1 = 2 * np.pi * np.arange(G) / G
        if dom.d == 1:
            c = np.fft.ifft(f(lam1))
            idx = np.arange(-nmax, nmax + 1) % G
            return FourierTable(c[idx], nmax)
        L1, L2 = np.meshgrid(lam1, lam1, indexing="ij")
        c = np.fft.ifft2(f(np.stack([L1, L2], axis=-1)))
        idx = np.arange(-nmax, nmax + 1) % G
        return FourierTable(c[np.ix_(idx, idx)], nmax)
    if dom.d != 1:
        raise ValueError("line-domain coefficients are implemented for d = 1")
    dlam = 2 * np.pi / (step * G)
    j = np.arange(G)
    lam = np.where(j < G // 2, j, j - G) * dlam
    vals = np.asarray(f(lam), dtype=complex)
    if not np.isfinite(vals[0]):
        cell, _ = integrate.quad(lambda x: float(np.real(f(np.array(x)))), -dlam / 2, dlam / 2,
                                 points=[0.0], limit=200)
        vals[0] = cell / dlam
    c = np.fft.ifft(vals) * G * dlam
    idx = np.arange(-nmax, nmax + 1) % G
    return FourierTable(c[idx], nmax)


def _real_if_close(a):
    a = np.asarray(a)
    if np.iscomplexobj(a) and np.max(np.abs(a.imag), initial=0.0) <= 1e-12 * max(1.0, np.max(np.abs(a.real), initial=0.0)):
        return a.real
    return a


def toeplitz_matrix(f: SpectralSymbol, T: int, points: int | None = None, nystrom: int = 4096,
                    max_size: int = MAX_MATRIX_SIZE) -> np.ndarray:
    """Toeplitz matrix [f_hat(t - s)] over the window.

    Torus: index set {0..T-1}^d (lexicographic for d = 2). Line: Nyström
    discretisation of the truncated operator on ``nystrom`` points of
    [-T/2, T/2] with step h = T / nystrom, entries f_hat((t-s) h) h.
    """
    dom = f.domain
    if dom.discrete:
        N = int(T) ** dom.d
        if N > max_size:
            raise MemoryError(f"matrix size {N} exceeds the cap {max_size}")
        table = fourier_coefficients(f, int(T) - 1, points)
        c = table.values
        if dom.d == 1:
            n0 = table.nmax
            col = c[n0:n0 + T]
            row = c[n0::-1][:T]
            return _real_if_close(scipy.linalg.toeplitz(col, row))
        t = np.arange(int(T))
        ti, tj = np.meshgrid(t, t, indexing="ij")
        flat = np.stack([ti.ravel(), tj.ravel()], axis=1)
        diff = flat[:, None, :] - flat[None, :, :] + table.nmax
        return _real_if_close(c[diff[..., 0], diff[..., 1]])
    if dom.d != 1:
        raise ValueError("line-domain operators are implemented for d = 1")
    N = int(nystrom)
    if N > max_size:
        raise MemoryError(f"matrix size {N} exceeds the cap {max_size}")
    h = float(T) / N
    table = fourier_coefficients(f, N - 1, points, step=h)
    n0 = table.nmax
    col = table.values[n0:n0 + N] * h
    row = table.values[n0::-1][:N] * h
    return _real_if_close(scipy.linalg.toeplitz(col, row))


def _trace_of_product(mats: Sequence[np.ndarray]):
    if len(mats) == 1:
        return np.trace(mats[0])
    acc = mats[0]
    for m in mats[1:-1]:
        acc = acc @ m
    return np.sum(acc * mats[-1].T)


def trace_product(symbols: Sequence[SpectralSymbol], T: int, **kw) -> float:
    """Tr[T_T(f_1) ... T_T(f_n)] for the ordered list of symbols."""
    if not symbols:
        raise ValueError("need at least one symbol")
    doms = {s.domain for s in symbols}
    if len(doms) != 1:
        raise ValueError("symbols live on different domains")
    cache: dict[int, np.ndarray] = {}
    mats = []
    for s in symbols:
        if id(s) not in cache:
            cache[id(s)] = toeplitz_matrix(s, T, **kw)
        mats.append(cache[id(s)])
    val = _trace_of_product(mats)
    val = complex(val)
    return val.real if abs(val.imag) <= 1e-9 * max(1.0, abs(val.real)) else val


# ------------------------------------------------------ Fejér graph integrals

@dataclass(frozen=True)
class FejerIntegralSpec:
    """A Fejér matroid integral: matrix, one symbol per column, window T."""

    M: IncidenceLikeMatrix
    symbols: tuple
    T: int
    domain: SpectralDomain = SpectralDomain()

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(self.symbols))
        if len(self.symbols) != self.M.n_cols:
            raise ValueError("need one symbol per column")

    @property
    def row_deletion_ok(self) -> bool:
        return graph_core.row_deletion_condition(self.M)

    @property
    def exponents(self) -> list[Fraction]:
        return [s.exponent for s in self.symbols]


def spec_from_dict(spec: dict) -> FejerIntegralSpec:
    """Build a spec from ``{"edges" | "matrix", "symbols", "T"}``.

    ``edges`` is a list of [u, v] pairs (graph case, vertex count taken
    from the largest label unless ``vertices`` is given); ``matrix`` is a
    list of integer rows (general case).
    """
    if "edges" in spec:
        edges = [tuple(int(x) for x in e) for e in spec["edges"]]
        n_v = int(spec.get("vertices", 1 + max(max(e) for e in edges)))
        M = IncidenceLikeMatrix.from_edges(n_v, edges)
    elif "matrix" in spec:
        M = IncidenceLikeMatrix(tuple(tuple(int(x) for x in r) for r in spec["matrix"]), graph_core.GENERAL)
    else:
        raise ValueError("spec needs 'edges' or 'matrix'")
    symbols = [symbol_from_dict(s) for s in spec["symbols"]]
    if len(symbols) == 1 and M.n_cols > 1:
        symbols = symbols * M.n_cols
    return FejerIntegralSpec(M, symbols, int(spec["T"]), symbols[0].domain)


def fejer_graph_integral(spec: FejerIntegralSpec, points: int | None = None, chunk: int = 1 << 18) -> float:
    """int prod f_e(lambda_e) prod_v D_T((M lambda)_v) prod mu(d lambda_e).

    Uniform periodic grid of ``points`` per axis on the torus (exact for
    trigonometric polynomials of degree below ``points``). The kernel is
    the T-point sum, matching Toeplitz matrices of size T.
    """
    dom = spec.domain
    if not dom.discrete or dom.d != 1:
        raise ValueError("direct quadrature is implemented on the one-dimensional torus")
    E = spec.M.n_cols
    if E > MAX_QUAD_EDGES:
        raise ValueError(f"E={E} exceeds the quadrature cap {MAX_QUAD_EDGES}")
    if points is None:
        points = min(MAX_AXIS_POINTS, 1 << int(math.ceil(math.log2(2 * spec.T + 16))))
    if points > MAX_AXIS_POINTS:
        raise ValueError(f"at most {MAX_AXIS_POINTS} points per axis")
    grid = torus_grid(points)
    A = spec.M.to_array().astype(float)
    fvals = [np.asarray(s(grid), dtype=complex) for s in spec.symbols]
    n_total = points ** E
    total = 0.0 + 0.0j
    for lo in range(0, n_total, chunk):
        flat = np.arange(lo, min(lo + chunk, n_total))
        idx = np.stack(np.unravel_index(flat, (points,) * E), axis=1)
        weight = np.ones(len(flat), dtype=complex)
        for e in range(E):
            weight *= fvals[e][idx[:, e]]
        u = grid[idx] @ A.T
        total += np.sum(weight * np.prod(dirichlet_points(spec.T, u), axis=1))
    val = total / points ** E
    return val.real if abs(val.imag) <= 1e-9 * max(1.0, abs(val.real)) else val


def _cycle_grid(C: int, domain: SpectralDomain, points: int, half_width: float):
    if domain.discrete:
        g = torus_grid(points)
        w = 1.0 / points
    else:
        g = -half_width + 2 * half_width * (np.arange(points) + 0.5) / points
        w = 2 * half_width / points
    if C == 0:
        return np.zeros((1, 0)), 1.0
    mesh = np.stack(np.meshgrid(*([g] * C), indexing="ij"), axis=-1).reshape(-1, C)
    return mesh, w ** C


def graph_convolution(mstar, n_rows, symbols: Sequence[SpectralSymbol], u, points: int = 128,
                      half_width: float = 40.0) -> float:
    """h(u) = int prod_e f_e(lambda_e) prod mu(dy), lambda = y M* + u N.

    ``mstar`` is C x E, ``n_rows`` is r x E and ``u`` has length r. A
    violated power-counting condition on the declared exponents raises
    an ``UnreliableWarning``; the value is still returned.
    """
    mstar = np.asarray(mstar, dtype=float).reshape(-1, len(symbols))
    n_rows = np.asarray(n_rows, dtype=float).reshape(-1, len(symbols))
    C = mstar.shape[0]
    if C > MAX_QUAD_CYCLES:
        raise ValueError(f"C={C} exceeds the quadrature cap {MAX_QUAD_CYCLES}")
    dom = symbols[0].domain
    _check_exponents(mstar, symbols)
    y, wt = _cycle_grid(C, dom, points, half_width)
    u = np.asarray(u, dtype=float).reshape(-1)
    shift = u @ n_rows if n_rows.size else np.zeros(len(symbols))
    lam = y @ mstar + shift
    prod = np.ones(len(y), dtype=complex)
    for e, s in enumerate(symbols):
        prod = prod * s(lam[:, e])
    val = np.sum(prod) * wt
    return val.real if abs(val.imag) <= 1e-9 * max(1.0, abs(val.real)) else val


def _check_exponents(mstar: np.ndarray, symbols) -> None:
    C = mstar.shape[0]
    if C == 0:
        return
    if not np.allclose(mstar, np.round(mstar)):
        return
    z = [s.exponent for s in symbols]
    dual = IncidenceLikeMatrix(tuple(tuple(int(round(x)) for x in r) for r in mstar))
    if not graph_core.pcp_membership(dual, z, graph_core.PcpCase.C1_TORUS):
        warnings.warn("declared exponents violate the power-counting condition; value unreliable",
                      UnreliableWarning, stacklevel=3)


def limit_integral(mstar, symbols: Sequence[SpectralSymbol], points: int = 128, half_width: float = 40.0) -> float:
    """int prod f_e((y M*)_e) prod mu(dy); the product of f_e(0) when C = 0."""
    r = np.zeros((0, len(symbols)))
    return graph_convolution(mstar, r, symbols, np.zeros(0), points, half_width)


@dataclass
class ConvergenceReport:
    """Rows (T, value, target, rel_error) of a limit check."""

    rows: list = field(default_factory=list)

    @property
    def rel_errors(self) -> list[float]:
        return [r[3] for r in self.rows]

    def to_csv(self) -> str:
        lines = ["T,value,target,rel_error"]
        lines += [f"{T},{v!r},{t!r},{e!r}" for T, v, t, e in self.rows]
        return "\n".join(lines) + "\n"

    def tail_monotone(self, window: int = 3) -> bool:
        err = self.rel_errors[-window:]
        return all(b <= a for a, b in zip(err, err[1:]))


def _is_cycle(M: IncidenceLikeMatrix) -> bool:
    if M.kind != graph_core.GRAPH or M.n_rows != M.n_cols:
        return False
    return all(u == e and v == (e + 1) % M.n_cols for e, (u, v) in enumerate(M.edges()))


def szego_limit_check(M: IncidenceLikeMatrix, symbols: Sequence[SpectralSymbol], T_list: Sequence[int],
                      points: int | None = None, limit_points: int = 256) -> ConvergenceReport:
    """J_T / T^(d co(M)) against k_M times the limit integral, along T_list.

    Directed cycles use the trace representation, other matrices the
    direct quadrature of the Fejér integral. For graphs k_M = 1 because
    s M = 0 forces s to be constant on components; other matrices get k_M
    from lattice counting.
    """
    symbols = tuple(symbols)
    dom = symbols[0].domain
    co = graph_core.corank(M)
    if M.kind == graph_core.GRAPH:
        k_m = 1.0
    else:
        k_m = graph_core.lattice_count_kM(M, [0] * M.n_cols, [4, 6, 8, 10])
    coords = graph_core.cycle_coordinates(M)
    target = k_m * limit_integral(coords.mstar_array(), symbols, limit_points)
    if not dom.discrete:
        target *= (2 * np.pi) ** (coords.mstar_array().shape[0] * dom.d)
    report = ConvergenceReport()
    for T in T_list:
        if _is_cycle(M):
            J = trace_product(symbols, T)
        else:
            J = fejer_graph_integral(FejerIntegralSpec(M, symbols, T, dom), points)
        value = J / float(T) ** (dom.d * co)
        rel = abs(value - target) / abs(target) if target else abs(value)
        report.rows.append((int(T), float(value), float(target), float(rel)))
    return report


def gaussian_qf_cumulant(k: int, b: SpectralSymbol, f: SpectralSymbol, T: int) -> float:
    """2^(k-1) (k-1)! Tr[(T_T(b) T_T(f))^k]."""
    if k < 2:
        raise ValueError("k must be at least 2")
    B = toeplitz_matrix(b, T)
    F = toeplitz_matrix(f, T)
    P = B @ F
    acc = np.linalg.matrix_power(P, k - 1)
    tr = np.sum(acc * P.T)
    return float(2 ** (k - 1) * math.factorial(k - 1) * np.real(tr))


def hermite_sum_variance(f: SpectralSymbol, l: int, points: int = 1 << 14, half_width: float = 200.0) -> float:
    """f^(*l)(0): the l-fold convolution power of f at zero.

    Torus: iterated circular convolution on a shared grid, normalised
    measure. Line: iterated linear convolution on [-half_width, half_width].
    A declared exponent above 1 - 1/l raises an ``UnreliableWarning``.
    """
    if l < 1:
        raise ValueError("l must be positive")
    if f.exponent > 1 - Fraction(1, l):
        warnings.warn("integrability condition z <= 1 - 1/l fails; the convolution may diverge",
                      UnreliableWarning, stacklevel=2)
    if f.domain.discrete:
        vals = np.asarray(f(2 * np.pi * np.arange(points) / points), dtype=complex)
        g = vals.copy()
        spec_f = np.fft.fft(vals)
        for _ in range(l - 1):
            g = np.fft.ifft(np.fft.fft(g) * spec_f) / points
        return float(np.real(g[0]))
    h = 2 * half_width / points
    grid = (np.arange(points) - points // 2) * h
    vals = np.asarray(f(grid), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise ValueError("symbol is not finite on the convolution grid")
    g = vals.copy()
    centre = points // 2
    for _ in range(l - 1):
        full = signal.fftconvolve(g, vals) * h
        g = full[centre:centre + points]
    return float(g[centre])
