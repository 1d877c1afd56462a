"""Graphs as vectorial matroids.

Incidence and circuit matrices, rank and dual rank, power counting
polytopes (PCP) of the homogeneous Hölder-Young-Brascamp-Lieb inequality,
the graph-breaking exponent and lattice-point counting for the leading
constant of exponential sums.

Column subsets are 0-based index collections. All rank, determinant and
polytope decisions are made in exact rational arithmetic.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import isqrt
from typing import Iterable, Sequence

import numpy as np

from . import exact

GRAPH = "graph-incidence"
GENERAL = "general"

MAX_ALPHA_COLUMNS = 20
MAX_VERTEX_COLUMNS = 16


class PcpCase(str, enum.Enum):
    """Which inequality (and which measure on the spectral side) is meant."""

    C1_TORUS = "C1-torus"
    C2_COUNTING = "C2-counting"
    C3_LEBESGUE = "C3-lebesgue"


def _as_case(case) -> PcpCase:
    if isinstance(case, PcpCase):
        return case
    aliases = {"c1": PcpCase.C1_TORUS, "torus": PcpCase.C1_TORUS, "discrete": PcpCase.C1_TORUS,
               "c2": PcpCase.C2_COUNTING, "counting": PcpCase.C2_COUNTING,
               "c3": PcpCase.C3_LEBESGUE, "lebesgue": PcpCase.C3_LEBESGUE,
               "continuous": PcpCase.C3_LEBESGUE, "line": PcpCase.C3_LEBESGUE}
    key = str(case).lower()
    for c in PcpCase:
        if key == c.value.lower():
            return c
    if key not in aliases:
        raise ValueError(f"unknown PCP case {case!r}")
    return aliases[key]


@dataclass(frozen=True)
class IncidenceLikeMatrix:
    """Integer V x E matrix with its matroid structure.

    Parameters
    ----------
    entries : tuple of tuple of int
        Row-major entries, V rows and E columns.
    kind : str
        ``"graph-incidence"`` (each column has one +1 and one -1) or
        ``"general"``.
    """

    entries: tuple[tuple[int, ...], ...]
    kind: str = GENERAL

    def __post_init__(self):
        rows = tuple(tuple(int(x) for x in r) for r in self.entries)
        object.__setattr__(self, "entries", rows)
        if rows and len({len(r) for r in rows}) != 1:
            raise ValueError("ragged matrix")
        if self.kind not in (GRAPH, GENERAL):
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.kind == GRAPH:
            for j in range(self.n_cols):
                col = sorted(r[j] for r in rows)
                if col.count(1) != 1 or col.count(-1) != 1 or any(x not in (-1, 0, 1) for x in col):
                    raise ValueError(f"column {j} is not a directed edge (loops are forbidden)")

    @classmethod
    def from_edges(cls, n_vertices: int, edges: Iterable[tuple[int, int]]) -> "IncidenceLikeMatrix":
        """Incidence matrix of a directed multigraph: edge (u, v) has -1 at u, +1 at v."""
        edges = list(edges)
        rows = [[0] * len(edges) for _ in range(n_vertices)]
        for j, (u, v) in enumerate(edges):
            if u == v:
                raise ValueError("loops are forbidden")
            rows[u][j] = -1
            rows[v][j] = 1
        return cls(tuple(tuple(r) for r in rows), GRAPH)

    @classmethod
    def from_array(cls, array, kind: str | None = None) -> "IncidenceLikeMatrix":
        arr = np.asarray(array)
        if arr.ndim != 2:
            raise ValueError("matrix must be two-dimensional")
        if not np.all(arr == np.round(arr)):
            raise ValueError("entries must be integers")
        rows = tuple(tuple(int(x) for x in r) for r in arr.astype(np.int64))
        if kind is None:
            try:
                return cls(rows, GRAPH)
            except ValueError:
                return cls(rows, GENERAL)
        return cls(rows, kind)

    @property
    def n_rows(self) -> int:
        return len(self.entries)

    @property
    def n_cols(self) -> int:
        return len(self.entries[0]) if self.entries else 0

    def column(self, j: int) -> tuple[int, ...]:
        return tuple(r[j] for r in self.entries)

    def edges(self) -> list[tuple[int, int]]:
        """Edge list (tail, head) for graph-incidence matrices."""
        if self.kind != GRAPH:
            raise ValueError("edge list only defined for graph-incidence matrices")
        out = []
        for j in range(self.n_cols):
            col = self.column(j)
            out.append((col.index(-1), col.index(1)))
        return out

    def to_array(self) -> np.ndarray:
        return np.array(self.entries, dtype=np.int64).reshape(self.n_rows, self.n_cols)


@dataclass(frozen=True)
class DualMatrix:
    """Rows span the orthogonal complement of the row space of M.

    ``free_columns`` lists the columns on which the rows restrict to the
    identity (up to scaling); for graphs these are the non-tree edges of
    the spanning forest picked by elimination and the rows are signed
    fundamental cycles.
    """

    entries: tuple[tuple[int, ...], ...]
    n_cols: int
    free_columns: tuple[int, ...] = ()

    @property
    def n_rows(self) -> int:
        return len(self.entries)

    def to_array(self) -> np.ndarray:
        return np.array(self.entries, dtype=np.int64).reshape(self.n_rows, self.n_cols)


# ---------------------------------------------------------------- ranks

def _mask(M: IncidenceLikeMatrix, A: Iterable[int]) -> int:
    m = 0
    for j in A:
        j = int(j)
        if not 0 <= j < M.n_cols:
            raise IndexError(f"column index {j} out of range for E={M.n_cols}")
        m |= 1 << j
    return m


@lru_cache(maxsize=1 << 20)
def _rank_mask(entries: tuple, kind: str, mask: int) -> int:
    cols = [j for j in range(len(entries[0]) if entries else 0) if mask >> j & 1]
    if not cols:
        return 0
    if kind == GRAPH:
        # forest size via union-find: rank = V - components of the edge set
        parent = list(range(len(entries)))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        r = 0
        for j in cols:
            col = [row[j] for row in entries]
            u, v = col.index(-1), col.index(1)
            ru, rv = find(u), find(v)
            if ru != rv:
                parent[ru] = rv
                r += 1
        return r
    return exact.rank_of_vectors([tuple(row[j] for row in entries) for j in cols])


def rank(M: IncidenceLikeMatrix, A: Iterable[int] | None = None) -> int:
    """Rank over Q of the columns ``A`` (all columns when ``A`` is None)."""
    mask = (1 << M.n_cols) - 1 if A is None else _mask(M, A)
    return _rank_mask(M.entries, M.kind, mask)


def _full(M: IncidenceLikeMatrix) -> int:
    return (1 << M.n_cols) - 1


def dual_rank(M: IncidenceLikeMatrix, A: Iterable[int]) -> int:
    """r*(A) = |A| - r(M) + r(complement of A)."""
    mask = _mask(M, A)
    full = _full(M)
    return (bin(mask).count("1") - _rank_mask(M.entries, M.kind, full)
            + _rank_mask(M.entries, M.kind, full & ~mask))


def components_after_removal(M: IncidenceLikeMatrix, A: Iterable[int]) -> int:
    """co(M - A) = V - r(columns outside A)."""
    mask = _mask(M, A)
    return M.n_rows - _rank_mask(M.entries, M.kind, _full(M) & ~mask)


def corank(M: IncidenceLikeMatrix) -> int:
    """co(M) = V - r(M); the number of components for a graph."""
    return M.n_rows - rank(M)


def cyclomatic_number(M: IncidenceLikeMatrix) -> int:
    """C = E - r(M), the number of independent cycles."""
    return M.n_cols - rank(M)


def matrix_rank_rows(rows: Sequence[Sequence[int]]) -> int:
    return exact.rank_of_vectors(rows)


def row_deletion_condition(M: IncidenceLikeMatrix) -> bool:
    """True when deleting any single row leaves the rank unchanged."""
    r = exact.rank_of_vectors(M.entries)
    for l in range(M.n_rows):
        rest = M.entries[:l] + M.entries[l + 1:]
        if exact.rank_of_vectors(rest) != r:
            return False
    return True


def dual_matrix(M: IncidenceLikeMatrix) -> DualMatrix:
    """Integer basis of the right null space of M, one row per independent cycle."""
    basis, free = exact.nullspace_basis(M.entries, M.n_cols)
    rows = tuple(tuple(exact.integer_scaled(v)) for v in basis)
    return DualMatrix(rows, M.n_cols, tuple(free))


def independent_rows(M: IncidenceLikeMatrix) -> list[int]:
    """Greedy choice of r(M) linearly independent rows."""
    chosen: list[int] = []
    for i in range(M.n_rows):
        trial = [M.entries[k] for k in chosen + [i]]
        if exact.rank_of_vectors(trial) == len(chosen) + 1:
            chosen.append(i)
    return chosen


@dataclass(frozen=True)
class CycleCoordinates:
    """Change of variables lambda = y M* + u N splitting edge frequencies.

    ``y`` are the free (cycle) coordinates, ``u`` the vertex combinations
    u = M_R lambda for the independent rows ``rows``.
    """

    mstar: tuple[tuple[Fraction, ...], ...]
    n: tuple[tuple[Fraction, ...], ...]
    rows: tuple[int, ...]
    free_columns: tuple[int, ...]

    @property
    def n_cols(self) -> int:
        rows = self.mstar or self.n
        return len(rows[0]) if rows else 0

    def mstar_array(self) -> np.ndarray:
        return np.array([[float(x) for x in r] for r in self.mstar], dtype=float).reshape(len(self.mstar), self.n_cols)

    def n_array(self) -> np.ndarray:
        return np.array([[float(x) for x in r] for r in self.n], dtype=float).reshape(len(self.n), self.n_cols)


def cycle_coordinates(M: IncidenceLikeMatrix) -> CycleCoordinates:
    """Build [M*; N] as the transposed inverse of [P_free; M_R]."""
    E = M.n_cols
    _, pivots = exact.rref(M.entries)
    free = [c for c in range(E) if c not in pivots]
    rows = independent_rows(M)
    square = [[int(j == c) for j in range(E)] for c in free] + [list(M.entries[i]) for i in rows]
    inv = exact.inverse(square)
    C = len(free)
    mstar = tuple(tuple(inv[e][c] for e in range(E)) for c in range(C))
    n = tuple(tuple(inv[e][C + k] for e in range(E)) for k in range(len(rows)))
    return CycleCoordinates(mstar, n, tuple(rows), tuple(free))


# ------------------------------------------------------- breaking exponent

def _fractions(z: Sequence) -> list[Fraction]:
    out = []
    for x in z:
        f = Fraction(x) if not isinstance(x, float) else Fraction(x).limit_denominator(10**12)
        if f < 0 or f > 1:
            raise ValueError(f"exponent {x} outside [0, 1]")
        out.append(f)
    return out


def alpha_forms(M: IncidenceLikeMatrix, z: Sequence) -> tuple[Fraction, Fraction]:
    """The two subset formulations of the discrete breaking exponent.

    Returns ``(co(M) + max_A [sum_A z - r*(A)], max_A [co(M - A) - sum_A (1 - z)])``,
    each maximised by its own exhaustive loop.
    """
    zf = _fractions(z)
    E = M.n_cols
    if len(zf) != E:
        raise ValueError("exponent vector length differs from column count")
    if E > MAX_ALPHA_COLUMNS:
        raise ValueError(f"E={E} exceeds the exhaustive-search cap {MAX_ALPHA_COLUMNS}")
    full = _full(M)
    r_full = _rank_mask(M.entries, M.kind, full)
    best_dual = None
    best_co = None
    for mask in range(1 << E):
        s = sum((zf[j] for j in range(E) if mask >> j & 1), Fraction(0))
        size = bin(mask).count("1")
        r_comp = _rank_mask(M.entries, M.kind, full & ~mask)
        val_dual = s - (size - r_full + r_comp)
        val_co = (M.n_rows - r_comp) - (size - s)
        if best_dual is None or val_dual > best_dual:
            best_dual = val_dual
        if best_co is None or val_co > best_co:
            best_co = val_co
    return (M.n_rows - r_full) + best_dual, best_co


def alpha_exponent(M: IncidenceLikeMatrix, z: Sequence, case=PcpCase.C1_TORUS) -> Fraction:
    """Graph-breaking exponent of a Fejér matroid integral.

    Discrete cases (torus, counting) maximise over all column subsets;
    the Lebesgue case uses co(M) + (sum z - C)_+.
    """
    case = _as_case(case)
    zf = _fractions(z)
    if case is PcpCase.C3_LEBESGUE:
        if len(zf) != M.n_cols:
            raise ValueError("exponent vector length differs from column count")
        excess = sum(zf, Fraction(0)) - cyclomatic_number(M)
        return Fraction(corank(M)) + max(excess, Fraction(0))
    a, b = alpha_forms(M, zf)
    if a != b:
        raise RuntimeError(f"breaking-exponent formulations disagree: {a} != {b}")
    return a


# ------------------------------------------------------------- polytopes

@dataclass(frozen=True)
class Membership:
    """Outcome of a PCP membership test; ``witness`` is a violating subset."""

    member: bool
    witness: tuple[int, ...] | None = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.member


def pcp_membership(M: IncidenceLikeMatrix, z: Sequence, case=PcpCase.C1_TORUS) -> Membership:
    """Check the rank inequalities defining the PCP of M.

    C1: sum_A z <= r(A); C2: sum_A (1 - z) <= r*(A); C3: sum z = r(M) and C1.
    """
    case = _as_case(case)
    zf = _fractions(z)
    E = M.n_cols
    if len(zf) != E:
        raise ValueError("exponent vector length differs from column count")
    if E > MAX_ALPHA_COLUMNS:
        raise ValueError(f"E={E} exceeds the exhaustive-search cap {MAX_ALPHA_COLUMNS}")
    if case is PcpCase.C3_LEBESGUE:
        total = sum(zf, Fraction(0))
        if total != rank(M):
            return Membership(False, tuple(range(E)), f"sum of exponents {total} != rank {rank(M)}")
    full = _full(M)
    r_full = _rank_mask(M.entries, M.kind, full)
    for mask in range(1, 1 << E):
        A = tuple(j for j in range(E) if mask >> j & 1)
        if case is PcpCase.C2_COUNTING:
            lhs = sum((1 - zf[j] for j in A), Fraction(0))
            rhs = len(A) - r_full + _rank_mask(M.entries, M.kind, full & ~mask)
        else:
            lhs = sum((zf[j] for j in A), Fraction(0))
            rhs = _rank_mask(M.entries, M.kind, mask)
        if lhs > rhs:
            return Membership(False, A, f"{lhs} > {rhs} on columns {A}")
    return Membership(True)


def pcp_vertices(M: IncidenceLikeMatrix, case=PcpCase.C1_TORUS) -> list[tuple[int, ...]]:
    """0/1 vertices of the PCP: independent sets, spanning sets or bases."""
    case = _as_case(case)
    E = M.n_cols
    if E > MAX_VERTEX_COLUMNS:
        raise ValueError(f"E={E} exceeds the vertex enumeration cap {MAX_VERTEX_COLUMNS}")
    r_full = rank(M)
    out = []
    for mask in range(1 << E):
        size = bin(mask).count("1")
        r = _rank_mask(M.entries, M.kind, mask)
        if case is PcpCase.C1_TORUS:
            keep = r == size
        elif case is PcpCase.C2_COUNTING:
            keep = r == r_full
        else:
            keep = r == size == r_full
        if keep:
            out.append(tuple((mask >> j) & 1 for j in range(E)))
    return out


def hull_membership(vertices: Sequence[Sequence], z: Sequence, tol: float = 1e-9) -> bool:
    """LP feasibility of z as a convex combination of ``vertices``."""
    from scipy.optimize import linprog

    V = np.asarray(vertices, dtype=float)
    if V.size == 0:
        return False
    zz = np.asarray([float(x) for x in z])
    k = V.shape[0]
    a_eq = np.vstack([V.T, np.ones((1, k))])
    b_eq = np.concatenate([zz, [1.0]])
    res = linprog(np.zeros(k), A_eq=a_eq, b_eq=b_eq, bounds=[(0, None)] * k, method="highs")
    if res.status != 0:
        return False
    return bool(np.max(np.abs(a_eq @ res.x - b_eq)) <= tol * max(1.0, np.abs(b_eq).max()))


def holder_constant_at_vertex(M: IncidenceLikeMatrix, A: Sequence[int]) -> float:
    """Optimal constant of the Lebesgue-case inequality at the basis vertex A.

    Equals det(A_mat A_mat^T)^(-1/2) = 1/|det A_mat| on a row basis of M.
    """
    A = sorted(int(j) for j in A)
    r_full = rank(M)
    if len(A) != r_full or rank(M, A) != r_full:
        raise ValueError(f"columns {A} do not form a basis of the column space")
    rows = independent_rows(M)
    sub = [[M.entries[i][j] for j in A] for i in rows]
    gram = [[sum(a * b for a, b in zip(r1, r2)) for r2 in sub] for r1 in sub]
    det = exact.det_bareiss(gram)
    root = isqrt(det)
    if root * root == det:
        return float(Fraction(1, root))
    return float(det) ** -0.5


def is_unimodular(M: IncidenceLikeMatrix, max_minors: int = 200_000) -> bool:
    """True iff every nonsingular r x r minor (r = rank) has determinant +-1."""
    r = rank(M)
    if r == 0:
        return True
    row_sets = list(itertools.combinations(range(M.n_rows), r))
    col_sets = list(itertools.combinations(range(M.n_cols), r))
    if len(row_sets) * len(col_sets) > max_minors:
        raise ValueError("too many maximal minors to enumerate")
    for rs in row_sets:
        if exact.rank_of_vectors([M.entries[i] for i in rs]) < r:
            continue
        for cs in col_sets:
            d = exact.det_bareiss([[M.entries[i][j] for j in cs] for i in rs])
            if d not in (0, 1, -1):
                return False
    return True


# -------------------------------------------------- cumulant graph families

MAX_FAMILY_K = 6


def _canonical_adjacency(adj: np.ndarray, perms: np.ndarray) -> bytes:
    """Lexicographically smallest relabelled adjacency matrix over ``perms``."""
    stack = adj[perms[:, :, None], perms[:, None, :]].reshape(len(perms), -1)
    order = np.lexsort(stack.T[::-1])
    return stack[order[0]].tobytes()


def _connected(n_vertices: int, edges: Iterable[tuple[int, int]]) -> bool:
    adj = [[] for _ in range(n_vertices)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    seen = {0}
    stack = [0]
    while stack:
        x = stack.pop()
        for y in adj[x]:
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return len(seen) == n_vertices


def _regular_multigraphs(pairs: list[tuple[int, int]], degree: list[int]):
    """All multiplicity assignments on ``pairs`` meeting the exact degrees."""
    n_pairs = len(pairs)
    mult = [0] * n_pairs
    remaining = list(degree)
    # last pair index touching each vertex, to prune dead branches early
    last = {}
    for idx, (u, v) in enumerate(pairs):
        last[u] = idx
        last[v] = idx

    def rec(idx):
        if idx == n_pairs:
            if not any(remaining):
                yield list(mult)
            return
        u, v = pairs[idx]
        top = min(remaining[u], remaining[v])
        for m in range(top, -1, -1):
            remaining[u] -= m
            remaining[v] -= m
            ok = (last.get(u) != idx or remaining[u] == 0) and (last.get(v) != idx or remaining[v] == 0)
            if ok:
                mult[idx] = m
                yield from rec(idx + 1)
            remaining[u] += m
            remaining[v] += m
        mult[idx] = 0

    yield from rec(0)


def sum_family(m: int, k: int) -> list[IncidenceLikeMatrix]:
    """Connected loopless m-regular multigraphs on k vertices, up to isomorphism."""
    if m < 1 or k < 2:
        raise ValueError("need m >= 1 and k >= 2")
    if k > MAX_FAMILY_K:
        raise ValueError(f"k={k} exceeds the generation cap {MAX_FAMILY_K}")
    pairs = list(itertools.combinations(range(k), 2))
    perms = np.array(list(itertools.permutations(range(k))), dtype=np.intp)
    seen = set()
    out = []
    for mult in _regular_multigraphs(pairs, [m] * k):
        edges = [(u, v) for (u, v), c in zip(pairs, mult) for _ in range(c)]
        if not _connected(k, edges):
            continue
        adj = np.zeros((k, k), dtype=np.int8)
        for (u, v), c in zip(pairs, mult):
            adj[u, v] = adj[v, u] = c
        key = _canonical_adjacency(adj, perms)
        if key in seen:
            continue
        seen.add(key)
        out.append(IncidenceLikeMatrix.from_edges(k, edges))
    return out


@dataclass(frozen=True)
class BilinearGraph:
    """Graph of a bilinear-form cumulant: 2k vertices, k kernel edges.

    Vertex 2i carries the m-slot side of row i and vertex 2i+1 the n-slot
    side; ``tags[j]`` is ``"b"`` for kernel edges and ``"f"`` for
    correlation edges.
    """

    matrix: IncidenceLikeMatrix
    tags: tuple[str, ...]


def _matching_preserving_perms(k: int):
    out = []
    for order in itertools.permutations(range(k)):
        for flips in itertools.product((0, 1), repeat=k):
            p = [0] * (2 * k)
            for i, (j, f) in enumerate(zip(order, flips)):
                p[2 * i] = 2 * j + f
                p[2 * i + 1] = 2 * j + 1 - f
            out.append(p)
    return np.array(out, dtype=np.intp)


def bilinear_family(m: int, n: int, k: int, bipartite_only: bool = False) -> list[BilinearGraph]:
    """Graphs of connected no-flat Gaussian diagrams of the bilinear table.

    Correlation edges join slots of different rows, so they may join two
    m-sides or two n-sides as well as an m-side to an n-side. With
    ``bipartite_only`` only m-side to n-side correlation edges are kept.
    """
    if m < 1 or n < 1 or k < 2:
        raise ValueError("need m, n >= 1 and k >= 2")
    if k > MAX_FAMILY_K:
        raise ValueError(f"k={k} exceeds the generation cap {MAX_FAMILY_K}")
    V = 2 * k
    pairs = [(u, v) for u, v in itertools.combinations(range(V), 2) if u // 2 != v // 2]
    if bipartite_only:
        pairs = [(u, v) for u, v in pairs if u % 2 != v % 2]
    degree = [m if v % 2 == 0 else n for v in range(V)]
    perms = _matching_preserving_perms(k)
    kernel = [(2 * i, 2 * i + 1) for i in range(k)]
    seen = set()
    out = []
    for mult in _regular_multigraphs(pairs, degree):
        corr = [(u, v) for (u, v), c in zip(pairs, mult) for _ in range(c)]
        if not _connected(V, kernel + corr):
            continue
        # kernel edges are fixed by every matching-preserving relabelling,
        # so the correlation adjacency alone identifies the colored graph
        adj = np.zeros((V, V), dtype=np.int8)
        for (u, v), c in zip(pairs, mult):
            adj[u, v] = adj[v, u] = c
        key = _canonical_adjacency(adj, perms)
        if key in seen:
            continue
        seen.add(key)
        mat = IncidenceLikeMatrix.from_edges(V, kernel + corr)
        out.append(BilinearGraph(mat, tuple("b" for _ in kernel) + tuple("f" for _ in corr)))
    return out


@lru_cache(maxsize=16)
def _set_partitions(n: int) -> np.ndarray:
    """All restricted growth strings of length n, one per row."""
    out = [[0]]
    for _ in range(1, n):
        nxt = []
        for a in out:
            top = max(a)
            nxt.extend(a + [b] for b in range(top + 2))
        out = nxt
    if n == 0:
        return np.zeros((1, 0), dtype=np.int8)
    return np.array(out, dtype=np.int8)


def breaking_profile(M: IncidenceLikeMatrix, tags: Sequence[str]) -> set[tuple[int, ...]]:
    """Undominated (components, tag counts of cut edges) over vertex partitions.

    The best edge set to remove for a target component structure is the
    set of edges crossing a vertex partition, so maximising over vertex
    partitions reproduces the maximum over edge subsets. Returns tuples
    ``(co, count_tag_0, count_tag_1, ...)`` for the sorted distinct tags.
    """
    labels = sorted(set(tags))
    edges = np.array(M.edges(), dtype=np.intp).reshape(-1, 2)
    rgs = _set_partitions(M.n_rows)
    cut = rgs[:, edges[:, 0]] != rgs[:, edges[:, 1]]
    tag_arr = np.array(tags)
    cols = [rgs.max(axis=1).astype(np.int64) + 1]
    for t in labels:
        cols.append(cut[:, tag_arr == t].sum(axis=1))
    prof = np.unique(np.column_stack(cols), axis=0)
    # drop dominated profiles: no more components at no lower cost
    keep = []
    for i, p in enumerate(prof):
        dom = (prof[:, 0] >= p[0]) & np.all(prof[:, 1:] <= p[1:], axis=1)
        dom[i] = False
        if not dom.any():
            keep.append(tuple(int(x) for x in p))
    return set(keep)


@dataclass(frozen=True)
class CumulantCheck:
    """Result of the cumulant inequality alpha_k(z) <= k/2 over a family."""

    alpha: Fraction
    bound: Fraction
    holds: bool
    strict: bool
    n_graphs: int
    facet: dict


def _alpha_from_profile(profiles, x_by_tag: Sequence[Fraction]) -> Fraction:
    return max(Fraction(p[0]) - sum((c * x for c, x in zip(p[1:], x_by_tag)), Fraction(0))
               for p in profiles)


def cumulant_inequality_check(family: str, z, k: int, m: int, n: int | None = None) -> CumulantCheck:
    """Evaluate max alpha over Gamma(m, k) or Gamma(m, n, k) at exponent z.

    For the sum family ``z`` is a scalar; for the bilinear family it is
    ``(z_f, z_b)``: correlation-edge and kernel-edge exponents.
    """
    if family == "sum":
        zf = _fractions([z])[0]
        graphs = sum_family(m, k)
        profiles = set()
        for g in graphs:
            profiles |= breaking_profile(g, ["f"] * g.n_cols)
        alpha = _alpha_from_profile(profiles, [1 - zf]) if profiles else Fraction(0)
        facet = {"threshold_z": 1 - Fraction(1, m), "inside": Fraction(1, m) <= 1 - zf}
    elif family == "bilinear":
        if n is None:
            raise ValueError("bilinear family needs n")
        z_f, z_b = _fractions(z)
        graphs = bilinear_family(m, n, k)
        profiles = set()
        for g in graphs:
            profiles |= breaking_profile(g.matrix, g.tags)
        # tags sort as ("b", "f")
        alpha = _alpha_from_profile(profiles, [1 - z_b, 1 - z_f]) if profiles else Fraction(0)
        facet = {
            "total_breaking": Fraction(3, 2) <= Fraction(m + n, 2) * (1 - z_f) + (1 - z_b),
            "partial_breaking": 1 <= Fraction(min(m, n), 2) * (1 - z_f) + (1 - z_b),
            "kernel_breaking": z_b <= Fraction(1, 2),
        }
    else:
        raise ValueError(f"unknown family {family!r}")
    bound = Fraction(k, 2)
    return CumulantCheck(alpha, bound, alpha <= bound, alpha < bound, len(graphs), facet)


def sum_family_threshold(m: int, k_max: int = 4) -> Fraction:
    """Largest z with alpha_k(z) <= k/2 for every k in 2..k_max over Gamma(m, k)."""
    z_star = Fraction(1)
    for k in range(2, k_max + 1):
        if (m * k) % 2:
            continue
        for g in sum_family(m, k):
            for p in breaking_profile(g, ["f"] * g.n_cols):
                co, cut = p[0], p[1]
                # co - cut (1 - z) <= k/2
                if co > Fraction(k, 2):
                    if cut == 0:
                        return Fraction(-1)
                    z_star = min(z_star, 1 - (co - Fraction(k, 2)) / cut)
    return z_star


def bilinear_pcp_polygon(m: int, n: int, k_max: int = 4) -> list[tuple[Fraction, Fraction]]:
    """Vertices (z_f, z_b) of {z in [0,1]^2 : alpha_k(z) <= k/2, k = 2..k_max}.

    Each breaking profile gives a half-plane co - c_b (1 - z_b) - c_f (1 - z_f) <= k/2;
    the vertex set is found by exact pairwise intersection.
    """
    halfplanes: set[tuple[Fraction, Fraction, Fraction]] = set()  # a_f z_f + a_b z_b <= c
    for k in range(2, k_max + 1):
        for g in bilinear_family(m, n, k):
            for co, c_b, c_f in breaking_profile(g.matrix, g.tags):
                # co - c_b + c_b z_b - c_f + c_f z_f <= k/2
                halfplanes.add((Fraction(c_f), Fraction(c_b), Fraction(k, 2) - co + c_b + c_f))
    halfplanes |= {(Fraction(1), Fraction(0), Fraction(1)), (Fraction(0), Fraction(1), Fraction(1)),
                   (Fraction(-1), Fraction(0), Fraction(0)), (Fraction(0), Fraction(-1), Fraction(0))}
    lines = sorted(halfplanes)
    pts = set()
    for (a1, b1, c1), (a2, b2, c2) in itertools.combinations(lines, 2):
        det = a1 * b2 - a2 * b1
        if det == 0:
            continue
        x = (c1 * b2 - c2 * b1) / det
        y = (a1 * c2 - a2 * c1) / det
        if all(a * x + b * y <= c for a, b, c in lines):
            pts.add((x, y))
    # keep extreme points only (drop points interior to an edge)
    pts = sorted(pts)
    extreme = []
    for p in pts:
        others = [q for q in pts if q != p]
        interior = any(_between(q1, p, q2) for q1, q2 in itertools.combinations(others, 2))
        if not interior:
            extreme.append(p)
    return extreme


def _between(a, p, b) -> bool:
    cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
    if cross != 0:
        return False
    return min(a[0], b[0]) <= p[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= p[1] <= max(a[1], b[1])


def bilinear_reference_vertices(m: int, n: int) -> list[tuple[Fraction, Fraction]]:
    """Closed-form vertices A, B, C, D for m <= n, ordered along the boundary."""
    lo, hi = min(m, n), max(m, n)
    A = (1 - Fraction(1, m + n), Fraction(0))
    B = (1 - Fraction(1, hi), Fraction(lo, 2 * hi))
    C = (1 - Fraction(1, lo), Fraction(1, 2))
    D = (Fraction(0), Fraction(1, 2))
    return [A, B, C, D]


# ------------------------------------------------------- lattice counting

def lattice_count(M: IncidenceLikeMatrix, b: Sequence[int], T: int, max_points: int = 20_000_000) -> int:
    """#{s in Z^V, |s_v| <= T/2 : s M = b} by vectorised enumeration."""
    V, E = M.n_rows, M.n_cols
    b = np.asarray(b, dtype=np.int64)
    if b.shape != (E,):
        raise ValueError(f"b must have length E={E}")
    vals = np.arange(-(T // 2), T // 2 + 1, dtype=np.int64)
    if len(vals) ** V > max_points:
        raise ValueError("lattice box too large for enumeration")
    A = M.to_array()
    if V == 0:
        return int(np.all(b == 0))
    # enumerate the last V-1 coordinates as a block, loop over the first
    rest = np.array(list(itertools.product(vals, repeat=V - 1)), dtype=np.int64).reshape(-1, V - 1)
    partial = rest @ A[1:, :] if V > 1 else np.zeros((1, E), dtype=np.int64)
    count = 0
    for s0 in vals:
        tot = partial + s0 * A[0]
        count += int(np.count_nonzero(np.all(tot == b, axis=1)))
    return count


def lattice_count_kM(M: IncidenceLikeMatrix, b: Sequence[int], T_list: Sequence[int]) -> float:
    """Leading coefficient of E(T) ~ k_M T^D with D = V - r(M).

    Returns 0 when b is outside the row space of M. Otherwise E(T) is
    counted for each T and k_M fitted by least squares on T^D and T^(D-1).
    """
    b = [int(x) for x in b]
    if len(b) != M.n_cols:
        raise ValueError(f"b must have length E={M.n_cols}")
    if exact.rank_of_vectors(list(M.entries) + [b]) > exact.rank_of_vectors(M.entries):
        return 0.0
    D = corank(M)
    T_arr = np.asarray(T_list, dtype=float)
    counts = np.array([lattice_count(M, b, int(T)) for T in T_list], dtype=float)
    if D == 0:
        return float(counts[-1])
    if len(T_arr) == 1:
        return float(counts[0] / T_arr[0] ** D)
    design = np.column_stack([T_arr ** D, T_arr ** (D - 1)])
    coef, *_ = np.linalg.lstsq(design, counts, rcond=None)
    return float(coef[0])


# -------------------------------------------------------------- formats

def cycle_graph(n: int) -> IncidenceLikeMatrix:
    """Directed n-cycle: edge e runs from vertex e to vertex e+1 (mod n)."""
    if n < 2:
        raise ValueError("a cycle needs n >= 2")
    return IncidenceLikeMatrix.from_edges(n, [(e, (e + 1) % n) for e in range(n)])


def parse_edge_list(text: str) -> IncidenceLikeMatrix:
    """Parse ``u v`` lines (0-based vertices, '#' comments) into an incidence matrix."""
    edges = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'u v', got {line!r}")
        edges.append((int(parts[0]), int(parts[1])))
    if not edges:
        raise ValueError("empty edge list")
    n_vertices = max(max(u, v) for u, v in edges) + 1
    return IncidenceLikeMatrix.from_edges(n_vertices, edges)


def format_edge_list(M: IncidenceLikeMatrix) -> str:
    return "".join(f"{u} {v}\n" for u, v in M.edges())
