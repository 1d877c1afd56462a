"""Partition-lattice cumulant algebra, Wick products and diagrams.

Subset functions are dictionaries keyed by ``frozenset`` of positions
0..n-1. All recursions work for any number type closed under + and *, so
passing ``Fraction`` values gives exact results.
"""
from __future__ import annotations

import itertools
import json
from collections import Counter
from dataclasses import dataclass
from math import comb, factorial
from typing import Callable, Iterable, Iterator, Mapping, Sequence

from .graph_core import IncidenceLikeMatrix, format_edge_list

MAX_SUBSET_SIZE = 10
MAX_WICK_SIZE = 8
MAX_TABLE_SLOTS = 12
MAX_GAUSSIAN_SLOTS = 16


# ------------------------------------------------------------ subset algebra

def _masks_containing_lowest(mask: int) -> Iterator[int]:
    """Submasks of ``mask`` that contain its lowest set bit."""
    low = mask & -mask
    rest = mask ^ low
    sub = rest
    while True:
        yield sub | low
        if sub == 0:
            return
        sub = (sub - 1) & rest


def _to_masks(values: Mapping, n: int) -> dict[int, object]:
    out = {}
    for key, v in values.items():
        m = 0
        for i in key:
            if not 0 <= i < n:
                raise ValueError(f"position {i} outside 0..{n - 1}")
            m |= 1 << i
        out[m] = v
    return out


def _from_masks(values: dict[int, object], n: int) -> dict[frozenset, object]:
    return {frozenset(i for i in range(n) if m >> i & 1): v for m, v in values.items()}


def _lookup(table: dict[int, object], mask: int, what: str):
    try:
        return table[mask]
    except KeyError:
        raise KeyError(f"missing {what} for subset mask {mask:b}") from None


def moments_to_cumulants(moments: Mapping[frozenset, object], n: int) -> dict[frozenset, object]:
    """Joint cumulants chi(W) for every nonempty W of {0..n-1}.

    Solves m(W) = sum over partitions of W of the product of block
    cumulants by peeling off the block that holds the smallest element:
    chi(W) = m(W) - sum_{B < W, min W in B} chi(B) m(W \\ B).
    """
    if n > MAX_SUBSET_SIZE:
        raise ValueError(f"n={n} exceeds the cap {MAX_SUBSET_SIZE}")
    m = _to_masks(moments, n)
    m.setdefault(0, 1)
    chi: dict[int, object] = {}
    for mask in range(1, 1 << n):
        val = _lookup(m, mask, "moment")
        for B in _masks_containing_lowest(mask):
            if B != mask:
                val = val - chi[B] * _lookup(m, mask ^ B, "moment")
        chi[mask] = val
    return _from_masks(chi, n)


def cumulants_to_moments(cumulants: Mapping[frozenset, object], n: int) -> dict[frozenset, object]:
    """Inverse of :func:`moments_to_cumulants`; includes m(empty) = 1."""
    if n > MAX_SUBSET_SIZE:
        raise ValueError(f"n={n} exceeds the cap {MAX_SUBSET_SIZE}")
    chi = _to_masks(cumulants, n)
    m: dict[int, object] = {0: 1}
    for mask in range(1, 1 << n):
        val = 0
        for B in _masks_containing_lowest(mask):
            val = val + _lookup(chi, B, "cumulant") * m[mask ^ B]
        m[mask] = val
    return _from_masks(m, n)


def _inverse_moments(chi: dict[int, object], n: int) -> dict[int, object]:
    """c(S) = sum over partitions of S of (-1)^r prod chi: the series exp(-chi)."""
    c: dict[int, object] = {0: 1}
    for mask in range(1, 1 << n):
        val = 0
        for B in _masks_containing_lowest(mask):
            val = val - _lookup(chi, B, "cumulant") * c[mask ^ B]
        c[mask] = val
    return c


def wick_coefficients(n: int, cumulants: Mapping[frozenset, object]) -> dict[frozenset, object]:
    """Expansion :Y^W: = sum_{U subset W} coef[U] Y^U for W = {0..n-1}.

    ``coef[U]`` is the signed partition sum over W \\ U, so that
    Y^W = sum_U :Y^U: E(Y^(W \\ U)) holds and E :Y^W: = 0.
    """
    if n > MAX_WICK_SIZE:
        raise ValueError(f"|W|={n} exceeds the cap {MAX_WICK_SIZE}")
    chi = _to_masks(cumulants, n)
    c = _inverse_moments(chi, n)
    full = (1 << n) - 1
    return _from_masks({U: c[full ^ U] for U in range(1 << n)}, n)


def expectation(coefficients: Mapping[frozenset, object], moments: Mapping[frozenset, object]):
    """E of a polynomial given as {subset: coefficient} under a moment functional."""
    total = 0
    for U, a in coefficients.items():
        total = total + a * (1 if not U else moments[frozenset(U)])
    return total


# ------------------------------------------------------------ Appell polynomials

def gaussian_cumulants(variance, order: int) -> list:
    """Cumulant list [k_1, ..., k_order] of a centred Gaussian."""
    return ([0, variance] + [0] * max(0, order - 2))[:order]


def appell_polynomial(n: int, cumulants: Sequence) -> list:
    """Coefficients [a_0, ..., a_n] of the univariate Appell polynomial P_n.

    ``cumulants`` lists k_1, k_2, ... (at least n entries). P_n(x) =
    sum_j C(n, j) c_(n-j) x^j where sum_j c_j t^j / j! = 1 / E e^(tX).
    """
    if n < 0:
        raise ValueError("order must be non-negative")
    if n > MAX_WICK_SIZE:
        raise ValueError(f"order {n} exceeds the cap {MAX_WICK_SIZE}")
    kappa = list(cumulants) + [0] * max(0, n - len(cumulants))
    c = [1]
    for j in range(1, n + 1):
        c.append(-sum(comb(j - 1, i - 1) * kappa[i - 1] * c[j - i] for i in range(1, j + 1)))
    return [comb(n, j) * c[n - j] for j in range(n + 1)]


def multivariate_appell(orders: Sequence[int], joint_cumulant: Callable[[tuple], object]) -> dict[tuple, object]:
    """Coefficient table {exponent tuple: coefficient} of P_(n_1, ..., n_k).

    ``joint_cumulant`` maps a sorted tuple of variable labels (a multiset)
    to the joint cumulant of those variables.
    """
    labels = [j for j, nj in enumerate(orders) for _ in range(nj)]
    n = len(labels)
    if n > MAX_WICK_SIZE:
        raise ValueError(f"total order {n} exceeds the cap {MAX_WICK_SIZE}")
    chi = {}
    for mask in range(1, 1 << n):
        chi[mask] = joint_cumulant(tuple(sorted(labels[i] for i in range(n) if mask >> i & 1)))
    c = _inverse_moments(chi, n)
    full = (1 << n) - 1
    table: dict[tuple, object] = {}
    for U in range(1 << n):
        expo = [0] * len(orders)
        for i in range(n):
            if U >> i & 1:
                expo[labels[i]] += 1
        key = tuple(expo)
        table[key] = table.get(key, 0) + c[full ^ U]
    return {k: v for k, v in table.items() if v != 0}


def appell_derivative(table: Mapping[tuple, object], j: int) -> dict[tuple, object]:
    """Partial derivative in x_j of a coefficient table."""
    out = {}
    for expo, a in table.items():
        if expo[j]:
            e = list(expo)
            e[j] -= 1
            out[tuple(e)] = out.get(tuple(e), 0) + a * expo[j]
    return {k: v for k, v in out.items() if v != 0}


def evaluate_polynomial(table: Mapping[tuple, object], x: Sequence) -> object:
    total = 0
    for expo, a in table.items():
        term = a
        for xi, e in zip(x, expo):
            term = term * xi ** e
        total = total + term
    return total


# ------------------------------------------------------------ diagrams

@dataclass(frozen=True)
class DiagramTable:
    """Rows of slots; slot (i, j) has flat position sum(row_sizes[:i]) + j."""

    row_sizes: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "row_sizes", tuple(int(x) for x in self.row_sizes))
        if not self.row_sizes or any(x < 1 for x in self.row_sizes):
            raise ValueError("a table needs at least one row and positive row sizes")

    @property
    def n_slots(self) -> int:
        return sum(self.row_sizes)

    @property
    def row_of(self) -> tuple[int, ...]:
        return tuple(i for i, n in enumerate(self.row_sizes) for _ in range(n))

    def slot(self, i: int, j: int) -> int:
        if not 0 <= j < self.row_sizes[i]:
            raise IndexError("slot outside the row")
        return sum(self.row_sizes[:i]) + j


@dataclass(frozen=True)
class Diagram:
    """A partition of the table slots into blocks (sorted tuples)."""

    table: DiagramTable
    blocks: tuple[tuple[int, ...], ...]

    def rows_of(self, block: Sequence[int]) -> set[int]:
        row = self.table.row_of
        return {row[s] for s in block}

    @property
    def is_flat_free(self) -> bool:
        return all(len(self.rows_of(b)) > 1 for b in self.blocks)

    @property
    def is_gaussian(self) -> bool:
        return all(len(b) == 2 for b in self.blocks)

    @property
    def has_singletons(self) -> bool:
        return any(len(b) == 1 for b in self.blocks)

    @property
    def is_connected(self) -> bool:
        return _rows_connected(self.table, self.blocks)

    def to_dict(self) -> dict:
        return {"row_sizes": list(self.table.row_sizes), "blocks": [list(b) for b in self.blocks]}

    @classmethod
    def from_dict(cls, data: dict) -> "Diagram":
        table = DiagramTable(tuple(data["row_sizes"]))
        blocks = tuple(sorted(tuple(sorted(int(s) for s in b)) for b in data["blocks"]))
        seen = sorted(s for b in blocks for s in b)
        if seen != list(range(table.n_slots)):
            raise ValueError("blocks do not partition the table")
        return cls(table, blocks)


def _rows_connected(table: DiagramTable, blocks) -> bool:
    k = len(table.row_sizes)
    parent = list(range(k))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    row = table.row_of
    for b in blocks:
        first = find(row[b[0]])
        for s in b[1:]:
            parent[find(row[s])] = first
    return len({find(i) for i in range(k)}) == 1


def _partitions(elements: tuple[int, ...], block_ok: Callable[[tuple], bool], pair_only: bool):
    if not elements:
        yield ()
        return
    first, rest = elements[0], elements[1:]
    sizes = [1] if pair_only else range(len(rest) + 1)
    for size in sizes:
        for others in itertools.combinations(rest, size):
            block = (first,) + others
            if not block_ok(block):
                continue
            remaining = tuple(e for e in rest if e not in others)
            for tail in _partitions(remaining, block_ok, pair_only):
                yield (block,) + tail


def enumerate_diagrams(table: DiagramTable, connected: bool = False, no_flat: bool = False,
                       gaussian: bool = False, no_singletons: bool = False) -> list[Diagram]:
    """All diagrams of ``table`` satisfying the constraints, in generation order.

    ``no_flat`` excludes blocks lying inside a single row (this includes
    singletons); ``gaussian`` restricts to perfect matchings.
    """
    K = table.n_slots
    cap = MAX_GAUSSIAN_SLOTS if gaussian else MAX_TABLE_SLOTS
    if K > cap:
        raise ValueError(f"{K} slots exceed the enumeration cap {cap}")
    if gaussian and K % 2:
        return []
    row = table.row_of

    def ok(block):
        if no_singletons and len(block) == 1:
            return False
        if no_flat and len({row[s] for s in block}) < 2:
            return False
        return True

    out = []
    for blocks in _partitions(tuple(range(K)), ok, gaussian):
        if connected and not _rows_connected(table, blocks):
            continue
        out.append(Diagram(table, blocks))
    return out


MODES = {
    "moment": dict(),
    "wick-moment": dict(no_flat=True),
    "cumulant": dict(connected=True),
    "wick-cumulant": dict(connected=True, no_flat=True),
}


def diagram_cumulant(table: DiagramTable, chi: Callable[[tuple], object], mode: str = "cumulant",
                     gaussian: bool = False):
    """Sum over the mode's diagram class of prod_j chi(block_j).

    Modes: ``moment`` (all diagrams), ``wick-moment`` (no flat blocks),
    ``cumulant`` (connected), ``wick-cumulant`` (connected, no flat).
    ``gaussian`` restricts to pairings, valid when chi vanishes on every
    block of size other than two.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    total = 0
    for d in enumerate_diagrams(table, gaussian=gaussian, **MODES[mode]):
        term = 1
        for b in d.blocks:
            term = term * chi(b)
            if term == 0:
                break
        total = total + term
    return total


def diagrams_to_json(diagrams: Iterable[Diagram]) -> str:
    return json.dumps([d.to_dict() for d in diagrams])


def diagrams_from_json(text: str) -> list[Diagram]:
    return [Diagram.from_dict(x) for x in json.loads(text)]


# ------------------------------------------------------------ compilation to graphs

@dataclass(frozen=True)
class CompiledGraph:
    """A Fejér-graph datum for one diagram.

    Vertices are the time indices (k for sums; t_i = 2i and s_i = 2i + 1
    for bilinear forms) followed by one vertex per block of size >= 3.
    Edge tags: ``f`` correlation edge from a pair block, ``b`` kernel edge,
    ``a`` transfer-function edge into a higher-order block vertex.
    ``weight`` maps an innovation-cumulant order to its power in
    kappa_gamma = prod_j d_|V_j|.
    """

    matrix: IncidenceLikeMatrix
    tags: tuple[str, ...]
    weight: tuple[tuple[int, int], ...]
    diagram: Diagram
    n_time: int

    def kappa(self, d: Mapping[int, object]):
        val = 1
        for order, power in self.weight:
            val = val * d[order] ** power
        return val

    def edge_list(self) -> str:
        return format_edge_list(self.matrix)

    def sidecar(self) -> dict:
        return {"tags": list(self.tags), "weight": {str(k): v for k, v in self.weight},
                "diagram": self.diagram.to_dict()}


def _compile(diagram: Diagram, slot_vertex: Sequence[int], n_time: int,
             kernel_edges: Sequence[tuple[int, int]]) -> CompiledGraph:
    edges: list[tuple[int, int]] = list(kernel_edges)
    tags = ["b"] * len(kernel_edges)
    extra = n_time
    orders: Counter = Counter()
    for block in diagram.blocks:
        orders[len(block)] += 1
        if len(block) == 2:
            edges.append((slot_vertex[block[0]], slot_vertex[block[1]]))
            tags.append("f")
        else:
            for s in block:
                edges.append((slot_vertex[s], extra))
                tags.append("a")
            extra += 1
    M = IncidenceLikeMatrix.from_edges(extra, edges)
    return CompiledGraph(M, tuple(tags), tuple(sorted(orders.items())), diagram, n_time)


def compile_cumulant_graphs(kind: str, m: int, k: int, n: int | None = None,
                            gaussian: bool = True) -> list[CompiledGraph]:
    """Graphs for the k-th cumulant of a sum or bilinear form of Appell polynomials.

    ``sum``: S_T = sum_t P_m(X_t), table of k rows with m slots.
    ``bilinear``: Q_T = sum_{t,s} b(t - s) P_(m,n)(X_t, X_s), table of k
    rows with m + n slots. One entry per connected no-flat diagram of the
    table; with ``gaussian`` only pairings are used.
    """
    if k < 1 or m < 1:
        raise ValueError("need k >= 1 and m >= 1")
    if k > 4 or m > 3 or (n is not None and n > 3):
        raise ValueError("generation is capped at k <= 4 and m, n <= 3")
    if kind == "sum":
        table = DiagramTable((m,) * k)
        slot_vertex = table.row_of
        n_time, kernel = k, []
    elif kind == "bilinear":
        if n is None or n < 1:
            raise ValueError("bilinear forms need n >= 1")
        table = DiagramTable((m + n,) * k)
        slot_vertex = [2 * i + (j >= m) for i in range(k) for j in range(m + n)]
        n_time, kernel = 2 * k, [(2 * i, 2 * i + 1) for i in range(k)]
    else:
        raise ValueError(f"unknown kind {kind!r}")
    diagrams = enumerate_diagrams(table, connected=True, no_flat=True, gaussian=gaussian)
    return [_compile(d, slot_vertex, n_time, kernel) for d in diagrams]


def _canonical_key(g: CompiledGraph, n_time: int, paired: bool) -> tuple:
    n_vert = g.matrix.n_rows
    edges = g.matrix.edges()
    time_groups = list(range(n_time // 2)) if paired else list(range(n_time))
    extra = list(range(n_time, n_vert))
    best = None
    for perm_t in itertools.permutations(time_groups):
        if paired:
            vmap = {}
            for new, old in enumerate(perm_t):
                vmap[2 * old], vmap[2 * old + 1] = 2 * new, 2 * new + 1
        else:
            vmap = {old: new for new, old in enumerate(perm_t)}
        for perm_x in itertools.permutations(extra):
            full = dict(vmap)
            full.update({old: n_time + i for i, old in enumerate(perm_x)})
            key = tuple(sorted(
                (tag, *((full[u], full[v]) if tag != "f" else tuple(sorted((full[u], full[v])))))
                for (u, v), tag in zip(edges, g.tags)))
            if best is None or key < best:
                best = key
    return best


def group_isomorphic(graphs: Sequence[CompiledGraph]) -> list[tuple[CompiledGraph, int]]:
    """Group compiled graphs up to relabelling of rows and block vertices.

    Returns (representative, multiplicity) pairs in first-seen order. Used
    for reporting; diagram counts elsewhere stay raw.
    """
    groups: dict[tuple, list] = {}
    for g in graphs:
        key = (g.weight, _canonical_key(g, g.n_time, "b" in g.tags))
        if key in groups:
            groups[key][1] += 1
        else:
            groups[key] = [g, 1]
    return [(g, c) for g, c in groups.values()]


def isserlis_moment(cov: Callable[[int, int], object], items: Sequence[int]):
    """E prod X_i for centred jointly Gaussian variables (pairing sum)."""
    items = list(items)
    if not items:
        return 1
    if len(items) % 2:
        return 0
    first, rest = items[0], items[1:]
    total = 0
    for idx, partner in enumerate(rest):
        c = cov(first, partner)
        if c:
            total = total + c * isserlis_moment(cov, rest[:idx] + rest[idx + 1:])
    return total


def gaussian_count(k: int) -> int:
    """2^(k-1) (k-1)!: connected pairings of k >= 2 rows of two without flat pairs."""
    if k < 2:
        return 0
    return 2 ** (k - 1) * factorial(k - 1)
