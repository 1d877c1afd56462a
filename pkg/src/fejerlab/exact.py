"""Exact linear algebra over the rationals.

Small helpers used wherever rank or determinant decisions must be exact:
rank of integer column sets, reduced row echelon forms, null-space bases
and Bareiss determinants. Inputs are sequences of integer (or Fraction)
rows; nothing here touches floating point.
"""
from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Sequence

Row = Sequence[int]


def _primitive(vec: list[int]) -> list[int]:
    g = 0
    for x in vec:
        g = gcd(g, x)
    if g > 1:
        vec = [x // g for x in vec]
    return vec


def rank_of_vectors(vectors: Sequence[Row]) -> int:
    """Rank over Q of a family of integer vectors.

    Fraction-free incremental elimination: each incoming vector is reduced
    against the current echelon basis by integer combinations and kept
    primitive, so intermediate entries stay small.
    """
    basis: list[tuple[int, list[int]]] = []  # (pivot index, vector)
    for v in vectors:
        w = [int(x) for x in v]
        for piv, b in basis:
            if w[piv]:
                a, c = b[piv], w[piv]
                w = [a * wi - c * bi for wi, bi in zip(w, b)]
        piv = next((i for i, x in enumerate(w) if x), None)
        if piv is not None:
            basis.append((piv, _primitive(w)))
    return len(basis)


def rref(rows: Sequence[Sequence]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form with exact Fractions.

    Returns the nonzero rows of the RREF and the list of pivot columns.
    """
    mat = [[Fraction(x) for x in r] for r in rows]
    if not mat:
        return [], []
    n_rows, n_cols = len(mat), len(mat[0])
    pivots: list[int] = []
    r = 0
    for c in range(n_cols):
        pr = next((i for i in range(r, n_rows) if mat[i][c] != 0), None)
        if pr is None:
            continue
        mat[r], mat[pr] = mat[pr], mat[r]
        p = mat[r][c]
        mat[r] = [x / p for x in mat[r]]
        for i in range(n_rows):
            if i != r and mat[i][c] != 0:
                f = mat[i][c]
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[r])]
        pivots.append(c)
        r += 1
        if r == n_rows:
            break
    return mat[:r], pivots


def nullspace_basis(rows: Sequence[Sequence], n_cols: int) -> tuple[list[list[Fraction]], list[int]]:
    """Basis of {x : A x = 0} read off the RREF.

    Each basis vector has a 1 in one free column and 0 in the other free
    columns. Returns the vectors and the free column indices.
    """
    red, pivots = rref(rows) if rows else ([], [])
    free = [c for c in range(n_cols) if c not in pivots]
    basis = []
    for j in free:
        x = [Fraction(0)] * n_cols
        x[j] = Fraction(1)
        for row, pc in zip(red, pivots):
            x[pc] = -row[j]
        basis.append(x)
    return basis, free


def integer_scaled(vec: Sequence[Fraction]) -> list[int]:
    """Smallest integer multiple of a rational vector, sign kept."""
    den = 1
    for x in vec:
        den = den * Fraction(x).denominator // gcd(den, Fraction(x).denominator)
    return _primitive([int(Fraction(x) * den) for x in vec])


def det_bareiss(mat: Sequence[Sequence[int]]) -> int:
    """Exact determinant of a square integer matrix (Bareiss)."""
    a = [[int(x) for x in r] for r in mat]
    n = len(a)
    if n == 0:
        return 1
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def inverse(mat: Sequence[Sequence]) -> list[list[Fraction]]:
    """Exact inverse of a nonsingular square rational matrix."""
    n = len(mat)
    aug = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)]
           for i, row in enumerate(mat)]
    red, pivots = rref(aug)
    if pivots[:n] != list(range(n)) or len(red) < n:
        raise ValueError("matrix is singular")
    return [row[n:] for row in red]
