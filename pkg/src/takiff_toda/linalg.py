"""Small dense linear algebra over exact rationals (or floats).

numpy's LAPACK routines cannot handle ``Fraction`` entries, and the reduction
algorithm needs exact solves on tiny graded pieces, so elimination is done by
hand here. The same code paths accept floats, pivoting on the largest
magnitude entry.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

Scalar = Fraction | float | int


def _copy(rows: Sequence[Sequence[Scalar]]) -> list[list[Scalar]]:
    return [list(r) for r in rows]


def _is_zero(x: Scalar, tol: float) -> bool:
    if isinstance(x, (Fraction, int)):
        return x == 0
    return abs(x) <= tol


def row_echelon(rows: Sequence[Sequence[Scalar]], tol: float = 1e-12):
    """Reduced row echelon form. Returns ``(matrix, pivot_columns)``."""
    a = _copy(rows)
    if not a:
        return a, []
    m, n = len(a), len(a[0])
    pivots: list[int] = []
    r = 0
    for c in range(n):
        if r >= m:
            break
        best = max(range(r, m), key=lambda i: abs(a[i][c]))
        if _is_zero(a[best][c], tol):
            continue
        a[r], a[best] = a[best], a[r]
        piv = a[r][c]
        a[r] = [v / piv for v in a[r]]
        for i in range(m):
            if i != r and not _is_zero(a[i][c], 0.0):
                f = a[i][c]
                a[i] = [vi - f * vr for vi, vr in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
    return a, pivots


def rank(rows: Sequence[Sequence[Scalar]], tol: float = 1e-12) -> int:
    return len(row_echelon(rows, tol)[1])


def solve(a: Sequence[Sequence[Scalar]], b: Sequence[Scalar], tol: float = 1e-12) -> list[Scalar]:
    """Solve the square system ``a x = b``; raises ``ValueError`` if singular."""
    n = len(a)
    if any(len(row) != n for row in a) or len(b) != n:
        raise ValueError("solve expects a square system")
    aug = [list(row) + [rhs] for row, rhs in zip(a, b)]
    red, pivots = row_echelon(aug, tol)
    if pivots != list(range(n)):
        raise ValueError("singular system")
    return [red[i][n] for i in range(n)]


def det(a: Sequence[Sequence[Scalar]]) -> Scalar:
    """Determinant by elimination; exact for integer/Fraction input."""
    m = [[Fraction(v) if isinstance(v, int) else v for v in row] for row in a]
    n = len(m)
    sign = 1
    result: Scalar = Fraction(1) if all(isinstance(v, Fraction) for row in m for v in row) else 1.0
    for c in range(n):
        p = next((i for i in range(c, n) if m[i][c] != 0), None)
        if p is None:
            return 0 * result
        if p != c:
            m[c], m[p] = m[p], m[c]
            sign = -sign
        piv = m[c][c]
        result = result * piv
        for i in range(c + 1, n):
            f = m[i][c] / piv
            if f != 0:
                m[i] = [vi - f * vc for vi, vc in zip(m[i], m[c])]
    return sign * result


def inverse(a: Sequence[Sequence[Scalar]], tol: float = 1e-12) -> list[list[Scalar]]:
    """Matrix inverse by Gauss-Jordan; exact for Fraction input."""
    n = len(a)
    one = Fraction(1) if all(isinstance(v, (Fraction, int)) for row in a for v in row) else 1.0
    aug = [list(row) + [one if i == j else 0 * one for j in range(n)] for i, row in enumerate(a)]
    red, pivots = row_echelon(aug, tol)
    if pivots[:n] != list(range(n)):
        raise ValueError("singular matrix")
    return [row[n:] for row in red]
