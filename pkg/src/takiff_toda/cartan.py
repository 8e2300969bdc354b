"""Cartan matrices of the classical series and their positive roots.

Convention: ``c[i][j] = alpha_j(h_i)``, i.e. row ``i`` holds the values of all
simple roots on the coroot ``h_i``. For B_n the last simple root is short, so
``c[n-1][n-2] = -2``; C_n is the transpose.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .linalg import det

SERIES = ("A", "B", "C", "D")
MIN_RANK = {"A": 1, "B": 2, "C": 2, "D": 4}


class CartanError(ValueError):
    pass


@dataclass(frozen=True)
class CartanMatrix:
    entries: tuple[tuple[int, ...], ...]
    series: str | None = None

    def __post_init__(self):
        rows = tuple(tuple(int(v) for v in row) for row in self.entries)
        if not rows or any(len(r) != len(rows) for r in rows):
            raise CartanError("Cartan matrix must be square and non-empty")
        object.__setattr__(self, "entries", rows)

    @property
    def n(self) -> int:
        return len(self.entries)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.entries, dtype=float)

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    @property
    def is_symmetric(self) -> bool:
        return all(self.entries[i][j] == self.entries[j][i] for i in range(self.n) for j in range(self.n))

    @property
    def label(self) -> str:
        return f"{self.series}{self.n}" if self.series else f"rank{self.n}"


def cartan_matrix(series: str, rank: int) -> CartanMatrix:
    """Standard Cartan matrix of type ``series`` (A, B, C or D) and given rank."""
    s = str(series).upper()
    if s not in SERIES:
        raise CartanError(f"unknown series {series!r}; expected one of {', '.join(SERIES)}")
    if not isinstance(rank, (int, np.integer)) or rank < MIN_RANK[s]:
        raise CartanError(f"rank {rank!r} invalid for series {s} (minimum {MIN_RANK[s]})")
    n = int(rank)
    c = [[0] * n for _ in range(n)]
    for i in range(n):
        c[i][i] = 2
    if s == "D":
        for i in range(n - 2):
            c[i][i + 1] = c[i + 1][i] = -1
        c[n - 3][n - 1] = c[n - 1][n - 3] = -1
    else:
        for i in range(n - 1):
            c[i][i + 1] = c[i + 1][i] = -1
        if s == "B":
            c[n - 1][n - 2] = -2
        elif s == "C":
            c[n - 2][n - 1] = -2
    return CartanMatrix(tuple(map(tuple, c)), series=s)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class ValidationReport:
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def __bool__(self) -> bool:
        return self.passed


def validate_cartan(m) -> ValidationReport:
    """Check every Cartan-matrix axiom; never raises on bad content."""
    report = ValidationReport()
    rows = m.entries if isinstance(m, CartanMatrix) else m
    try:
        a = [[v for v in row] for row in rows]
    except TypeError:
        report.checks.append(CheckResult("square", False, "not a matrix"))
        return report
    n = len(a)
    square = n > 0 and all(len(r) == n for r in a)
    report.checks.append(CheckResult("square", square, "" if square else "matrix is not square"))
    if not square:
        return report
    integral = all(float(v) == int(v) for r in a for v in r)
    report.checks.append(CheckResult("integer", integral, "" if integral else "non-integer entry"))
    if not integral:
        return report
    a = [[int(v) for v in r] for r in a]

    bad_diag = [i for i in range(n) if a[i][i] != 2]
    report.checks.append(CheckResult("diagonal", not bad_diag,
                                     f"c[i][i] != 2 at {bad_diag}" if bad_diag else ""))
    pos = [(i, j) for i in range(n) for j in range(n) if i != j and a[i][j] > 0]
    report.checks.append(CheckResult("off_diagonal_nonpositive", not pos,
                                     f"positive off-diagonal entries at {pos}" if pos else ""))
    asym = [(i, j) for i in range(n) for j in range(n) if (a[i][j] == 0) != (a[j][i] == 0)]
    report.checks.append(CheckResult("zero_pattern", not asym,
                                     f"c[i][j]=0 but c[j][i]!=0 at {asym}" if asym else ""))
    minors = [det([row[:k] for row in a[:k]]) for k in range(1, n + 1)]
    bad = [k + 1 for k, d in enumerate(minors) if d <= 0]
    report.checks.append(CheckResult(
        "finite_type", not bad,
        f"leading principal minors {[str(d) for d in minors]}; non-positive at sizes {bad}" if bad else ""))
    return report


@dataclass(frozen=True)
class RootSystem:
    cartan: CartanMatrix
    positive: tuple[tuple[int, ...], ...]
    exponents: tuple[int, ...]

    @property
    def n(self) -> int:
        return self.cartan.n

    @property
    def J(self) -> int:
        return len(self.positive)

    @property
    def simple(self) -> tuple[tuple[int, ...], ...]:
        return self.positive[: self.n]

    @staticmethod
    def height(root) -> int:
        return sum(root)

    def heights(self) -> list[int]:
        return [sum(r) for r in self.positive]


def positive_roots(m: CartanMatrix) -> RootSystem:
    """Enumerate positive roots by closure under adding simple roots.

    A root ``beta`` extends by ``alpha_i`` iff ``p - beta(h_i) > 0``, where
    ``p`` is the length of the downward ``alpha_i``-string through ``beta``.
    Simple roots come first, then roots by height, lexicographic within height.
    """
    report = validate_cartan(m)
    if not report.passed:
        msgs = "; ".join(f"{c.name}: {c.detail}" for c in report.failures())
        raise CartanError(f"not a finite-type Cartan matrix ({msgs})")
    n = m.n
    simple = [tuple(1 if k == i else 0 for k in range(n)) for i in range(n)]
    found = set(simple)
    layers = [sorted(simple, reverse=True)]
    while layers[-1]:
        nxt = set()
        for beta in layers[-1]:
            for i in range(n):
                pairing = sum(beta[j] * m[i, j] for j in range(n))
                p = 0
                down = list(beta)
                while True:
                    down[i] -= 1
                    if tuple(down) in found:
                        p += 1
                    else:
                        break
                if p - pairing > 0:
                    up = tuple(b + (1 if k == i else 0) for k, b in enumerate(beta))
                    if up not in found:
                        nxt.add(up)
        found |= nxt
        layers.append(sorted(nxt, reverse=True))
    ordered = tuple(simple) + tuple(r for layer in layers[1:] for r in layer)
    counts = Counter(sum(r) for r in ordered)
    top = max(counts)
    exps: list[int] = []
    for k in range(1, top + 1):
        exps += [k] * (counts[k] - counts.get(k + 1, 0))
    return RootSystem(m, ordered, tuple(sorted(exps)))
