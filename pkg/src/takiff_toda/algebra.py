"""The Takiff algebra sl_{n+1} (x) C[t]/(t^{l+1}) in its matrix realization.

An element is stored as an array of shape ``(l+1, n+1, n+1)``: slice ``j`` is
the level-``j`` component, a traceless matrix. The Chevalley basis is

* ``e{a},{b}`` = E_ab (a < b), the root vector of alpha_a + ... + alpha_{b-1},
* ``f{a},{b}`` = E_ba, the root vector of the negative root,
* ``h{i}``     = E_ii - E_{i+1,i+1}.

With the trace form as kappa this gives kappa(e_a, e_-a) = 1 and
kappa(h_i, h_i) = 2, and the Cartan involution x -> x* is the transpose.
Exact elements carry ``Fraction`` entries (object arrays); float elements
carry float64.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np

from .cartan import CartanMatrix, RootSystem, cartan_matrix, positive_roots


class AlgebraError(ValueError):
    pass


# --------------------------------------------------------------------------- basis

def _parse_label(label: str):
    kind = label[0]
    if kind == "h":
        return kind, int(label[1:]), None
    a, b = label[1:].split(",")
    return kind, int(a), int(b)


def _basis_matrix(label: str, n: int) -> np.ndarray:
    N = n + 1
    m = np.full((N, N), Fraction(0), dtype=object)
    kind, a, b = _parse_label(label)
    if kind == "e":
        m[a - 1, b - 1] = Fraction(1)
    elif kind == "f":
        m[b - 1, a - 1] = Fraction(1)
    elif kind == "h":
        m[a - 1, a - 1] = Fraction(1)
        m[a, a] = Fraction(-1)
    else:
        raise AlgebraError(f"bad basis label {label!r}")
    return m


@dataclass(frozen=True)
class LieAlgebraData:
    """Chevalley data of sl_{n+1}: labels, degrees, kappa and structure constants."""

    n: int
    cartan: CartanMatrix
    roots: RootSystem
    labels: tuple[str, ...]
    degrees: Mapping[str, int]

    @property
    def dim(self) -> int:
        return len(self.labels)

    def matrix(self, label: str) -> np.ndarray:
        return _basis_matrix(label, self.n)

    def kappa(self, a: str, b: str) -> Fraction:
        return _trace(self.matrix(a) @ self.matrix(b))

    def bracket(self, a: str, b: str) -> dict[str, Fraction]:
        """[a, b] expanded in the basis (zero coefficients omitted)."""
        ma, mb = self.matrix(a), self.matrix(b)
        return {k: v for k, v in matrix_coordinates(ma @ mb - mb @ ma, self.n).items() if v != 0}

    def structure_constants(self) -> dict[tuple[str, str], dict[str, Fraction]]:
        return {(a, b): self.bracket(a, b) for a in self.labels for b in self.labels}

    def root_label(self, root: Iterable[int], sign: int = 1) -> str:
        """Label of the root vector for a positive root given as simple-root coefficients."""
        coeffs = list(root)
        support = [i for i, c in enumerate(coeffs) if c]
        a, b = support[0] + 1, support[-1] + 2
        return f"{'e' if sign > 0 else 'f'}{a},{b}"

    @property
    def x0(self) -> np.ndarray:
        return sum((omega(self.n, i) for i in range(1, self.n + 1)),
                   np.full((self.n + 1, self.n + 1), Fraction(0), dtype=object))


@lru_cache(maxsize=None)
def chevalley_basis_sl(n: int) -> LieAlgebraData:
    """Chevalley basis of sl_{n+1}; labels ordered e (by height, then lexicographic), h, f."""
    if n < 1:
        raise AlgebraError("rank must be >= 1")
    cm = cartan_matrix("A", n)
    rs = positive_roots(cm)
    pos = sorted(((a, b) for a in range(1, n + 2) for b in range(a + 1, n + 2)),
                 key=lambda ab: (ab[1] - ab[0], ab))
    labels = [f"e{a},{b}" for a, b in pos] + [f"h{i}" for i in range(1, n + 1)] + \
             [f"f{a},{b}" for a, b in pos]
    degrees = {}
    for lab in labels:
        kind, a, b = _parse_label(lab)
        degrees[lab] = 0 if kind == "h" else (b - a if kind == "e" else a - b)
    return LieAlgebraData(n, cm, rs, tuple(labels), degrees)


def omega(n: int, i: int) -> np.ndarray:
    """Fundamental coweight: traceless diagonal with alpha_j(omega_i) = delta_ij."""
    N = n + 1
    m = np.full((N, N), Fraction(0), dtype=object)
    for k in range(N):
        m[k, k] = Fraction(N - i, N) if k < i else Fraction(-i, N)
    return m


def _trace(m: np.ndarray):
    return sum(m[k, k] for k in range(m.shape[0]))


def matrix_coordinates(m: np.ndarray, n: int) -> dict[str, object]:
    """Coordinates of a traceless matrix in the Chevalley basis."""
    N = n + 1
    out = {}
    for a in range(N):
        for b in range(a + 1, N):
            out[f"e{a + 1},{b + 1}"] = m[a, b]
            out[f"f{a + 1},{b + 1}"] = m[b, a]
    acc = 0
    for i in range(1, N):
        acc = acc + m[i - 1, i - 1]
        out[f"h{i}"] = acc
    return out


# --------------------------------------------------------------------------- elements

def _as_fraction(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, (int, np.integer)):
        return Fraction(int(v))
    if isinstance(v, str):
        return Fraction(v)
    raise AlgebraError(f"exact element needs rational coefficients, got {v!r}")


class TakiffElement:
    """Element of the Takiff algebra g_l, g = sl_{n+1}."""

    __slots__ = ("n", "l", "levels", "exact")

    def __init__(self, n: int, l: int, levels, exact: bool | None = None):
        arr = np.asarray(levels)
        N = n + 1
        if arr.shape != (l + 1, N, N):
            raise AlgebraError(f"expected component array of shape {(l + 1, N, N)}, got {arr.shape}")
        if exact is None:
            exact = arr.dtype == object
        if exact:
            arr = np.vectorize(_as_fraction, otypes=[object])(arr) if arr.size else arr.astype(object)
        else:
            arr = arr.astype(float)
        self.n, self.l, self.levels, self.exact = n, l, arr, bool(exact)

    # construction -------------------------------------------------------------
    @classmethod
    def zero(cls, n: int, l: int, exact: bool = True) -> "TakiffElement":
        N = n + 1
        if exact:
            return cls(n, l, np.full((l + 1, N, N), Fraction(0), dtype=object), True)
        return cls(n, l, np.zeros((l + 1, N, N)), False)

    @classmethod
    def basis(cls, n: int, l: int, label: str, level: int = 0, coef=1) -> "TakiffElement":
        return cls.from_coefficients(n, l, {(label, level): coef})

    @classmethod
    def from_coefficients(cls, n: int, l: int, coeffs: Mapping[tuple[str, int], object],
                          exact: bool | None = None) -> "TakiffElement":
        if exact is None:
            exact = all(isinstance(v, (int, Fraction, np.integer)) for v in coeffs.values())
        out = cls.zero(n, l, exact)
        data = chevalley_basis_sl(n)
        for (label, level), c in coeffs.items():
            if label not in data.degrees:
                raise AlgebraError(f"unknown basis label {label!r} for rank {n}")
            if not 0 <= level <= l:
                raise AlgebraError(f"level {level} outside 0..{l}")
            m = _basis_matrix(label, n)
            if exact:
                out.levels[level] = out.levels[level] + m * _as_fraction(c)
            else:
                out.levels[level] = out.levels[level] + m.astype(float) * float(c)
        return out

    def coefficients(self) -> dict[tuple[str, int], object]:
        """Sparse (label, level) -> coefficient map, nonzero entries only."""
        data = chevalley_basis_sl(self.n)
        out = {}
        for j in range(self.l + 1):
            coords = matrix_coordinates(self.levels[j], self.n)
            for lab in data.labels:
                if coords[lab] != 0:
                    out[(lab, j)] = coords[lab]
        return out

    def coefficient(self, label: str, level: int):
        return matrix_coordinates(self.levels[level], self.n)[label]

    def astype(self, exact: bool) -> "TakiffElement":
        if exact == self.exact:
            return self
        if exact:
            return TakiffElement(self.n, self.l,
                                 np.vectorize(lambda v: Fraction(v), otypes=[object])(self.levels), True)
        return TakiffElement(self.n, self.l, self.levels.astype(float), False)

    def to_float(self) -> "TakiffElement":
        return self.astype(False)

    # arithmetic ---------------------------------------------------------------
    def _check(self, other: "TakiffElement"):
        if not isinstance(other, TakiffElement):
            raise AlgebraError("operand is not a TakiffElement")
        if (self.n, self.l) != (other.n, other.l):
            raise AlgebraError(f"rank/level mismatch: ({self.n},{self.l}) vs ({other.n},{other.l})")

    def _combine(self, other, arr):
        exact = self.exact and other.exact
        return TakiffElement(self.n, self.l, arr if exact else arr.astype(float), exact)

    def __add__(self, other):
        self._check(other)
        a, b = _common(self, other)
        return self._combine(other, a + b)

    def __sub__(self, other):
        self._check(other)
        a, b = _common(self, other)
        return self._combine(other, a - b)

    def __neg__(self):
        return TakiffElement(self.n, self.l, -self.levels, self.exact)

    def __mul__(self, c):
        if self.exact and isinstance(c, (int, Fraction)):
            return TakiffElement(self.n, self.l, self.levels * Fraction(c), True)
        return TakiffElement(self.n, self.l, self.levels.astype(float) * float(c), False)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, TakiffElement) or (self.n, self.l) != (other.n, other.l):
            return NotImplemented
        a, b = _common(self, other)
        return bool(np.all(a == b))

    def __hash__(self):
        return hash((self.n, self.l, tuple(sorted(self.coefficients().items()))))

    def is_zero(self) -> bool:
        return bool(np.all(self.levels == 0))

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.levels.astype(float) ** 2)))

    def __repr__(self):
        terms = " + ".join(f"{c}*{lab}({j})" for (lab, j), c in self.coefficients().items())
        return f"TakiffElement(n={self.n}, l={self.l}: {terms or '0'})"

    # support ------------------------------------------------------------------
    def support_kinds(self) -> set[str]:
        return {lab[0] for lab, _ in self.coefficients()}

    def degree_part(self, d: int) -> "TakiffElement":
        """Component of ad-x0 degree ``d``: matrix entries (a, b) with b - a = d."""
        N = self.n + 1
        mask = np.array([[1 if (b - a) == d else 0 for b in range(N)] for a in range(N)])
        arr = self.levels * mask
        return TakiffElement(self.n, self.l, arr, self.exact)

    def degrees(self) -> set[int]:
        N = self.n + 1
        return {b - a for j in range(self.l + 1) for a in range(N) for b in range(N)
                if self.levels[j, a, b] != 0}

    # serialization ------------------------------------------------------------
    def to_dict(self) -> dict:
        terms = []
        for (lab, j), c in self.coefficients().items():
            if self.exact:
                terms.append({"label": lab, "level": j, "num": c.numerator, "den": c.denominator})
            else:
                terms.append({"label": lab, "level": j, "value": float(c)})
        return {"rank": self.n, "l": self.l, "exact": self.exact, "terms": terms}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: Mapping) -> "TakiffElement":
        try:
            n, l = int(d["rank"]), int(d["l"])
            terms = d.get("terms", [])
        except (KeyError, TypeError) as exc:
            raise AlgebraError(f"malformed element record: {exc}") from None
        coeffs = {}
        exact = bool(d.get("exact", all("num" in t for t in terms)))
        for t in terms:
            if "num" in t:
                c = Fraction(int(t["num"]), int(t.get("den", 1)))
            else:
                c = float(t["value"])
            key = (t["label"], int(t["level"]))
            coeffs[key] = coeffs.get(key, 0) + c
        if exact:
            coeffs = {k: _as_fraction(v) if not isinstance(v, float) else Fraction(v) for k, v in coeffs.items()}
        return cls.from_coefficients(n, l, coeffs, exact=exact)

    @classmethod
    def from_json(cls, s: str) -> "TakiffElement":
        return cls.from_dict(json.loads(s))


def _common(x: TakiffElement, y: TakiffElement):
    if x.exact and y.exact:
        return x.levels, y.levels
    return x.levels.astype(float), y.levels.astype(float)


# --------------------------------------------------------------------------- level-array kernels
# These work on raw (l+1, N, N) arrays so the integrators can call them on floats.

def bracket_levels(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    L = X.shape[0]
    out = np.zeros_like(X) if X.dtype != object else np.full(X.shape, Fraction(0), dtype=object)
    for i in range(L):
        for j in range(L - i):
            out[i + j] = out[i + j] + X[i] @ Y[j] - Y[j] @ X[i]
    return out


def q_levels(X: np.ndarray, Y: np.ndarray):
    L = X.shape[0]
    return sum(_trace(X[i] @ Y[L - 1 - i]) for i in range(L))


def project_bbar_levels(X: np.ndarray) -> np.ndarray:
    N = X.shape[1]
    return X * np.tril(np.ones((N, N), dtype=int))


def poly_mul_levels(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Product of matrix polynomials in t, truncated at t^{l+1}."""
    L = A.shape[0]
    out = np.zeros_like(A) if A.dtype != object else np.full(A.shape, Fraction(0), dtype=object)
    for i in range(L):
        for j in range(L - i):
            out[i + j] = out[i + j] + A[i] @ B[j]
    return out


# --------------------------------------------------------------------------- operations

def bracket(x: TakiffElement, y: TakiffElement) -> TakiffElement:
    """[x(i), y(j)] = [x, y](i+j), dropped above level l."""
    x._check(y)
    a, b = _common(x, y)
    return TakiffElement(x.n, x.l, bracket_levels(a, b), x.exact and y.exact)


def q_form(x: TakiffElement, y: TakiffElement):
    """Q(x(i), y(j)) = delta_{i+j,l} kappa(x, y)."""
    x._check(y)
    a, b = _common(x, y)
    return q_levels(a, b)


def star(x: TakiffElement) -> TakiffElement:
    """The involution x(j) -> x*(l-j); x* is the transpose here."""
    return TakiffElement(x.n, x.l, np.transpose(x.levels[::-1], (0, 2, 1)).copy(), x.exact)


def inner_product(x: TakiffElement, y: TakiffElement):
    """Q_*(x, y) = Q(x, y*), the Frobenius product level by level."""
    return q_form(x, star(y))


def project_bbar(x: TakiffElement) -> TakiffElement:
    """Q_*-orthogonal projection onto the opposite Borel b̄_l (kernel n_l)."""
    return TakiffElement(x.n, x.l, project_bbar_levels(x.levels), x.exact)


def principal_f(n: int, l: int, coeffs=None) -> TakiffElement:
    """ssf = sum_j sum_i c[i][j] e_{-alpha_i}(j); all coefficients must be nonzero."""
    if coeffs is None:
        coeffs = [[1] * (l + 1) for _ in range(n)]
    c = [list(row) for row in coeffs]
    if len(c) != n or any(len(row) != l + 1 for row in c):
        raise AlgebraError(f"principal_f needs an {n}x{l + 1} coefficient table")
    zeros = [(i + 1, j) for i in range(n) for j in range(l + 1) if c[i][j] == 0]
    if zeros:
        raise AlgebraError(f"not principal: zero simple-root coefficient at (i, level) {zeros}")
    return TakiffElement.from_coefficients(
        n, l, {(f"f{i + 1},{i + 2}", j): c[i][j] for i in range(n) for j in range(l + 1)})


def in_borel(x: TakiffElement) -> bool:
    return not bool(np.any(x.levels * np.tril(np.ones((x.n + 1, x.n + 1), dtype=int), -1) != 0))


def in_nilradical(x: TakiffElement, opposite: bool = False) -> bool:
    N = x.n + 1
    keep = np.tril(np.ones((N, N), dtype=int), -1) if opposite else np.triu(np.ones((N, N), dtype=int), 1)
    return not bool(np.any(x.levels * (1 - keep) != 0))


@dataclass(frozen=True, eq=False)
class NilpotentGroupElement:
    """exp(log) with log in n_l (or in the opposite nilradical)."""

    log: TakiffElement

    def __post_init__(self):
        if not (in_nilradical(self.log) or in_nilradical(self.log, opposite=True)):
            raise AlgebraError("group element log must lie in n_l or in the opposite nilradical")

    @classmethod
    def identity(cls, n: int, l: int, exact: bool = True) -> "NilpotentGroupElement":
        return cls(TakiffElement.zero(n, l, exact))

    def inverse(self) -> "NilpotentGroupElement":
        return NilpotentGroupElement(-self.log)

    def unipotent(self) -> np.ndarray:
        """exp(log) as a unipotent matrix polynomial in t (finite series)."""
        return _poly_exp(self.log.levels)

    def __matmul__(self, other: "NilpotentGroupElement") -> "NilpotentGroupElement":
        """Group product, computed as log(exp(a) exp(b)) with finite series."""
        self.log._check(other.log)
        if not (in_nilradical(self.log) and in_nilradical(other.log)) and not (
                in_nilradical(self.log, True) and in_nilradical(other.log, True)):
            raise AlgebraError("can only compose elements of the same nilpotent subgroup")
        a, b = _common(self.log, other.log)
        g = poly_mul_levels(_poly_exp(a), _poly_exp(b))
        return NilpotentGroupElement(TakiffElement(self.log.n, self.log.l, _poly_log(g),
                                                   self.log.exact and other.log.exact))

    def is_identity(self) -> bool:
        return self.log.is_zero()

    def __eq__(self, other):
        return isinstance(other, NilpotentGroupElement) and self.log == other.log

    def __repr__(self):
        return f"NilpotentGroupElement(log={self.log!r})"


def _poly_identity(like: np.ndarray) -> np.ndarray:
    L, N, _ = like.shape
    if like.dtype == object:
        out = np.full(like.shape, Fraction(0), dtype=object)
        for k in range(N):
            out[0, k, k] = Fraction(1)
    else:
        out = np.zeros(like.shape)
        out[0] = np.eye(N)
    return out


def _poly_exp(Z: np.ndarray) -> np.ndarray:
    term = _poly_identity(Z)
    total = term.copy()
    k = 1
    while True:
        term = poly_mul_levels(term, Z)
        term = term / k if Z.dtype != object else term * Fraction(1, k)
        if not np.any(term != 0):
            return total
        total = total + term
        k += 1


def _poly_log(G: np.ndarray) -> np.ndarray:
    U = G - _poly_identity(G)
    power = U.copy()
    total = np.zeros_like(U) if U.dtype != object else np.full(U.shape, Fraction(0), dtype=object)
    k = 1
    while np.any(power != 0):
        coef = Fraction((-1) ** (k + 1), k)
        total = total + (power * coef if U.dtype == object else power * float(coef))
        power = poly_mul_levels(power, U)
        k += 1
    return total


def group_apply(a: NilpotentGroupElement, x: TakiffElement) -> TakiffElement:
    """exp(ad log a)(x); the series terminates because ad log a is nilpotent."""
    a.log._check(x)
    z, cur = _common(a.log, x)
    exact = a.log.exact and x.exact
    total = cur.copy()
    k = 1
    while True:
        cur = bracket_levels(z, cur)
        cur = cur * Fraction(1, k) if exact else cur / k
        if not np.any(cur != 0):
            break
        total = total + cur
        k += 1
    return TakiffElement(x.n, x.l, total, exact)
