"""Invariants of the Takiff algebra from trace powers.

Under the Q-identification of g_l with its dual, substituting
``x -> sum_i x(i) z^i`` into tr(X^k) and reading off coefficients gives, at a
point ``y = sum_j Y_j t^j``,

    I_{k,j}(y) = [z^j] tr(M(z)^k),     M(z) = sum_j Y_j z^j.

For ``j <= l`` these are G_l-invariant (conjugation acts on M(z) modulo
z^{l+1}); together, k = 2..n+1 and j = 0..l, they generate the invariant
algebra. Higher coefficients ``l < j <= k*l`` are exposed too but are not
invariant and are flagged as such.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .algebra import (
    AlgebraError,
    TakiffElement,
    _common,
    bracket_levels,
    in_borel,
    principal_f,
    project_bbar_levels,
    q_levels,
)


@dataclass(frozen=True, order=True)
class InvariantSpec:
    """The z^j coefficient of tr(M(z)^k)."""

    k: int
    j: int

    def validate(self, n: int, l: int) -> None:
        if not 2 <= self.k <= n + 1:
            raise AlgebraError(f"power k={self.k} out of range 2..{n + 1} for rank {n}")
        if not 0 <= self.j <= self.k * l:
            raise AlgebraError(f"coefficient index j={self.j} out of range 0..{self.k * l}")

    def is_invariant(self, l: int) -> bool:
        return self.j <= l

    @property
    def name(self) -> str:
        return f"I{self.k - 1},{self.j}"

    @classmethod
    def generator(cls, i: int, j: int) -> "InvariantSpec":
        """I_{i,j}: degree m_i + 1 = i + 1 in type A."""
        return cls(i + 1, j)


def generating_specs(n: int, l: int) -> list[InvariantSpec]:
    """The n(l+1) generators I_{i,j}, 1 <= i <= n, 0 <= j <= l."""
    return [InvariantSpec.generator(i, j) for i in range(1, n + 1) for j in range(l + 1)]


def all_specs(n: int, l: int) -> list[InvariantSpec]:
    """Every z-coefficient of every trace power, invariant or not."""
    return [InvariantSpec(k, j) for k in range(2, n + 2) for j in range(k * l + 1)]


# ---------------------------------------------------------------- matrix polynomials

def _zeros(shape, exact: bool):
    return np.full(shape, Fraction(0), dtype=object) if exact else np.zeros(shape)


def _poly_power(Y: np.ndarray, k: int, max_deg: int) -> np.ndarray:
    """Coefficients 0..max_deg of M(z)^k (untruncated product, cut at max_deg)."""
    exact = Y.dtype == object
    L, N, _ = Y.shape
    out = _zeros((max_deg + 1, N, N), exact)
    for d in range(N):
        out[0, d, d] = Fraction(1) if exact else 1.0
    for _ in range(k):
        nxt = _zeros(out.shape, exact)
        for a in range(max_deg + 1):
            for b in range(min(L, max_deg + 1 - a)):
                nxt[a + b] = nxt[a + b] + out[a] @ Y[b]
        out = nxt
    return out


def _trace(m: np.ndarray):
    diag = [m[i, i] for i in range(m.shape[0])]
    if m.dtype == object:
        return sum(diag, Fraction(0))
    return math.fsum(diag)


def evaluate_levels(spec: InvariantSpec, Y: np.ndarray):
    """I_{k,j} at the raw component array ``Y`` (shape (l+1, N, N))."""
    return _trace(_poly_power(Y, spec.k, spec.j)[spec.j])


def evaluate_invariant(spec: InvariantSpec, y: TakiffElement):
    spec.validate(y.n, y.l)
    return evaluate_levels(spec, y.levels)


def gradient_levels(spec: InvariantSpec, Y: np.ndarray) -> np.ndarray:
    """Q-gradient: component c equals k (M^{k-1})_{c+j-l}, made traceless."""
    exact = Y.dtype == object
    L, N, _ = Y.shape
    l = L - 1
    P = _poly_power(Y, spec.k - 1, spec.j)
    G = _zeros(Y.shape, exact)
    for c in range(L):
        m = c + spec.j - l
        if 0 <= m <= spec.j:
            G[c] = P[m] * spec.k
    for c in range(L):
        tr = _trace(G[c])
        shift = tr / N
        for d in range(N):
            G[c, d, d] = G[c, d, d] - shift
    return G


def gradient_invariant(spec: InvariantSpec, y: TakiffElement) -> TakiffElement:
    """The element g with Q(g, w) = d/de I(y + e w) for all w."""
    spec.validate(y.n, y.l)
    return TakiffElement(y.n, y.l, gradient_levels(spec, y.levels), y.exact)


def invariant_values(y: TakiffElement, specs=None) -> dict[InvariantSpec, object]:
    specs = generating_specs(y.n, y.l) if specs is None else specs
    return {s: evaluate_invariant(s, y) for s in specs}


# ---------------------------------------------------------------- Poisson brackets

def _differential(u, y: TakiffElement) -> np.ndarray:
    if isinstance(u, InvariantSpec):
        u.validate(y.n, y.l)
        return gradient_levels(u, y.levels)
    if isinstance(u, TakiffElement):
        y._check(u)
        return _common(u, y)[0]
    raise AlgebraError(f"expected an InvariantSpec or a TakiffElement, got {type(u).__name__}")


def poisson_bracket_at(u, v, z: TakiffElement):
    """[u, v](z) = Q(z, [du(z), dv(z)]) for the Lie-Poisson structure of g_l.

    ``u`` and ``v`` are InvariantSpecs or elements ``x`` standing for the linear
    function Q(x, .).
    """
    du, dv = _differential(u, z), _differential(v, z)
    Z = z.levels if (z.exact and du.dtype == object and dv.dtype == object) else z.levels.astype(float)
    if Z.dtype != object:
        du, dv = du.astype(float), dv.astype(float)
    return q_levels(Z, bracket_levels(du, dv))


def restricted_poisson_bracket(u: InvariantSpec, v: InvariantSpec, x: TakiffElement,
                               ssf: TakiffElement | None = None):
    """Bracket of u^ssf and v^ssf in the Lie-Poisson structure of the opposite Borel.

    The differential of u^ssf at x in b_l is P(du(ssf + x)), P the projection
    onto b̄_l; the bracket is Q(ssf + x, [P du, P dv]).
    """
    if not in_borel(x):
        raise AlgebraError("restricted bracket needs x in b_l")
    ssf = principal_f(x.n, x.l) if ssf is None else ssf
    y = ssf + x
    du = project_bbar_levels(_differential(u, y))
    dv = project_bbar_levels(_differential(v, y))
    return q_levels(y.levels, bracket_levels(du, dv))


def restricted_invariant(spec: InvariantSpec, x: TakiffElement, ssf: TakiffElement | None = None):
    """I^ssf(x) = I(ssf + x) for x in b_l."""
    if not in_borel(x):
        raise AlgebraError("restricted invariant is defined on b_l; x has components below the diagonal")
    ssf = principal_f(x.n, x.l) if ssf is None else ssf
    return evaluate_invariant(spec, ssf + x)
