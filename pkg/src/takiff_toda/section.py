"""Graded complement s_l of [ssf, n_l] in b_l and reduction onto ssf + s_l.

Everything is organized by ad-x0 degree. The degree-d piece of b_l is spanned
by h_i(j) (d = 0) or by e_beta(j) with height(beta) = d; ad ssf maps the
degree-(d+1) piece of n_l injectively into it. The complement is chosen among
standard basis vectors, greedily in (level, label) order, so it is
deterministic and ad-x0 stable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .algebra import (
    AlgebraError,
    NilpotentGroupElement,
    TakiffElement,
    bracket,
    chevalley_basis_sl,
    group_apply,
    in_borel,
    matrix_coordinates,
    principal_f,
)
from .invariants import evaluate_invariant, generating_specs
from .linalg import rank, solve


class SectionError(AlgebraError):
    pass


def _borel_labels(n: int, d: int) -> list[str]:
    data = chevalley_basis_sl(n)
    if d == 0:
        return [lab for lab in data.labels if lab[0] == "h"]
    return [lab for lab in data.labels if lab[0] == "e" and data.degrees[lab] == d]


def _coords(x: TakiffElement, keys: list[tuple[str, int]]) -> list:
    per_level = [matrix_coordinates(x.levels[j], x.n) for j in range(x.l + 1)]
    return [per_level[j][lab] for lab, j in keys]


@dataclass
class SectionBasis:
    n: int
    l: int
    ssf: TakiffElement
    # per degree d: standard coordinate keys, n_l basis of degree d+1, images [ssf, z], complement
    keys: dict[int, list[tuple[str, int]]] = field(default_factory=dict)
    n_basis: dict[int, list[TakiffElement]] = field(default_factory=dict)
    fn_basis: dict[int, list[TakiffElement]] = field(default_factory=dict)
    s_basis: dict[int, list[TakiffElement]] = field(default_factory=dict)

    @property
    def section(self) -> list[TakiffElement]:
        return [v for d in sorted(self.s_basis) for v in self.s_basis[d]]

    @property
    def image(self) -> list[TakiffElement]:
        return [v for d in sorted(self.fn_basis) for v in self.fn_basis[d]]

    @property
    def max_degree(self) -> int:
        return max(self.keys)

    def section_degrees(self) -> list[int]:
        return [d for d in sorted(self.s_basis) for _ in self.s_basis[d]]

    def decompose(self, x: TakiffElement, d: int):
        """Split the degree-d part of x in b_l into ([ssf, z] coefficients, section coefficients)."""
        cols = self.fn_basis[d] + self.s_basis[d]
        keys = self.keys[d]
        a = [[c for c in col] for col in zip(*[_coords(v, keys) for v in cols])]
        coeffs = solve(a, _coords(x, keys))
        k = len(self.fn_basis[d])
        return coeffs[:k], coeffs[k:]

    def element(self, coeffs) -> TakiffElement:
        """Point of s_l with the given coordinates along ``section``."""
        basis = self.section
        if len(coeffs) != len(basis):
            raise SectionError(f"expected {len(basis)} section coordinates, got {len(coeffs)}")
        out = TakiffElement.zero(self.n, self.l, all(isinstance(c, (int, Fraction)) for c in coeffs))
        for c, v in zip(coeffs, basis):
            out = out + v * c
        return out

    def coordinates(self, s: TakiffElement) -> list:
        """Coordinates of s in s_l along ``section``; raises if s is not in s_l."""
        out = []
        for d in sorted(self.keys):
            fn, sc = self.decompose(s.degree_part(d), d)
            if any(c != 0 for c in fn):
                raise SectionError("element has a component in [ssf, n_l]")
            out += sc
        return out


def graded_complement(n: int, l: int, ssf: TakiffElement | None = None) -> SectionBasis:
    """ad-x0 stable complement of [ssf, n_l] in b_l, degree by degree."""
    ssf = principal_f(n, l) if ssf is None else ssf
    if ssf.exact is False:
        ssf = ssf.astype(True)
    if ssf.degrees() != {-1}:
        raise SectionError("ssf must be homogeneous of ad-x0 degree -1")
    coeffs = ssf.coefficients()
    missing = [(i, j) for i in range(1, n + 1) for j in range(l + 1)
               if coeffs.get((f"f{i},{i + 1}", j), 0) == 0]
    if missing:
        raise SectionError(f"ssf is not principal at every level: zero coefficients at (i, level) {missing}")

    sb = SectionBasis(n, l, ssf)
    for d in range(0, n + 1):
        keys = [(lab, j) for j in range(l + 1) for lab in _borel_labels(n, d)]
        sb.keys[d] = keys
        nb = [TakiffElement.basis(n, l, lab, j) for j in range(l + 1)
              for lab in _borel_labels(n, d + 1)] if d + 1 <= n else []
        images = [bracket(ssf, z) for z in nb]
        rows = [_coords(v, keys) for v in images]
        if rank(rows) != len(images):
            raise SectionError(f"ad ssf is not injective on n_l in degree {d + 1} (rank deficiency)")
        chosen = []
        current = list(rows)
        for key in keys:
            cand = [Fraction(1) if k == key else Fraction(0) for k in keys]
            if rank(current + [cand]) > len(current):
                current.append(cand)
                chosen.append(TakiffElement.basis(n, l, key[0], key[1]))
        if len(current) != len(keys):
            raise SectionError(f"complement construction failed in degree {d}")
        sb.n_basis[d], sb.fn_basis[d], sb.s_basis[d] = nb, images, chosen
    return sb


@dataclass
class Reduction:
    group: NilpotentGroupElement
    section_point: TakiffElement
    iterations: int


def reduce_to_section(y: TakiffElement, section: SectionBasis | None = None) -> Reduction:
    """Find a in N_l and s in s_l with a(ssf + s) = y.

    Works upward in ad-x0 degree: the lowest-degree [ssf, n_l]-component
    [ssf, z] is removed by exp(ad z), which only disturbs higher degrees.
    """
    section = graded_complement(y.n, y.l) if section is None else section
    ssf = section.ssf if y.exact else section.ssf.to_float()
    x = y - ssf
    if not in_borel(x):
        off = sorted(f"{lab}({j})" for (lab, j) in x.coefficients() if lab[0] == "f")
        raise SectionError("y is not in ssf + b_l: y - ssf has support below the diagonal at " + ", ".join(off))
    w = y
    g = NilpotentGroupElement.identity(y.n, y.l, y.exact)
    iterations = 0
    for d in range(0, section.max_degree):
        fn, _ = section.decompose((w - ssf).degree_part(d), d)
        if all(c == 0 for c in fn):
            continue
        z = TakiffElement.zero(y.n, y.l, y.exact)
        for c, v in zip(fn, section.n_basis[d]):
            z = z + v * c
        step = NilpotentGroupElement(z)
        w = group_apply(step, w)
        g = step @ g
        iterations += 1
    s = w - ssf
    return Reduction(g.inverse(), s, iterations)


@dataclass
class OrbitReport:
    discrepancy: object
    values_y: dict
    values_section: dict
    reduction: Reduction

    @property
    def max_abs(self) -> float:
        return float(abs(self.discrepancy))


def orbit_invariance_check(y: TakiffElement, section: SectionBasis | None = None) -> OrbitReport:
    """Compare every generating invariant at y and at its section representative."""
    red = reduce_to_section(y, section)
    ssf = (section.ssf if section is not None else principal_f(y.n, y.l))
    if not y.exact:
        ssf = ssf.to_float()
    rep = ssf + red.section_point
    specs = generating_specs(y.n, y.l)
    vy = {s: evaluate_invariant(s, y) for s in specs}
    vs = {s: evaluate_invariant(s, rep) for s in specs}
    disc = max(abs(vy[s] - vs[s]) for s in specs)
    return OrbitReport(disc, vy, vs, red)
