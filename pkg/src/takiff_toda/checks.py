"""Quick property checks across all modules, run by the ``check`` subcommand.

Each check draws its data from a seeded generator, so a given seed always
exercises the same points. Sample counts are small; the pytest suite runs the
same properties at full size.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .algebra import NilpotentGroupElement, TakiffElement, group_apply, principal_f
from .cartan import MIN_RANK, SERIES, cartan_matrix, positive_roots, validate_cartan
from .dynamics import TodaState, integrate, omega_block
from .invariants import all_specs, poisson_bracket_at
from .section import graded_complement, orbit_invariance_check, reduce_to_section
from .series import bound_check, recurrence_residual, series_coefficients


@dataclass
class CheckOutcome:
    name: str
    passed: bool
    detail: str
    seconds: float


def random_element(rng: np.random.Generator, n: int, l: int, exact: bool = False,
                   lo: int = -3, hi: int = 3) -> TakiffElement:
    """Generic point of g_l: traceless levels with uniform (or small integer) entries."""
    N = n + 1
    if exact:
        levels = np.empty((l + 1, N, N), dtype=object)
        vals = rng.integers(lo, hi + 1, size=(l + 1, N, N))
        for idx in np.ndindex(levels.shape):
            levels[idx] = Fraction(int(vals[idx]))
    else:
        levels = rng.uniform(-1.0, 1.0, size=(l + 1, N, N))
    for j in range(l + 1):
        tr = sum(levels[j, d, d] for d in range(N))
        levels[j, N - 1, N - 1] = levels[j, N - 1, N - 1] - tr
    return TakiffElement(n, l, levels, exact)


def random_nilradical(rng: np.random.Generator, n: int, l: int, lo: int = -2, hi: int = 2) -> TakiffElement:
    """Integer point of n_l (strictly upper triangular at every level)."""
    coeffs = {}
    for j in range(l + 1):
        for a in range(1, n + 2):
            for b in range(a + 1, n + 2):
                coeffs[(f"e{a},{b}", j)] = Fraction(int(rng.integers(lo, hi + 1)))
    return TakiffElement.from_coefficients(n, l, coeffs, exact=True)


def random_section_point(rng: np.random.Generator, section, lo: int = -3, hi: int = 3) -> TakiffElement:
    return section.element([Fraction(int(v)) for v in rng.integers(lo, hi + 1, size=len(section.section))])


def scattering_state(rng: np.random.Generator, n: int, l: int, lax: bool = False) -> TodaState:
    """Random point of Z whose flow separates the particles.

    The ``lax`` family has rho[:, 0] > 0 and rho[:, j>0] < 0; the canonical
    family negates rho, matching the time reversal between the two flows.
    Individual draws can still leave Z in finite time; callers screen them.
    """
    rho = np.empty((n, l + 1))
    rho[:, 0] = rng.uniform(2.0, 3.0, n)
    rho[:, 1:] = rng.uniform(-3.0, -2.0, (n, l))
    gamma = rng.uniform(0.2, 0.8, (n, l + 1))
    return TodaState(rho if lax else -rho, gamma)


def _timed(name: str, fn: Callable[[], tuple[bool, str]]) -> CheckOutcome:
    t0 = time.perf_counter()
    try:
        ok, detail = fn()
    except Exception as exc:  # a crash counts as a failed check
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    return CheckOutcome(name, ok, detail, time.perf_counter() - t0)


def _check_cartan(rng):
    for s in SERIES:
        for r in range(MIN_RANK[s], 6):
            cm = cartan_matrix(s, r)
            if not validate_cartan(cm).passed:
                return False, f"{cm.label} failed validation"
            roots = positive_roots(cm)
            if sum(roots.exponents) != roots.J:
                return False, f"{cm.label}: exponents do not sum to the number of positive roots"
    return True, "A1-A5, B2-B5, C2-C5, D4-D5 valid; exponent sums match"


def _check_poisson(rng):
    worst = 0.0
    for n in (1, 2):
        for l in (0, 1, 2):
            specs = all_specs(n, l)
            specs = [s for s in specs if s.is_invariant(l)]
            for _ in range(3):
                z = random_element(rng, n, l)
                for u in specs:
                    for v in specs:
                        worst = max(worst, abs(poisson_bracket_at(u, v, z)))
    return bool(worst < 1e-9), f"max |bracket| = {worst:.3g}"


def _check_reduction(rng):
    count = 0
    for n in (1, 2):
        for l in (0, 1, 2):
            sec = graded_complement(n, l)
            ssf = principal_f(n, l)
            for _ in range(2):
                a = NilpotentGroupElement(random_nilradical(rng, n, l))
                s = random_section_point(rng, sec)
                y = group_apply(a, ssf + s)
                red = reduce_to_section(y, sec)
                if red.group != a or red.section_point != s:
                    return False, f"round trip failed at n={n}, l={l}"
                if orbit_invariance_check(y, sec).discrepancy != 0:
                    return False, f"invariants moved along the orbit at n={n}, l={l}"
                count += 1
    return True, f"{count} exact round trips"


def _check_omega(rng):
    for l in range(4):
        g = [Fraction(int(v), int(d)) for v, d in zip(rng.integers(1, 9, l + 1), rng.integers(1, 5, l + 1))]
        st = TodaState([[Fraction(0)] * (l + 1)], [g])
        d = omega_block(st, 1).det_tprime
        if abs(d) != g[0] ** (l + 1):
            return False, f"det(t') = {d} at gamma = {g}"
    return True, "det(t') = +-gamma0^(l+1) for l = 0..3"


def _check_lax(rng):
    worst = 0.0
    for n, l in ((1, 1), (2, 1)):
        st = scattering_state(rng, n, l, lax=True)
        tr = integrate("lax", st, 1.0, dt=1e-2, method="rk4")
        worst = max(worst, max(tr.invariant_drift().values()))
    return bool(worst < 1e-6), f"max relative invariant drift = {worst:.3g}"


def _check_series(rng):
    for _ in range(50):
        sol = series_coefficients(*rng.uniform(-1.0, 1.0, 4))
        if recurrence_residual(sol) > 1e-12:
            return False, "recurrence residual too large"
        rep = bound_check(sol)
        if not rep.ok:
            return False, f"bound violated: {rep.first_violation or rep.early}"
    return True, "50 samples satisfy every coefficient bound"


CHECKS = {
    "cartan": _check_cartan,
    "poisson": _check_poisson,
    "reduction": _check_reduction,
    "omega": _check_omega,
    "lax": _check_lax,
    "series": _check_series,
}


def run_checks(seed: int = 0) -> list[CheckOutcome]:
    rng = np.random.default_rng(seed)
    return [_timed(name, lambda fn=fn: fn(rng)) for name, fn in CHECKS.items()]
