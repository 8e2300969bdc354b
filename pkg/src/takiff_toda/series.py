"""Power series solutions of Psi''' = C0 Psi'' + Psi^2 + Psi.

Writing Psi = sum a_n t^n gives the recurrence

    a_{n+3} = [(n+1)(n+2) C0 a_{n+2} + a_n + sum_{i=0}^n a_i a_{n-i}] / [(n+1)(n+2)(n+3)].

When a0, a1, a2, C0 all lie in (-1, 1) the coefficients obey
|a_{k+2}| < 2/k^2, which makes the series converge absolutely on |t| <= 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import TodaState

DEFAULT_ORDER = 200

# Explicit bounds on the first three computed coefficients
EARLY_BOUNDS = {3: 1.0, 4: 10.0 / 24.0, 5: 1.0 / 6.0}


@dataclass
class SeriesSolution:
    C0: float
    a: np.ndarray
    N: int
    hypothesis_ok: bool
    bound_audit: dict[int, float] = field(default_factory=dict)

    @property
    def coefficients(self) -> list[float]:
        return [float(v) for v in self.a]


def _in_unit_interval(x: float) -> bool:
    return -1.0 < x < 1.0


def series_coefficients(a0: float, a1: float, a2: float, C0: float,
                        N: int = DEFAULT_ORDER) -> SeriesSolution:
    """Coefficients a_0..a_N from the recurrence, with the 2/k^2 margin audit.

    ``bound_audit[k]`` is 2/k^2 - |a_{k+2}| for 1 <= k <= N - 2.
    """
    if N < 3:
        raise ValueError("order N must be at least 3")
    a = np.zeros(N + 1)
    a[0], a[1], a[2] = a0, a1, a2
    for n in range(N - 2):
        conv = float(a[: n + 1] @ a[n::-1])
        a[n + 3] = ((n + 1) * (n + 2) * C0 * a[n + 2] + a[n] + conv) / ((n + 1) * (n + 2) * (n + 3))
    ok = all(_in_unit_interval(v) for v in (a0, a1, a2, C0))
    audit = {k: 2.0 / k**2 - abs(a[k + 2]) for k in range(1, N - 1)}
    return SeriesSolution(float(C0), a, N, ok, audit)


def recurrence_residual(sol: SeriesSolution) -> float:
    """Largest |lhs - rhs| of the recurrence, scaled by the denominator."""
    a = sol.a
    worst = 0.0
    for n in range(sol.N - 2):
        d = (n + 1) * (n + 2) * (n + 3)
        rhs = (n + 1) * (n + 2) * sol.C0 * a[n + 2] + a[n] + float(a[: n + 1] @ a[n::-1])
        worst = max(worst, abs(d * a[n + 3] - rhs))
    return worst


@dataclass
class BoundReport:
    applicable: bool
    early: dict[int, tuple[float, float, bool]]   # index -> (|a_n|, bound, holds)
    first_violation: tuple[int, float, float] | None  # (k, |a_{k+2}|, 2/k^2)

    @property
    def ok(self) -> bool:
        return self.applicable and self.first_violation is None and all(h for *_, h in self.early.values())


def bound_check(sol: SeriesSolution) -> BoundReport:
    """Audit |a3| < 1, |a4| < 10/24, |a5| < 1/6 and |a_{k+2}| < 2/k^2.

    Outside the hypothesis the report is marked not applicable.
    """
    if not sol.hypothesis_ok:
        return BoundReport(False, {}, None)
    early = {}
    for idx, bound in EARLY_BOUNDS.items():
        if idx <= sol.N:
            v = abs(float(sol.a[idx]))
            early[idx] = (v, bound, v < bound)
    first = None
    for k in sorted(sol.bound_audit):
        if not sol.bound_audit[k] > 0:
            first = (k, abs(float(sol.a[k + 2])), 2.0 / k**2)
            break
    return BoundReport(True, early, first)


@dataclass
class SeriesValue:
    value: float
    tail_bound: float | None  # None when no bound is available

    def __float__(self):
        return self.value


def series_eval(sol: SeriesSolution, t: float) -> SeriesValue:
    """Horner evaluation of the truncated series plus a tail majorant.

    For |t| <= 1 under the hypothesis the neglected terms are dominated by
    sum_{k>K} 2/k^2 |t|^{k+2} with K = N - 2, bounded by
    min(2 |t|^{K+3} / ((K+1)^2 (1 - |t|)), 2/K).
    """
    value = 0.0
    for c in sol.a[::-1]:
        value = value * t + float(c)
    at = abs(t)
    if not sol.hypothesis_ok or at > 1.0:
        return SeriesValue(value, None)
    if not np.any(sol.a):
        return SeriesValue(value, 0.0)
    K = sol.N - 2
    bound = 2.0 / K
    if at < 1.0:
        bound = min(bound, 2.0 * at ** (K + 3) / ((K + 1) ** 2 * (1.0 - at)))
    return SeriesValue(value, bound)


def ode_rhs(state, C0: float) -> np.ndarray:
    """(Psi', Psi'', C0 Psi'' + Psi^2 + Psi) at (Psi, Psi', Psi'')."""
    psi, d1, d2 = state
    return np.array([d1, d2, C0 * d2 + psi * psi + psi])


def initial_derivatives(sol: SeriesSolution) -> tuple[float, float, float]:
    """(Psi(0), Psi'(0), Psi''(0)) of the series."""
    return float(sol.a[0]), float(sol.a[1]), 2.0 * float(sol.a[2])


# ---------------------------------------------------------------------------- global condition

@dataclass
class GlobalConditionReport:
    verdict: bool
    quantities: dict[str, float | None]
    checks: dict[str, bool]
    diagnostic: str = ""


def global_condition(c0: float, c1: float, c2: float, c3: float) -> GlobalConditionReport:
    """c0, c1, c2/2 and 2(c3 - c1^2 - c1)/c2 must all lie in (0, 1)."""
    q = {"c0": c0, "c1": c1, "c2/2": c2 / 2.0}
    diag = ""
    if c2 == 0:
        q["2(c3-c1^2-c1)/c2"] = None
        diag = "c2 = 0: the quantity 2(c3 - c1^2 - c1)/c2 is undefined (division by zero)"
    else:
        q["2(c3-c1^2-c1)/c2"] = 2.0 * (c3 - c1 * c1 - c1) / c2
    checks = {k: (v is not None and 0.0 < v < 1.0) for k, v in q.items()}
    failed = [k for k, ok in checks.items() if not ok]
    if failed and not diag:
        diag = "outside (0, 1): " + ", ".join(failed)
    return GlobalConditionReport(not failed, q, checks, diag)


def sample_global_conditions(rng: np.random.Generator) -> tuple[float, float, float, float]:
    """Uniform c0, c1, c2/2 and fourth quantity in (0, 1), solved back for c3."""
    c0, c1, half_c2, u = rng.uniform(0.0, 1.0, 4)
    for v in (c0, c1, half_c2, u):
        if v == 0.0:
            return sample_global_conditions(rng)
    c2 = 2.0 * half_c2
    c3 = c1 * c1 + c1 + u * c2 / 2.0
    return float(c0), float(c1), float(c2), float(c3)


def toda_state_from_conditions(c0: float, c1: float, c2: float, c3: float) -> TodaState:
    """n = l = 1 state with qbar = c0, pbar = c1/2, e^q = c2/2, p = c3/(2 c2).

    Coordinates as in the reduced pair system: p = rho[1,1], pbar = rho[1,0],
    q = phi[1,0], qbar = phi[1,1].
    """
    if not c2 > 0:
        raise ValueError("c2 must be positive to fix e^q = c2/2")
    rho = [[c1 / 2.0, c3 / (2.0 * c2)]]
    phi = [[math.log(c2 / 2.0), c0]]
    return TodaState.from_canonical(rho, phi)
