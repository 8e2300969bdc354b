"""Explicit Runge-Kutta steppers: classical RK4 and Dormand-Prince 5(4).

Both drive an autonomous ``f(y) -> dy`` on flat float arrays and call
``guard(t, y)`` after every accepted step; the guard raises to abort.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


class IntegrationError(RuntimeError):
    def __init__(self, message: str, t: float | None = None):
        super().__init__(message)
        self.t = t


def rk4_step(f, y: np.ndarray, h: float) -> np.ndarray:
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


def _dopri_step(f, y, h, k1):
    ks = [k1]
    for s in range(1, 7):
        ys = y + h * sum(a * k for a, k in zip(_A[s], ks))
        ks.append(f(ys))
    y5 = y + h * sum(b * k for b, k in zip(_B5, ks) if b)
    err = h * sum(e * k for e, k in zip(_E, ks) if e)
    return y5, err, ks[-1]


@dataclass
class Solution:
    t: np.ndarray
    y: np.ndarray
    nfev: int
    steps: int


def _check_finite(t, y):
    if not np.all(np.isfinite(y)):
        raise IntegrationError(f"non-finite state at t={t:.17g}", t)


def _quiet(fn):
    # overflow is detected explicitly by _check_finite, so numpy's warnings are noise
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        with np.errstate(over="ignore", invalid="ignore"):
            return fn(*args, **kwargs)
    return wrapper


@_quiet
def integrate_fixed(f: Callable, y0: Sequence[float], t_end: float, dt: float,
                    guard: Callable | None = None, record_every: int = 1) -> Solution:
    """Classical RK4 on [0, t_end] with constant step (last step shortened)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if t_end < 0:
        raise ValueError("t_end must be non-negative")
    y = np.asarray(y0, dtype=float).copy()
    nsteps = int(np.ceil(t_end / dt - 1e-9)) if t_end > 0 else 0
    ts, ys = [0.0], [y.copy()]
    t = 0.0
    for i in range(1, nsteps + 1):
        t_next = t_end if i == nsteps else i * dt
        y = rk4_step(f, y, t_next - t)
        t = t_next
        _check_finite(t, y)
        if guard is not None:
            guard(t, y)
        if i % record_every == 0 or i == nsteps:
            ts.append(t)
            ys.append(y.copy())
    return Solution(np.array(ts), np.array(ys), 4 * nsteps, nsteps)


@_quiet
def integrate_adaptive(f: Callable, y0: Sequence[float], t_end: float, rtol: float = 1e-10,
                       atol: float = 1e-10, h0: float | None = None,
                       t_eval: Sequence[float] | None = None, guard: Callable | None = None,
                       max_steps: int = 10_000_000) -> Solution:
    """Dormand-Prince 5(4) with local extrapolation and step-size control.

    Output times in ``t_eval`` are hit exactly by shortening steps; without
    ``t_eval`` every accepted step is recorded.
    """
    if t_end < 0:
        raise ValueError("t_end must be non-negative")
    y = np.asarray(y0, dtype=float).copy()
    targets = sorted(set(float(s) for s in t_eval)) if t_eval is not None else [float(t_end)]
    if targets and (targets[0] < 0 or targets[-1] > t_end + 1e-15):
        raise ValueError("t_eval must lie in [0, t_end]")
    ts, ys = [0.0], [y.copy()]
    if targets and targets[0] == 0.0:
        targets = targets[1:]
    t = 0.0
    k1 = f(y)
    nfev = 1
    h = h0 if h0 is not None else min(1e-2, max(t_end, 1e-12))
    steps = 0
    ti = 0
    while ti < len(targets):
        if steps >= max_steps:
            raise IntegrationError("maximum number of steps exceeded", t)
        target = targets[ti]
        hit = t + h >= target
        h_try = target - t if hit else h
        y_new, err, k_last = _dopri_step(f, y, h_try, k1)
        nfev += 6
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        en = float(np.sqrt(np.mean((err / scale) ** 2))) if y.size else 0.0
        if not np.isfinite(en):
            en = np.inf
        if en <= 1.0:
            t = target if hit else t + h_try
            y, k1 = y_new, k_last
            steps += 1
            _check_finite(t, y)
            if guard is not None:
                guard(t, y)
            if t_eval is None or hit:
                ts.append(t)
                ys.append(y.copy())
            if hit:
                ti += 1
            fac = 5.0 if en == 0 else min(5.0, max(0.2, 0.9 * en ** -0.2))
            if not hit or fac < 1.0:
                h = h_try * fac
        else:
            h = h_try * max(0.2, 0.9 * en ** -0.2)
            if h < 1e-14 * max(1.0, abs(t)):
                raise IntegrationError(f"step size underflow at t={t:.17g}", t)
    return Solution(np.array(ts), np.array(ys), nfev, steps)
