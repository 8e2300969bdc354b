"""Acceptance criteria 1-11, each printing one PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines inline;
they are also collected into an "acceptance criteria" summary section.
"""

import time
from fractions import Fraction

import numpy as np
import pytest
import sympy

from conftest import surviving_states
from takiff_toda.algebra import NilpotentGroupElement, group_apply, principal_f
from takiff_toda.cartan import cartan_matrix
from takiff_toda.checks import random_element, random_nilradical, random_section_point, scattering_state
from takiff_toda.dynamics import PositivityLoss, TodaState, canonical_field, integrate, omega_block
from takiff_toda.integrators import IntegrationError, integrate_adaptive
from takiff_toda.invariants import generating_specs, poisson_bracket_at
from takiff_toda.section import graded_complement, orbit_invariance_check, reduce_to_section
from takiff_toda.series import (
    bound_check,
    global_condition,
    initial_derivatives,
    ode_rhs,
    sample_global_conditions,
    series_coefficients,
    series_eval,
    toda_state_from_conditions,
)

SMALL = [(n, l) for n in (1, 2) for l in (0, 1, 2)]


def screened(cm, l, count, seed, t_end, lax=False):
    """Scattering states whose rk4 flow for ``cm`` stays positive on [0, t_end]."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(200):
        st = scattering_state(rng, cm.n, l, lax=lax)
        try:
            integrate("canonical", st, t_end, dt=1e-2, method="rk45", rtol=1e-8, atol=1e-10, cartan=cm,
                      t_eval=[t_end], track_invariants=False)
        except PositivityLoss:
            continue
        out.append(st)
        if len(out) == count:
            break
    return out


def hamilton_quartic_residual():
    """Identity residual with qbar derivatives taken along the canonical field itself."""
    p, pb, q, qb = sympy.symbols("p pbar q qbar")
    x = [pb, p, q, qb]  # (rho0, rho1, phi0, phi1)
    field = {pb: -sympy.exp(q), p: -(1 + qb) * sympy.exp(q), q: 2 * pb, qb: 2 * p}
    d = [qb]
    for _ in range(4):
        d.append(sum(sympy.diff(d[-1], v) * field[v] for v in x))
    res = d[4] * d[2] - d[3] ** 2 - (1 + qb) * d[2] ** 3
    return sympy.lambdify(x, res, "numpy")


class TestAcceptance:
    def test_01_poisson_commutation(self, record_criterion):
        """All generating invariants Poisson commute at random points."""
        t0 = time.perf_counter()
        rng = np.random.default_rng(101)
        worst = 0.0
        for n, l in SMALL:
            specs = generating_specs(n, l)
            for _ in range(100):
                z = random_element(rng, n, l)
                worst = max(worst, max(abs(poisson_bracket_at(u, v, z)) for u in specs for v in specs))
        secs = time.perf_counter() - t0
        ok = worst < 1e-9 and secs < 30
        record_criterion(1, ok, f"max |{{I,J}}| = {worst:.2e} (< 1e-9), {secs:.1f} s (< 30 s)")
        assert ok

    def test_02_lax_conservation(self, record_criterion):
        """Invariants are constant along rk4 Lax trajectories."""
        t0 = time.perf_counter()
        worst = 0.0
        for n, l in SMALL:
            (st,) = surviving_states(n, l, 1, seed=200 + 10 * n + l, lax=True)
            tr = integrate("lax", st, 10.0, dt=1e-3)
            worst = max(worst, max(tr.invariant_drift().values()))
        secs = time.perf_counter() - t0
        ok = worst < 1e-6 and secs < 60
        record_criterion(2, ok, f"max relative invariant drift = {worst:.2e} (< 1e-6), {secs:.1f} s (< 60 s)")
        assert ok

    def test_03_energy_conservation(self, record_criterion):
        """H is conserved along rk4 canonical trajectories for A1, A2, B2."""
        worst, labels = 0.0, []
        for series, rank in (("A", 1), ("A", 2), ("B", 2)):
            cm = cartan_matrix(series, rank)
            for st in screened(cm, 1, 2, seed=300 + rank, t_end=10.0):
                tr = integrate("canonical", st, 10.0, dt=1e-3, cartan=cm, track_invariants=False)
                worst = max(worst, tr.relative_energy_drift())
                labels.append(cm.label)
        ok = worst < 1e-6 and len(labels) == 6
        record_criterion(3, ok, f"max |dH|/|H| = {worst:.2e} (< 1e-6) over {len(labels)} trajectories")
        assert ok

    def test_04_time_reversal(self, record_criterion):
        """Canonical flow forward equals the Lax flow run backwards (n = l = 1)."""
        worst = 0.0
        for st in surviving_states(1, 1, 3, seed=400, t_end=5.0):
            fwd = integrate("canonical", st, 5.0, dt=1e-3, track_invariants=False)
            back = integrate("lax", st, 5.0, dt=1e-3, backward=True, track_invariants=False)
            worst = max(worst, np.max(np.abs(fwd.rho - back.rho)), np.max(np.abs(fwd.gamma - back.gamma)))
        ok = worst < 1e-6
        record_criterion(4, ok, f"sup |canonical - reversed Lax| = {worst:.2e} (< 1e-6)")
        assert ok

    def test_05_omega_block(self, record_criterion):
        """T_1 at gamma = (1, 3) and det(t') = +-gamma_0^(l+1) exactly."""
        st = TodaState([[Fraction(0), Fraction(0)]], [[Fraction(1), Fraction(3)]])
        display_ok = omega_block(st, 1).T == [[-3, 1], [1, 0]]
        rng = np.random.default_rng(500)
        bad = 0
        for k in range(100):
            l = k % 4
            gamma = [[Fraction(int(a), int(b)) for a, b in zip(rng.integers(1, 20, l + 1), rng.integers(1, 9, l + 1))]]
            blk = omega_block(TodaState([[Fraction(0)] * (l + 1)], gamma), 1)
            if abs(blk.det_tprime) != gamma[0][0] ** (l + 1):
                bad += 1
        ok = display_ok and bad == 0
        record_criterion(5, ok, f"T_1 display {'matches' if display_ok else 'differs'}, {bad}/100 determinant failures")
        assert ok

    def test_06_07_reduction_and_orbit_invariance(self, record_criterion):
        """Exact (a, s) round trip and zero orbit discrepancy on the same samples."""
        t0 = time.perf_counter()
        rng = np.random.default_rng(600)
        fails, disc, total = 0, [], 0
        for n in (1, 2):
            for l in (0, 1, 2):
                sec = graded_complement(n, l)
                for _ in range(100):
                    a = NilpotentGroupElement(random_nilradical(rng, n, l))
                    s = random_section_point(rng, sec)
                    y = group_apply(a, principal_f(n, l) + s)
                    red = reduce_to_section(y, sec)
                    fails += not (red.group == a and red.section_point == s)
                    disc.append(orbit_invariance_check(y, sec).discrepancy)
                    total += 1
        secs = time.perf_counter() - t0
        ok6 = fails == 0 and secs < 60
        ok7 = all(d == 0 for d in disc)
        record_criterion(6, ok6, f"{total - fails}/{total} exact round trips, {secs:.1f} s (< 60 s)")
        record_criterion(7, ok7, f"max exact orbit discrepancy = {max(disc)} over {total} samples")
        assert ok6 and ok7

    def test_08_series_bound(self, record_criterion):
        """|a_{k+2}| < 2/k^2 for k <= 200 plus the three early bounds."""
        rng = np.random.default_rng(800)
        failures, min_ratio = 0, np.inf
        for _ in range(1000):
            sol = series_coefficients(*rng.uniform(-1, 1, 4), N=202)
            rep = bound_check(sol)
            failures += not rep.ok
            ks = np.arange(1, 201)
            min_ratio = min(min_ratio, float(np.min([sol.bound_audit[k] * k * k / 2 for k in ks])))
        ok = failures == 0
        record_criterion(8, ok, f"{1000 - failures}/1000 samples within all bounds, min relative margin {min_ratio:.3f}")
        assert ok

    def test_09_series_vs_integrator(self, record_criterion):
        """Series values match adaptive integration of the ODE on [0, 1]."""
        rng = np.random.default_rng(900)
        ts = np.linspace(0.0, 1.0, 21)
        worst = 0.0
        for _ in range(20):
            sol = series_coefficients(*rng.uniform(-1, 1, 4))
            num = integrate_adaptive(lambda y: ode_rhs(y, sol.C0), initial_derivatives(sol), 1.0,
                                     rtol=1e-12, atol=1e-12, t_eval=ts)
            ser = np.array([series_eval(sol, t).value for t in ts])
            worst = max(worst, float(np.max(np.abs(num.y[:, 0] - ser))))
        ok = worst < 1e-8
        record_criterion(9, ok, f"max |series - rk45| = {worst:.2e} (< 1e-8) over 20 samples")
        assert ok

    def test_10_quartic_identity(self, record_criterion):
        """Quartic identity residual along canonical trajectories (n = l = 1)."""
        worst, hamilton = 0.0, 0.0
        res_h = hamilton_quartic_residual()
        for st in surviving_states(1, 1, 3, seed=1000):
            tr = integrate("canonical", st, 10.0, dt=1e-3)
            worst = max(worst, float(np.max(np.abs(tr.quartic))))
            hamilton = max(hamilton, float(np.max(np.abs(res_h(tr.rho[:, 0, 0], tr.rho[:, 0, 1],
                                                               tr.phi[:, 0, 0], tr.phi[:, 0, 1])))))
        ok = worst < 1e-8
        record_criterion(10, ok, f"max residual = {worst:.2e} (< 1e-8); informative: with derivatives from "
                                 f"Hamilton's equations instead, max |residual| = {hamilton:.2e}")
        assert ok

    def test_11_global_solvability(self, record_criterion):
        """States passing the global condition stay finite with qbar > 0 up to t = 50."""
        rng = np.random.default_rng(1100)
        survived, reasons = 0, []
        for _ in range(20):
            c = sample_global_conditions(rng)
            assert global_condition(*c).verdict
            st = toda_state_from_conditions(*c)
            try:
                tr = integrate("canonical", st, 50.0, method="rk45", rtol=1e-10, atol=1e-10, track_invariants=False)
            except IntegrationError as exc:
                reasons.append(exc.t)
                continue
            finite = np.all(np.isfinite(tr.rho)) and np.all(np.isfinite(tr.phi))
            if finite and np.all(tr.phi[:, 0, 1] > 0):
                survived += 1
        detail = f"{survived}/20 trajectories finite with qbar > 0 on [0, 50]"
        if reasons:
            detail += f"; earliest breakdown at t = {min(reasons):.3f}"
        ok = survived == 20
        record_criterion(11, ok, detail)
        assert ok, detail
