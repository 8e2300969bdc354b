"""Hyperbolic Toda lattices on the manifold Z of normalized Jacobi elements.

A point of Z is

    y = ssf + sum rho[i, j] h_i(j) + sum gamma[i, j] e_{alpha_i}(j),   gamma > 0,

with ssf the principal element with all coefficients 1. Three vector fields
are available:

* ``canonical``: Hamilton's equations of H in the coordinates
  gamma[i, 0] = exp(phi[i, 0]), gamma[i, 1] = gamma[i, 0] * phi[i, 1] (l = 1,
  any Cartan matrix), with canonical pairs (rho[i,0], phi[i,1]) and
  (rho[i,1], phi[i,0]).
* ``symplectic``: the Hamiltonian vector field of H for omega_Z in raw
  coordinates (any l, any Cartan matrix).
* ``lax``: y' = [y, P(y)], P the projection onto the opposite Borel
  (type A, any l).

The Lax field is the time reverse of the other two; ``integrate(...,
backward=True)`` integrates the reversed field.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .algebra import (
    AlgebraError,
    TakiffElement,
    bracket,
    bracket_levels,
    in_borel,
    principal_f,
    project_bbar,
)
from .cartan import CartanMatrix, cartan_matrix
from .integrators import IntegrationError, integrate_adaptive, integrate_fixed
from .invariants import InvariantSpec, evaluate_levels, generating_specs
from .linalg import det, inverse

POSITIVITY_FLOOR = 1e-300


class DynamicsError(ValueError):
    pass


class PositivityLoss(IntegrationError):
    pass


# ---------------------------------------------------------------------------- states

@dataclass
class TodaState:
    """Raw coordinates (rho, gamma) of a point of Z; both arrays are n x (l+1)."""

    rho: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=object if _is_exact(self.rho) else float)
        self.gamma = np.asarray(self.gamma, dtype=object if _is_exact(self.gamma) else float)
        if self.rho.ndim != 2 or self.rho.shape != self.gamma.shape:
            raise DynamicsError(f"rho and gamma must both be n x (l+1); got {self.rho.shape}, {self.gamma.shape}")
        bad = [(i + 1, j) for i in range(self.n) for j in range(self.l + 1) if not self.gamma[i, j] > 0]
        if bad:
            raise DynamicsError(f"gamma must be positive; violated at (i, j) {bad}")

    @property
    def n(self) -> int:
        return self.rho.shape[0]

    @property
    def l(self) -> int:
        return self.rho.shape[1] - 1

    @classmethod
    def from_canonical(cls, rho, phi) -> "TodaState":
        """l = 1 only: gamma0 = exp(phi0), gamma1 = phi1 * gamma0."""
        rho = np.asarray(rho, dtype=float)
        phi = np.asarray(phi, dtype=float)
        if rho.shape != phi.shape or rho.ndim != 2 or rho.shape[1] != 2:
            raise DynamicsError("canonical coordinates need n x 2 arrays rho and phi")
        g0 = np.exp(phi[:, 0])
        return cls(rho, np.stack([g0, g0 * phi[:, 1]], axis=1))

    @property
    def phi(self) -> np.ndarray:
        if self.l != 1:
            raise DynamicsError("canonical coordinates exist only for l = 1")
        g = self.gamma.astype(float)
        return np.stack([np.log(g[:, 0]), g[:, 1] / g[:, 0]], axis=1)

    def to_element(self) -> TakiffElement:
        coeffs = {}
        for i in range(self.n):
            for j in range(self.l + 1):
                coeffs[(f"h{i + 1}", j)] = self.rho[i, j]
                coeffs[(f"e{i + 1},{i + 2}", j)] = self.gamma[i, j]
        exact = _is_exact(self.rho) and _is_exact(self.gamma)
        x = TakiffElement.from_coefficients(self.n, self.l, coeffs, exact=exact)
        f = principal_f(self.n, self.l)
        return f + x if exact else f.to_float() + x

    @classmethod
    def from_element(cls, y: TakiffElement) -> "TodaState":
        f = principal_f(y.n, y.l)
        x = y - (f if y.exact else f.to_float())
        if not in_borel(x):
            raise DynamicsError("y - ssf must lie in b_l")
        extra = [k for k in x.coefficients() if k[0][0] == "e" and not _is_simple(k[0])]
        if extra:
            raise DynamicsError(f"not a Jacobi element: non-simple root components {extra}")
        rho = np.zeros((y.n, y.l + 1), dtype=object if y.exact else float)
        gamma = np.zeros_like(rho)
        for i in range(y.n):
            for j in range(y.l + 1):
                rho[i, j] = y.coefficient(f"h{i + 1}", j)
                gamma[i, j] = y.coefficient(f"e{i + 1},{i + 2}", j)
        return cls(rho, gamma)

    def flat(self) -> np.ndarray:
        return np.concatenate([self.rho.astype(float).ravel(), self.gamma.astype(float).ravel()])

    @classmethod
    def from_flat(cls, v, n: int, l: int) -> "TodaState":
        v = np.asarray(v, dtype=float)
        k = n * (l + 1)
        return cls(v[:k].reshape(n, l + 1), v[k:].reshape(n, l + 1))


def _is_exact(a) -> bool:
    arr = np.asarray(a, dtype=object)
    return arr.size > 0 and all(isinstance(v, (int, Fraction)) for v in arr.ravel())


def _is_simple(label: str) -> bool:
    a, b = label[1:].split(",")
    return int(b) == int(a) + 1


def _resolve_cartan(cartan, n: int) -> CartanMatrix:
    if cartan is None:
        return cartan_matrix("A", n)
    if not isinstance(cartan, CartanMatrix):
        cartan = CartanMatrix(tuple(map(tuple, cartan)))
    if cartan.n != n:
        raise DynamicsError(f"Cartan matrix has rank {cartan.n}, state has rank {n}")
    return cartan


# ---------------------------------------------------------------------------- omega_Z

@dataclass
class OmegaBlock:
    i: int
    tprime: list
    T: list

    @property
    def det_tprime(self):
        return det(self.tprime)


def omega_block(state: TodaState, i: int) -> OmegaBlock:
    """t'[j][s] = gamma[i, j+s-l] for j+s >= l (else 0) and its inverse T_i.

    ``i`` is 1-based.
    """
    if not 1 <= i <= state.n:
        raise DynamicsError(f"block index {i} outside 1..{state.n}")
    g = state.gamma[i - 1]
    if not g[0] > 0:
        raise DynamicsError("gamma[i, 0] must be positive")
    l = state.l
    zero = Fraction(0) if _is_exact(g) else 0.0
    tp = [[g[j + s - l] if j + s >= l else zero for s in range(l + 1)] for j in range(l + 1)]
    if not _is_exact(g):
        tp = [[float(v) for v in row] for row in tp]
    return OmegaBlock(i, tp, inverse(tp))


def symplectic_matrix(state: TodaState) -> np.ndarray:
    """Omega with omega_Z = 1/2 sum Omega[a, b] dx_a ^ dx_b, x = (rho, gamma) flattened."""
    for i in range(state.n):
        omega_block(state, i + 1)
    return _omega_from_gamma(state.gamma.astype(float))


def _omega_from_gamma(gamma: np.ndarray) -> np.ndarray:
    n, L = gamma.shape
    l = L - 1
    dim = 2 * n * L
    om = np.zeros((dim, dim))
    jj, ss = np.meshgrid(np.arange(L), np.arange(L), indexing="ij")
    idx = jj + ss - l
    for i in range(n):
        tp = np.where(idx >= 0, gamma[i][np.clip(idx, 0, l)], 0.0)
        T = np.linalg.inv(tp)
        om[i * L:(i + 1) * L, n * L + i * L:n * L + (i + 1) * L] += T
        om[n * L + i * L:n * L + (i + 1) * L, i * L:(i + 1) * L] -= T.T
    return om


# ---------------------------------------------------------------------------- Hamiltonians

def hamiltonian(state: TodaState, cartan=None):
    """1/2 sum c[i,r] rho[i,j] rho[r,l-j] + sum gamma[i,j]  (= Q(y, y)/2 in type A)."""
    c = _resolve_cartan(cartan, state.n)
    n, l = state.n, state.l
    kin = sum(c[i, r] * state.rho[i, j] * state.rho[r, l - j]
              for i in range(n) for r in range(n) for j in range(l + 1))
    total = kin * (Fraction(1, 2) if _is_exact(state.rho) else 0.5) + sum(state.gamma.ravel())
    return total


def canonical_hamiltonian(rho, phi, cartan=None) -> float:
    """sum c[i,r] rho[i,0] rho[r,1] + sum (1 + phi[i,1]) exp(phi[i,0])."""
    rho = np.asarray(rho, dtype=float)
    phi = np.asarray(phi, dtype=float)
    c = _resolve_cartan(cartan, rho.shape[0]).array
    return float(rho[:, 0] @ c @ rho[:, 1] + np.sum((1.0 + phi[:, 1]) * np.exp(phi[:, 0])))


def hamiltonian_gradient(state: TodaState, cartan=None) -> np.ndarray:
    """Gradient of ``hamiltonian`` in the flattened (rho, gamma) coordinates."""
    c = _resolve_cartan(cartan, state.n).array
    rho = state.rho.astype(float)
    l = state.l
    g_rho = 0.5 * (c @ rho[:, ::-1] + c.T @ rho[:, ::-1])
    return np.concatenate([g_rho.ravel(), np.ones(state.n * (l + 1))])


# ---------------------------------------------------------------------------- vector fields

def canonical_field(cartan: CartanMatrix):
    """Flat Hamilton field on x = (rho0, rho1, phi0, phi1), each block of length n."""
    c = cartan.array
    n = cartan.n

    def f(x):
        r0, r1, p0, p1 = x[:n], x[n:2 * n], x[2 * n:3 * n], x[3 * n:]
        e = np.exp(p0)
        return np.concatenate([-e, -(1.0 + p1) * e, c.T @ r0, c @ r1])

    return f


def canonical_rhs(state: TodaState, cartan=None) -> dict[str, np.ndarray]:
    """Hamilton's equations for the l = 1 Hamiltonian in canonical coordinates.

    d phi[i,1] = dH/d rho[i,0],  d phi[i,0] = dH/d rho[i,1],
    d rho[i,0] = -dH/d phi[i,1], d rho[i,1] = -dH/d phi[i,0].
    """
    if state.l != 1:
        raise DynamicsError("canonical coordinates exist only for l = 1")
    cm = _resolve_cartan(cartan, state.n)
    n = state.n
    x = np.concatenate([state.rho[:, 0].astype(float), state.rho[:, 1].astype(float),
                        state.phi[:, 0], state.phi[:, 1]])
    d = canonical_field(cm)(x)
    return {"rho0": d[:n], "rho1": d[n:2 * n], "phi0": d[2 * n:3 * n], "phi1": d[3 * n:]}


def symplectic_rhs(state: TodaState, cartan=None) -> np.ndarray:
    """Hamiltonian vector field of H for omega_Z in flattened raw coordinates.

    Convention: i_X omega = -dH, matching the canonical field for l = 1.
    """
    cm = _resolve_cartan(cartan, state.n)
    return _symplectic_flat(state.rho.astype(float), state.gamma.astype(float), cm)


def _symplectic_flat(rho: np.ndarray, gamma: np.ndarray, cm: CartanMatrix) -> np.ndarray:
    # no positivity validation: Runge-Kutta stages may probe gamma <= 0
    if np.min(np.abs(gamma[:, 0])) < POSITIVITY_FLOOR:
        raise PositivityLoss("omega_Z is degenerate: some gamma[i, 0] vanished")
    c = cm.array
    g_rho = 0.5 * (c @ rho[:, ::-1] + c.T @ rho[:, ::-1])
    grad = np.concatenate([g_rho.ravel(), np.ones(gamma.size)])
    return np.linalg.solve(_omega_from_gamma(gamma), grad)


def lax_levels(Y: np.ndarray) -> np.ndarray:
    """[y, P(y)] on a raw float component array."""
    N = Y.shape[1]
    return bracket_levels(Y, Y * np.tril(np.ones((N, N))))


def lax_rhs(y: TakiffElement) -> TakiffElement:
    """(chi_I)_y = [y, P(y)] for I = Q/2; the result lies in b_l."""
    f = principal_f(y.n, y.l)
    if not in_borel(y - (f if y.exact else f.to_float())):
        raise DynamicsError("lax_rhs needs y in ssf + b_l")
    return bracket(y, project_bbar(y))


def pair_rhs(x) -> np.ndarray:
    """Reduced n = 1 system on (p, pbar, q, qbar):

        qbar' = 2 pbar,  q' = 2 p,  p' = -(1 + qbar) e^q,  pbar' = -e^q.

    Unlike ``canonical_field`` (with p = rho[1,1], pbar = rho[1,0], q = phi[1,0],
    qbar = phi[1,1]) the two position equations are exchanged, so this is not
    Hamilton's equations for H and H is not conserved along it.
    """
    p, pb, q, qb = x
    e = math.exp(q)
    return np.array([-(1.0 + qb) * e, -e, 2.0 * p, 2.0 * pb])


# ---------------------------------------------------------------------------- quartic identity

def quartic_derivatives(p: float, pbar: float, q: float, qbar: float):
    """qbar'' .. qbar'''' by the chain rule through ``pair_rhs``."""
    e = math.exp(q)
    d2 = -2.0 * e
    d3 = -4.0 * p * e
    d4 = -8.0 * p * p * e + 4.0 * (1.0 + qbar) * e * e
    return d2, d3, d4


def quartic_identity_residual(state: TodaState) -> float:
    """qbar'''' qbar'' - (qbar''')^2 - (1 + qbar)(qbar'')^3 for n = l = 1.

    Identification: p = rho[1,1], pbar = rho[1,0], q = phi[1,0], qbar = phi[1,1].
    """
    if state.n != 1 or state.l != 1:
        raise DynamicsError("quartic identity is defined for n = 1, l = 1")
    phi = state.phi
    p, pbar = float(state.rho[0, 1]), float(state.rho[0, 0])
    q, qbar = float(phi[0, 0]), float(phi[0, 1])
    d2, d3, d4 = quartic_derivatives(p, pbar, q, qbar)
    return d4 * d2 - d3 * d3 - (1.0 + qbar) * d2 ** 3


def quartic_scale(state: TodaState) -> float:
    """Magnitude of the largest term in the quartic identity, for relative checks."""
    phi = state.phi
    p, pbar, q, qbar = float(state.rho[0, 1]), float(state.rho[0, 0]), float(phi[0, 0]), float(phi[0, 1])
    d2, d3, d4 = quartic_derivatives(p, pbar, q, qbar)
    return max(abs(d4 * d2), d3 * d3, abs((1.0 + qbar) * d2 ** 3))


# ---------------------------------------------------------------------------- trajectories

@dataclass
class Trajectory:
    t: np.ndarray
    rho: np.ndarray              # (T, n, l+1)
    gamma: np.ndarray            # (T, n, l+1)
    H: np.ndarray                # (T,)
    invariants: dict[str, np.ndarray] = field(default_factory=dict)
    phi: np.ndarray | None = None        # (T, n, 2) for l = 1
    quartic: np.ndarray | None = None    # (T,) for n = l = 1
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.t)

    @property
    def n(self) -> int:
        return self.rho.shape[1]

    @property
    def l(self) -> int:
        return self.rho.shape[2] - 1

    def state(self, k: int) -> TodaState:
        return TodaState(self.rho[k], self.gamma[k])

    def relative_energy_drift(self) -> float:
        return float(np.max(np.abs(self.H - self.H[0])) / abs(self.H[0]))

    def invariant_drift(self) -> dict[str, float]:
        """max_t |I(t) - I(0)| / max(|I(0)|, 1) per invariant."""
        return {k: float(np.max(np.abs(v - v[0])) / max(abs(v[0]), 1.0)) for k, v in self.invariants.items()}

    def columns(self) -> list[tuple[str, np.ndarray]]:
        """Named columns in output order: t, rho, gamma or phi, H, invariants, quartic."""
        cols: list[tuple[str, np.ndarray]] = [("t", self.t)]
        n, L = self.n, self.l + 1
        for i in range(n):
            for j in range(L):
                cols.append((f"rho_{i + 1}_{j}", self.rho[:, i, j]))
        if self.meta.get("formulation") == "canonical" and self.phi is not None:
            for i in range(n):
                for j in range(2):
                    cols.append((f"phi_{i + 1}_{j}", self.phi[:, i, j]))
        else:
            for i in range(n):
                for j in range(L):
                    cols.append((f"gamma_{i + 1}_{j}", self.gamma[:, i, j]))
        cols.append(("H", self.H))
        for name, vals in self.invariants.items():
            cols.append((name, vals))
        if self.quartic is not None:
            cols.append(("quartic_residual", self.quartic))
        return cols


FORMULATIONS = ("canonical", "symplectic", "lax")


def _raw_levels(rho: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    n, L = rho.shape
    N = n + 1
    Y = np.zeros((L, N, N))
    for j in range(L):
        for i in range(n):
            Y[j, i, i] += rho[i, j]
            Y[j, i + 1, i + 1] -= rho[i, j]
            Y[j, i, i + 1] = gamma[i, j]
            Y[j, i + 1, i] = 1.0
    return Y


def integrate(formulation: str, state0: TodaState, t_end: float, dt: float = 1e-3,
              method: str = "rk4", cartan=None, backward: bool = False,
              rtol: float = 1e-10, atol: float = 1e-10, record_every: int = 1,
              t_eval=None, track_invariants: bool = True) -> Trajectory:
    """Integrate a Toda flow on [0, t_end].

    ``backward=True`` integrates the negated field, i.e. the flow run backwards
    in time; the recorded time is the elapsed time. Integration aborts with
    ``PositivityLoss`` as soon as some gamma drops below ``POSITIVITY_FLOOR``.
    """
    if formulation not in FORMULATIONS:
        raise DynamicsError(f"unknown formulation {formulation!r}; expected one of {FORMULATIONS}")
    if method not in ("rk4", "rk45"):
        raise DynamicsError(f"unknown method {method!r}; expected rk4 or rk45")
    if dt <= 0:
        raise DynamicsError("dt must be positive")
    cm = _resolve_cartan(cartan, state0.n)
    n, l = state0.n, state0.l
    sign = -1.0 if backward else 1.0

    if formulation == "canonical":
        if l != 1:
            raise DynamicsError("canonical formulation needs l = 1")
        base = canonical_field(cm)
        phi0 = state0.phi
        x0 = np.concatenate([state0.rho[:, 0].astype(float), state0.rho[:, 1].astype(float),
                             phi0[:, 0], phi0[:, 1]])

        def unpack(x):
            rho = np.stack([x[:n], x[n:2 * n]], axis=1)
            phi = np.stack([x[2 * n:3 * n], x[3 * n:]], axis=1)
            g0 = np.exp(phi[:, 0])
            return rho, np.stack([g0, g0 * phi[:, 1]], axis=1), phi

    elif formulation == "symplectic":
        split = n * (l + 1)

        def base(x):
            return _symplectic_flat(x[:split].reshape(n, l + 1), x[split:].reshape(n, l + 1), cm)

        x0 = state0.flat()

        def unpack(x):
            return x[:split].reshape(n, l + 1), x[split:].reshape(n, l + 1), None

    else:
        if cm.entries != cartan_matrix("A", n).entries:
            raise DynamicsError("the Lax formulation is realized for type A only")
        N = n + 1
        shape = (l + 1, N, N)
        mask = np.tril(np.ones((N, N)))

        def base(x):
            Y = x.reshape(shape)
            return bracket_levels(Y, Y * mask).ravel()

        x0 = _raw_levels(state0.rho.astype(float), state0.gamma.astype(float)).ravel()

        def unpack(x):
            Y = x.reshape(shape)
            rho = np.zeros((n, l + 1))
            for j in range(l + 1):
                rho[:, j] = np.cumsum(np.diag(Y[j]))[:n]
            gamma = np.stack([np.diag(Y[j], 1) for j in range(l + 1)], axis=1)
            return rho, gamma, None

    f = base if sign > 0 else (lambda x: -base(x))

    def guard(t, x):
        _, gamma, _ = unpack(x)
        if np.min(gamma) < POSITIVITY_FLOOR:
            idx = np.unravel_index(int(np.argmin(gamma)), gamma.shape)
            raise PositivityLoss(
                f"positivity lost at t={t:.17g}: gamma[{idx[0] + 1},{idx[1]}] = {gamma[idx]:.6g}", t)

    if method == "rk4":
        sol = integrate_fixed(f, x0, t_end, dt, guard=guard, record_every=record_every)
    else:
        sol = integrate_adaptive(f, x0, t_end, rtol=rtol, atol=atol, h0=dt, t_eval=t_eval, guard=guard)

    T = len(sol.t)
    rho = np.zeros((T, n, l + 1))
    gamma = np.zeros((T, n, l + 1))
    phi = np.zeros((T, n, 2)) if l == 1 else None
    H = np.zeros(T)
    for k, x in enumerate(sol.y):
        r, g, p = unpack(x)
        rho[k], gamma[k] = r, g
        if phi is not None:
            phi[k] = p if p is not None else np.stack([np.log(g[:, 0]), g[:, 1] / g[:, 0]], axis=1)
        H[k] = canonical_hamiltonian(r, p, cm) if formulation == "canonical" else _float_hamiltonian(r, g, cm)
    invariants: dict[str, np.ndarray] = {}
    if track_invariants and cm.series == "A":
        specs = generating_specs(n, l)
        vals = np.zeros((T, len(specs)))
        for k in range(T):
            Y = _raw_levels(rho[k], gamma[k])
            vals[k] = [evaluate_levels(s, Y) for s in specs]
        invariants = {s.name: vals[:, m] for m, s in enumerate(specs)}
    quartic = None
    if n == 1 and l == 1:
        quartic = np.array([quartic_identity_residual(TodaState(rho[k], gamma[k])) for k in range(T)])
    meta = {"formulation": formulation, "method": method, "dt": dt, "backward": backward,
            "cartan": cm.label, "steps": sol.steps, "nfev": sol.nfev}
    if method == "rk45":
        meta.update(rtol=rtol, atol=atol)
    return Trajectory(sol.t, rho, gamma, H, invariants, phi, quartic, meta)


def _float_hamiltonian(rho, gamma, cm: CartanMatrix) -> float:
    c = cm.array
    l = rho.shape[1] - 1
    kin = sum(rho[:, j] @ c @ rho[:, l - j] for j in range(l + 1))
    return float(0.5 * kin + np.sum(gamma))
