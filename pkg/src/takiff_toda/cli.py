"""Command-line front end.

Subcommands::

    simulate     integrate a Toda flow and write a trajectory CSV
    invariants   evaluate the invariant table at a point given as JSON
    reduce       move a point of ssf + b_l onto the Kostant section (JSON in, JSON out)
    series       power series coefficients with the bound audit, or
                 ``series check-global`` for the global-solvability condition
    check        run the quick property checks

Exit codes: 0 success, 1 validation or usage error, 2 runtime failure
(positivity loss, non-finite values, failed checks).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, TextIO

import numpy as np

from .algebra import AlgebraError, TakiffElement
from .cartan import CartanError, cartan_matrix
from .checks import run_checks, scattering_state
from .dynamics import FORMULATIONS, DynamicsError, TodaState, Trajectory, integrate
from .integrators import IntegrationError
from .invariants import all_specs, evaluate_invariant, generating_specs
from .section import SectionError, graded_complement, reduce_to_section
from .series import DEFAULT_ORDER, bound_check, global_condition, series_coefficients

SEED_ENV = "TAKIFF_TODA_SEED"
EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class ExperimentConfig:
    subcommand: str = "simulate"
    series: str = "A"
    rank: int = 1
    l: int = 1
    formulation: str = "canonical"
    method: str = "rk4"
    t_end: float = 10.0
    dt: float = 1e-3
    rtol: float = 1e-10
    atol: float = 1e-10
    record_every: int = 1
    # {"rho": [[...]], "gamma": [[...]]}, {"rho": ..., "phi": ...} or "random"
    initial: Any = None
    input: str | None = None
    output: str | None = None
    seed: int = 0
    a0: float = 0.0
    a1: float = 0.0
    a2: float = 0.0
    C0: float = 0.0
    order: int = DEFAULT_ORDER
    all_coefficients: bool = False

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - names)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, s: str) -> "ExperimentConfig":
        d = json.loads(s)
        if not isinstance(d, dict):
            raise ValueError("config must be a JSON object")
        return cls.from_dict(d)


# ---------------------------------------------------------------------------- output

def format_float(v: float) -> str:
    """17 significant digits: parsing the text gives back the same double."""
    return f"{float(v):.17g}"


def _format_value(v) -> str:
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format_float(v)


def emit_trajectory(traj: Trajectory, path_or_stream) -> None:
    """Write the trajectory as CSV, one header row naming every column."""
    cols = traj.columns()
    own = isinstance(path_or_stream, (str, os.PathLike))
    fh = open(path_or_stream, "w", newline="") if own else path_or_stream
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([name for name, _ in cols])
        for k in range(len(traj)):
            w.writerow([format_float(vals[k]) for _, vals in cols])
    finally:
        if own:
            fh.close()


def _open_out(path: str | None) -> TextIO:
    if path is None or path == "-":
        return sys.stdout
    return open(path, "w", newline="")


def _read_input(path: str | None) -> str:
    if path is None or path == "-":
        return sys.stdin.read()
    with open(path) as fh:
        return fh.read()


# ---------------------------------------------------------------------------- subcommands

def _separating_momenta(cm, rate: float) -> tuple[np.ndarray, np.ndarray]:
    """rho[:, 0], rho[:, 1] with initial d phi[:, 0] = -rate and d phi[:, 1] = +rate."""
    c = cm.array
    ones = np.ones(cm.n)
    return np.linalg.solve(c.T, -rate * ones), np.linalg.solve(c, rate * ones)


def initial_state(cfg: ExperimentConfig) -> TodaState:
    cm = cartan_matrix(cfg.series, cfg.rank)
    n, l = cm.n, cfg.l
    lax = cfg.formulation == "lax"
    init = cfg.initial
    if init == "random":
        return scattering_state(np.random.default_rng(cfg.seed), n, l, lax=lax)
    if init is None:
        # rate 2 keeps the default trajectory well inside Z over t in [0, 10]
        r0, r1 = _separating_momenta(cm, -2.0 if lax else 2.0)
        rho = np.column_stack([r0] + [r1] * l)
        return TodaState(rho, np.full((n, l + 1), 0.5))
    if not isinstance(init, dict) or "rho" not in init:
        raise ValueError('initial must be "random" or an object with "rho" and "gamma" (or "phi")')
    rho = np.asarray(init["rho"], dtype=float)
    if "phi" in init:
        st = TodaState.from_canonical(rho, init["phi"])
    elif "gamma" in init:
        st = TodaState(rho, np.asarray(init["gamma"], dtype=float))
    else:
        raise ValueError('initial needs "gamma" or "phi" next to "rho"')
    if st.n != n or st.l != l:
        raise ValueError(f"initial state has shape n={st.n}, l={st.l}; config says n={n}, l={l}")
    return st


def cmd_simulate(cfg: ExperimentConfig) -> int:
    if cfg.formulation not in FORMULATIONS:
        raise ValueError(f"unknown formulation {cfg.formulation!r}")
    cm = cartan_matrix(cfg.series, cfg.rank)
    st = initial_state(cfg)
    traj = integrate(cfg.formulation, st, cfg.t_end, dt=cfg.dt, method=cfg.method, cartan=cm,
                     rtol=cfg.rtol, atol=cfg.atol, record_every=cfg.record_every)
    fh = _open_out(cfg.output)
    try:
        emit_trajectory(traj, fh)
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


def _point_from_config(cfg: ExperimentConfig) -> TakiffElement:
    if cfg.input is not None:
        return TakiffElement.from_json(_read_input(cfg.input))
    if cfg.series != "A":
        raise ValueError("points are realized as matrices for type A only")
    return initial_state(cfg).to_element()


def cmd_invariants(cfg: ExperimentConfig) -> int:
    y = _point_from_config(cfg)
    specs = all_specs(y.n, y.l) if cfg.all_coefficients else generating_specs(y.n, y.l)
    fh = _open_out(cfg.output)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["name", "k", "j", "invariant", "value"])
        for s in specs:
            w.writerow([s.name, s.k, s.j, int(s.is_invariant(y.l)), _format_value(evaluate_invariant(s, y))])
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


def cmd_reduce(cfg: ExperimentConfig) -> int:
    y = TakiffElement.from_json(_read_input(cfg.input))
    section = graded_complement(y.n, y.l)
    red = reduce_to_section(y, section)
    if y.exact:
        coords = section.coordinates(red.section_point)
    else:
        coords = [c for d in sorted(section.keys) for c in section.decompose(red.section_point.degree_part(d), d)[1]]
    out = {
        "log_a": red.group.log.to_dict(),
        "s": red.section_point.to_dict(),
        "section_basis": [v.to_dict() for v in section.section],
        "section_coordinates": [_format_value(c) for c in coords],
        "iterations": red.iterations,
    }
    fh = _open_out(cfg.output)
    try:
        fh.write(json.dumps(out, indent=2) + "\n")
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


def cmd_series(cfg: ExperimentConfig) -> int:
    sol = series_coefficients(cfg.a0, cfg.a1, cfg.a2, cfg.C0, cfg.order)
    fh = _open_out(cfg.output)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "a_n", "bound", "margin"])
        for n_, a in enumerate(sol.a):
            k = n_ - 2
            if k in sol.bound_audit:
                w.writerow([n_, format_float(a), format_float(2.0 / k**2), format_float(sol.bound_audit[k])])
            else:
                w.writerow([n_, format_float(a), "", ""])
    finally:
        if fh is not sys.stdout:
            fh.close()
    rep = bound_check(sol)
    if not rep.applicable:
        print("bound audit: not applicable (a0, a1, a2, C0 must lie in (-1, 1))", file=sys.stderr)
    else:
        print(f"bound audit: {'all bounds hold' if rep.ok else 'violation'}", file=sys.stderr)
    return EXIT_OK


def cmd_check_global(c: list[float]) -> int:
    rep = global_condition(*c)
    for name, v in rep.quantities.items():
        shown = "undefined" if v is None else format_float(v)
        print(f"{name} = {shown}  in (0,1): {'yes' if rep.checks[name] else 'no'}")
    if rep.diagnostic:
        print(f"diagnostic: {rep.diagnostic}")
    print(f"verdict: {'global solution asserted' if rep.verdict else 'condition not met'}")
    return EXIT_OK


def cmd_check(cfg: ExperimentConfig) -> int:
    outcomes = run_checks(cfg.seed)
    for o in outcomes:
        print(f"{'PASS' if o.passed else 'FAIL'} {o.name:<10} {o.detail} ({o.seconds:.2f} s)")
    return EXIT_OK if all(o.passed for o in outcomes) else EXIT_RUNTIME


# ---------------------------------------------------------------------------- parsing

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS,
                        help="JSON experiment config; flags override its values")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help=f"random seed (overrides ${SEED_ENV} and the config)")
    p = _Parser(prog="takiff-toda", description="Takiff algebra Toda lattices: simulation and checks.",
                parents=[common])
    sub = p.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", parents=[common], help="integrate a Toda flow, write CSV")
    sim.add_argument("--type", dest="series", choices=["A", "B", "C", "D"])
    sim.add_argument("--rank", type=int)
    sim.add_argument("--l", type=int)
    sim.add_argument("--formulation", choices=FORMULATIONS)
    sim.add_argument("--method", choices=["rk4", "rk45"])
    sim.add_argument("--t-end", dest="t_end", type=float)
    sim.add_argument("--dt", type=float)
    sim.add_argument("--rtol", type=float)
    sim.add_argument("--atol", type=float)
    sim.add_argument("--record-every", dest="record_every", type=int)
    sim.add_argument("--random-initial", dest="random_initial", action="store_true",
                     help="draw the initial state from the seeded scattering family")
    sim.add_argument("--out", dest="output")

    inv = sub.add_parser("invariants", parents=[common], help="invariant table at a JSON point, as CSV")
    inv.add_argument("--point", dest="input", help="element JSON file, '-' for stdin")
    inv.add_argument("--all", dest="all_coefficients", action="store_true",
                     help="include the non-invariant higher z-coefficients")
    inv.add_argument("--out", dest="output")

    red = sub.add_parser("reduce", parents=[common], help="reduce a JSON point of ssf + b_l onto the section")
    red.add_argument("--input", dest="input", help="element JSON file, '-' for stdin")
    red.add_argument("--out", dest="output")

    ser = sub.add_parser("series", parents=[common], help="series coefficients and bound audit as CSV")
    ser.add_argument("--a0", type=float)
    ser.add_argument("--a1", type=float)
    ser.add_argument("--a2", type=float)
    ser.add_argument("--c0", dest="C0", type=float)
    ser.add_argument("--order", type=int)
    ser.add_argument("--out", dest="output")
    ser_sub = ser.add_subparsers(dest="series_action", parser_class=_Parser)
    glob = ser_sub.add_parser("check-global", help="evaluate the global-solvability condition")
    for i in range(4):
        glob.add_argument(f"--c{i}", dest=f"g{i}", type=float, required=True)

    sub.add_parser("check", parents=[common], help="run the quick property checks")
    return p


_FLAG_FIELDS = ("series", "rank", "l", "formulation", "method", "t_end", "dt", "rtol", "atol",
                "record_every", "output", "input", "a0", "a1", "a2", "C0", "order")


def resolve_config(args: argparse.Namespace, environ=None) -> ExperimentConfig:
    """Defaults, then the --config file, then flags; the seed env var beats the file."""
    environ = os.environ if environ is None else environ
    cfg = ExperimentConfig()
    config = getattr(args, "config", None)
    if config:
        with open(config) as fh:
            cfg = ExperimentConfig.from_json(fh.read())
    cfg.subcommand = args.subcommand
    for name in _FLAG_FIELDS:
        v = getattr(args, name, None)
        if v is not None:
            setattr(cfg, name, v)
    if getattr(args, "all_coefficients", False):
        cfg.all_coefficients = True
    if getattr(args, "random_initial", False):
        cfg.initial = "random"
    if environ.get(SEED_ENV):
        try:
            cfg.seed = int(environ[SEED_ENV])
        except ValueError:
            raise ValueError(f"{SEED_ENV} must be an integer, got {environ[SEED_ENV]!r}") from None
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    return cfg


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        if args.subcommand == "series" and args.series_action == "check-global":
            return cmd_check_global([args.g0, args.g1, args.g2, args.g3])
        cfg = resolve_config(args)
        handler = {"simulate": cmd_simulate, "invariants": cmd_invariants, "reduce": cmd_reduce,
                   "series": cmd_series, "check": cmd_check}[args.subcommand]
        return handler(cfg)
    except IntegrationError as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (SectionError, AlgebraError, DynamicsError, CartanError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main() -> None:
    sys.exit(run())
