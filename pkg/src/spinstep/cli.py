"""Command-line experiment runner.

Every subcommand writes plot-ready CSV (or ``name,max_violation,tolerance,pass``
report lines). Exit codes: 0 success, 2 numerical failure, 3 invalid input.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import diagnostics as diag
from .csvio import format_rows, trajectory_table, write_table, write_text
from .errors import DomainError, NoConvergenceError
from .integrators import METHODS, StepConfig, integrate
from .nambu import NambuSystem, casimir_catalog, integrate_nambu, lagrange_system
from .sphere import random_rotations, random_spin_state, spin_state
from .systems import (
    closed_curve_state,
    forced_rigid_body,
    free_rigid_body,
    harmonic_oscillator,
    heisenberg_chain,
    irreversible_rigid_body,
    point_vortices,
    check_gradient,
)

EXIT_OK, EXIT_NUMERIC, EXIT_INVALID = 0, 2, 3


class InvalidInput(ValueError):
    pass


@dataclass(frozen=True)
class Param:
    name: str
    default: tuple
    arity: int | None  # None: any positive length
    integer: bool = False
    doc: str = ""


@dataclass(frozen=True)
class SystemEntry:
    name: str
    build: Callable
    params: tuple
    doc: str
    sphere_count: Callable = lambda p: 1
    default_w0: Callable | None = None


def _kappa_count(p):
    return len(p["kappa"])


SYSTEMS = {
    e.name: e
    for e in [
        SystemEntry(
            "free-rb", lambda p: free_rigid_body(p["I"]),
            (Param("I", (1.0, 2.0, 4.0), 3, doc="principal moments"),),
            "free rigid body, H = w.I^-1 w / 2",
        ),
        SystemEntry(
            "irreversible-rb", lambda p: irreversible_rigid_body(p["I"], p["sigma"][0]),
            (Param("I", (1.0, 2.0, 4.0), 3), Param("sigma", (2.0 / 3.0,), 1, doc="|sigma| < 1")),
            "rigid body with direction-dependent inertia I_i/(1 + sigma w_i)",
        ),
        SystemEntry(
            "forced-rb", lambda p: forced_rigid_body(p["I"], p["epsilon"][0]),
            (Param("I", (1.0, 4.0 / 3.0, 2.0), 3), Param("epsilon", (0.07,), 1)),
            "rigid body with loading epsilon sin(t) w3, period 2 pi",
        ),
        SystemEntry(
            "vortices", lambda p: point_vortices(p["kappa"]),
            (Param("kappa", (1.0, 1.0, 1.0, 1.0), None, doc="vortex strengths"),),
            "point vortices on the sphere",
            sphere_count=_kappa_count,
        ),
        SystemEntry(
            "heisenberg", lambda p: heisenberg_chain(p["n"][0]),
            (Param("n", (100,), 1, integer=True, doc="number of spins, >= 2"),),
            "periodic classical Heisenberg spin chain",
            sphere_count=lambda p: p["n"][0],
            default_w0=lambda p, rng: closed_curve_state(p["n"][0], rng),
        ),
        SystemEntry(
            "harmonic", lambda p: harmonic_oscillator(p["a"], p["lambda"][0]),
            (Param("a", (0.0, 0.0, 1.0), 3), Param("lambda", (1.0,), 1)),
            "linear test system w' = lambda w x a",
        ),
    ]
}

PRESETS = {
    "rb-fig2": ("free-rb", {}, (np.cos(1.1), 0.0, np.sin(1.1))),
    "irrev-fig3": ("irreversible-rb", {}, (0.0, 0.7248, -0.6889)),
    "forced-rb": ("forced-rb", {"I": (1.0, 4.0 / 3.0, 2.0), "epsilon": (0.07,)}, (np.cos(0.6), 0.0, np.sin(0.6))),
}

NAMBU_SYSTEMS = ["lagrange"] + [name for name, _ in casimir_catalog()]


# Parsing ---------------------------------------------------------------------

def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
    except ValueError:
        raise InvalidInput(f"not a list of numbers: {text!r}") from None


def parse_params(entry: SystemEntry, items) -> dict:
    known = {p.name: p for p in entry.params}
    values = {p.name: p.default for p in entry.params}
    for item in items or []:
        if "=" not in item:
            raise InvalidInput(f"parameter {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        if key not in known:
            raise InvalidInput(f"{entry.name} has no parameter {key!r}; known: {', '.join(known)}")
        p = known[key]
        vals = _floats(raw)
        if p.arity is not None and len(vals) != p.arity:
            raise InvalidInput(f"{entry.name}.{key} takes {p.arity} value(s), got {len(vals)}")
        if not vals:
            raise InvalidInput(f"{entry.name}.{key} needs at least one value")
        if p.integer:
            if any(v != int(v) for v in vals):
                raise InvalidInput(f"{entry.name}.{key} must be an integer")
            vals = [int(v) for v in vals]
        values[key] = tuple(vals)
    return values


def resolve_seed(seed):
    if seed is not None:
        return seed
    env = os.environ.get("SPINSTEP_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise InvalidInput(f"SPINSTEP_SEED must be an integer, got {env!r}") from None
    return 0


@dataclass
class RunSpec:
    system: str
    params: dict
    H: object
    w0: np.ndarray
    seed: int
    cfg: StepConfig | None = None
    extra: dict = field(default_factory=dict)


def build_run(args, need_h=True) -> RunSpec:
    """Validate system, parameters, initial state and solver settings."""
    preset_params = {}
    system = args.system
    preset_w0 = None
    if getattr(args, "preset", None):
        if args.preset not in PRESETS:
            raise InvalidInput(f"unknown preset {args.preset!r}; known: {', '.join(PRESETS)}")
        psys, preset_params, preset_w0 = PRESETS[args.preset]
        if system and system != psys:
            raise InvalidInput(f"preset {args.preset} is for system {psys}, not {system}")
        system = psys
    if not system:
        raise InvalidInput("no --system or --preset given")
    if system not in SYSTEMS:
        raise InvalidInput(f"unknown system {system!r}; known: {', '.join(SYSTEMS)}")
    entry = SYSTEMS[system]
    given = [f"{k}={','.join(map(str, v))}" for k, v in preset_params.items()]
    params = parse_params(entry, given + list(args.param or []))
    try:
        H = entry.build(params)
    except ValueError as exc:
        raise InvalidInput(str(exc)) from None

    seed = resolve_seed(args.seed)
    n = H.n
    if args.w0:
        vals = _floats(args.w0)
        if len(vals) != 3 * n:
            raise InvalidInput(f"{system} needs {3 * n} initial values, got {len(vals)}")
        raw = np.array(vals).reshape(n, 3)
        if np.any(np.linalg.norm(raw, axis=1) == 0):
            raise InvalidInput("initial components must be nonzero")
        w0 = spin_state(raw)
    elif preset_w0 is not None:
        w0 = spin_state(np.array(preset_w0)[None])
    else:
        rng = np.random.default_rng(seed)
        w0 = entry.default_w0(params, rng) if entry.default_w0 else random_spin_state(n, rng)

    cfg = None
    if need_h:
        cfg = make_cfg(args, args.h)
    return RunSpec(system, params, H, w0, seed, cfg)


def make_cfg(args, h) -> StepConfig:
    if h is None or not np.isfinite(h) or h <= 0:
        raise InvalidInput(f"step size must be positive, got {h}")
    if args.tol <= 0 or args.max_iter < 1:
        raise InvalidInput("solver tolerance must be positive and max-iter >= 1")
    return StepConfig(h, solver_tol=args.tol, max_iterations=args.max_iter,
                      newton_fallback=not args.no_newton)


def _check_steps(steps):
    if steps is None or steps < 0:
        raise InvalidInput(f"steps must be a non-negative integer, got {steps}")


# Commands --------------------------------------------------------------------

def cmd_list_systems(args) -> int:
    lines = ["spin systems:"]
    for e in SYSTEMS.values():
        ps = ", ".join(
            f"{p.name}={','.join(f'{v:g}' for v in p.default)}"
            + (f" ({p.doc})" if p.doc else "")
            for p in e.params
        )
        lines.append(f"  {e.name:16s} {e.doc}; params: {ps}")
    lines.append("nambu systems:")
    lines.append("  lagrange         C = (w1^2 - w2^2)/2, H = (w1^2 - w3^2)/2, default w0 = 2,1,1")
    for name, M in casimir_catalog():
        lines.append(f"  {name:16s} quadratic Casimir, random positive-definite quadratic H of unit norm (seeded)")
    lines.append("presets:")
    for name, (system, params, w0) in PRESETS.items():
        ps = "; ".join(f"{k}={','.join(f'{v:g}' for v in vals)}" for k, vals in params.items())
        lines.append(
            f"  {name:16s} system {system}, w0 = ({', '.join(f'{v:.6g}' for v in w0)})"
            + (f", {ps}" if ps else "")
        )
    lines.append(f"methods: {', '.join(METHODS)}")
    write_text(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_integrate(args) -> int:
    run = build_run(args)
    _check_steps(args.steps)
    traj = integrate(run.H, run.w0, args.t0, run.cfg, args.steps, args.method, True)
    header, rows = trajectory_table(traj.times, traj.states, {"H": traj.energies})
    write_table(args.out, header, rows)
    return EXIT_OK


def cmd_compare(args) -> int:
    run = build_run(args, need_h=False)
    methods = [m.strip() for m in args.methods.split(",")]
    for m in methods:
        if m not in METHODS + ("reference",):
            raise InvalidInput(f"unknown method {m!r}")
    h_list = _floats(args.h_list)
    if not h_list or any(h <= 0 for h in h_list) or args.T <= 0:
        raise InvalidInput("h-list and T must be positive")
    base = make_cfg(args, h_list[0])
    rows = []
    for h in h_list:
        try:
            errs = diag.compare_methods(run.H, run.w0, args.T, h, methods, base, args.t0)
        except ValueError as exc:
            raise InvalidInput(str(exc)) from None
        rows.append([h] + [errs[m] for m in methods])
    write_table(args.out, ["h"] + methods, rows)
    return EXIT_OK


def cmd_convergence(args) -> int:
    run = build_run(args, need_h=False)
    methods = [m.strip() for m in args.methods.split(",")]
    for m in methods:
        if m not in METHODS:
            raise InvalidInput(f"unknown method {m!r}")
    h_list = _floats(args.h_list)
    if len(h_list) < 2 or any(h <= 0 for h in h_list) or args.T <= 0:
        raise InvalidInput("need at least two positive step sizes and T > 0")
    base = make_cfg(args, h_list[0])
    columns, reports = [], []
    for m in methods:
        try:
            errs = diag.convergence_errors(run.H, run.w0, args.T, h_list, m, args.reference, base, args.t0)
        except ValueError as exc:
            raise InvalidInput(str(exc)) from None
        columns.append(errs)
        slope = diag.fitted_slope(h_list, errs)
        reports.append(diag.DiagnosticReport(f"order[{m}]", abs(slope - 2.0), 0.1, f"slope {slope!r}"))
    write_table(args.out, ["h"] + methods, np.column_stack([h_list] + columns))
    if args.report:
        write_text(args.report, "".join(r.to_line() + "\n" for r in reports))
    return EXIT_OK


def cmd_poincare(args) -> int:
    if args.system is None and args.preset is None:
        args.preset = "forced-rb"
    if args.epsilon is not None:
        args.param = list(args.param or []) + [f"epsilon={args.epsilon!r}"]
    run = build_run(args, need_h=False)
    if args.N < 1 or args.periods < 0 or args.period <= 0:
        raise InvalidInput("N >= 1, periods >= 0 and period > 0 are required")
    cfg = make_cfg(args, args.period / args.N)
    section = diag.poincare_section(run.H, run.w0, args.period, args.N, args.periods, cfg, args.t0)
    times = args.t0 + args.period * np.arange(args.periods + 1)
    energies = [run.H.value(s, t) for s, t in zip(section, times)]
    header, rows = trajectory_table(times, section, {"H": energies})
    write_table(args.out, header, rows)
    return EXIT_OK


def cmd_diagnose(args) -> int:
    run = build_run(args)
    cfg = run.cfg
    rng = np.random.default_rng(run.seed)
    checks = ["poisson", "self-adjoint", "equivariance", "extension", "conservation", "gradient"]
    selected = checks if args.check == "all" else [args.check]
    reports = []
    H, w0 = run.H, run.w0
    for check in selected:
        if check == "poisson":
            reports.append(diag.check_poisson_preservation(
                H, w0, cfg, args.trials, args.delta, run.seed, args.method, t=args.t0))
        elif check == "self-adjoint":
            reports.append(diag.check_self_adjoint(H, w0, cfg, args.t0, args.method))
        elif check == "equivariance":
            g = random_rotations(H.n, rng)
            reports.append(diag.check_equivariance(H, w0, g, cfg, args.t0, args.method))
        elif check == "extension":
            c = rng.uniform(-2, 2, H.n)
            reports.append(diag.check_extension_independence(H, w0, c, cfg, args.t0))
        elif check == "conservation":
            _check_steps(args.steps)
            traj = integrate(H, w0, args.t0, cfg, args.steps, args.method, False)
            integrals = {"radii": diag.squared_radii}
            if not H.time_dependent:
                integrals["energy"] = diag.energy_integral(H)
            if H.name == "heisenberg":
                integrals["total-spin"] = diag.total_spin
            reports += diag.conservation_report(H, traj, integrals, args.conservation_tol)
        elif check == "gradient":
            err = max(check_gradient(H, random_spin_state(H.n, rng), args.t0) for _ in range(10))
            reports.append(diag.DiagnosticReport(f"gradient[{H.name}]", err, 1e-6))
    write_text(args.out, "".join(r.to_line() + "\n" for r in reports))
    return EXIT_OK


def cmd_vortex_manifold(args) -> int:
    if args.h <= 0:
        raise InvalidInput("step size must be positive")
    _check_steps(args.steps)
    cfg = make_cfg(args, args.h)
    reports = []
    if args.grid:
        th = (np.arange(args.grid) + 0.5) * np.pi / args.grid
        ph = (np.arange(args.grid) + 0.5) * 2 * np.pi / args.grid
        worst = 0.0
        for a in th:
            for b in ph:
                try:
                    worst = max(worst, diag.manifold_tangency_residual(a, b))
                except DomainError:
                    continue
        reports.append(diag.DiagnosticReport(f"tangency[{args.grid}x{args.grid}]", worst, 1e-10))
    worst, res, traj = diag.manifold_invariance_run(args.theta, args.phi, args.h, args.steps, cfg, full_output=True)
    reports.append(diag.DiagnosticReport("invariance", worst, 1e-8, f"{args.steps} steps"))
    H = point_vortices(np.ones(4))
    energies = [H.value(s) for s in traj.states]
    header, rows = trajectory_table(traj.times, traj.states, {"H": energies, "chart_residual": res})
    write_table(args.out, header, rows)
    if args.report:
        write_text(args.report, "".join(r.to_line() + "\n" for r in reports))
    return EXIT_OK


def nambu_from_name(name: str, w0, seed: int) -> NambuSystem:
    if name == "lagrange":
        return lagrange_system(w0)
    catalog = dict(casimir_catalog())
    if name not in catalog:
        raise InvalidInput(f"unknown Nambu system {name!r}; known: {', '.join(NAMBU_SYSTEMS)}")
    rng = np.random.default_rng(seed)
    B = rng.standard_normal((3, 3))
    A = B.T @ B + np.eye(3)
    A /= np.linalg.norm(A, 2)  # unit spectral norm keeps h = 0.05 well resolved

    def H(w):
        return 0.5 * float(w @ A @ w)

    def grad_H(w):
        return A @ w

    sys_ = NambuSystem.on_level_of(2.0 * catalog[name], H, grad_H, w0, name=name)
    return sys_


def cmd_nambu(args) -> int:
    seed = resolve_seed(args.seed)
    _check_steps(args.steps)
    cfg = make_cfg(args, args.h)
    w0 = np.array(_floats(args.w0))
    if w0.shape != (3,):
        raise InvalidInput("Nambu systems need three initial values")
    try:
        system = nambu_from_name(args.system, w0, seed)
    except ValueError as exc:
        raise InvalidInput(str(exc)) from None
    traj = integrate_nambu(system, w0, cfg, args.steps, args.t0)
    C = [system.casimir(s[0]) for s in traj.states]
    header, rows = trajectory_table(traj.times, traj.states, {"C": C, "H": traj.energies})
    write_table(args.out, header, rows)
    return EXIT_OK


# Parser ----------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _solver_args(p):
    p.add_argument("--tol", type=float, default=1e-13, help="solver residual tolerance")
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--no-newton", action="store_true", help="disable the Newton fallback")


def _system_args(p, h=True):
    p.add_argument("--system", choices=None, help="system name (see list-systems)")
    p.add_argument("--preset", help="named preset: " + ", ".join(PRESETS))
    p.add_argument("--param", action="append", metavar="KEY=V[,V...]", help="system parameter")
    p.add_argument("--w0", help="initial state, comma separated, 3 values per sphere")
    p.add_argument("--seed", type=int, default=None, help="seed for random initial data")
    p.add_argument("--t0", type=float, default=0.0)
    if h:
        p.add_argument("--h", type=float, required=True)
    _solver_args(p)
    p.add_argument("--out", default="-", help="output file (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="spinstep", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    p = sub.add_parser("list-systems", help="list systems, parameters and presets")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_list_systems)

    p = sub.add_parser("integrate", help="integrate a spin system and write its trajectory")
    _system_args(p)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--method", choices=METHODS, default="spherical")
    p.set_defaults(func=cmd_integrate)

    p = sub.add_parser("compare", help="max error per method against an ODE reference")
    _system_args(p, h=False)
    p.add_argument("--T", type=float, default=10.0)
    p.add_argument("--h-list", default="0.03125,0.015625,0.0078125,0.00390625,0.001953125")
    p.add_argument("--methods", default="spherical,classical")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("convergence", help="error against step size and fitted order")
    _system_args(p, h=False)
    p.add_argument("--T", type=float, default=10.0)
    p.add_argument("--h-list", default="0.03125,0.015625,0.0078125,0.00390625,0.001953125")
    p.add_argument("--methods", default="spherical")
    p.add_argument("--reference", choices=["ode", "self"], default="ode")
    p.add_argument("--report", help="write slope report lines here")
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("poincare", help="stroboscopic section of a periodically forced system")
    _system_args(p, h=False)
    p.add_argument("--epsilon", type=float, default=None, help="forcing amplitude")
    p.add_argument("--N", type=int, default=20, help="steps per period")
    p.add_argument("--periods", type=int, default=500)
    p.add_argument("--period", type=float, default=2 * np.pi)
    p.set_defaults(func=cmd_poincare)

    p = sub.add_parser("diagnose", help="run structural checks and write a report")
    _system_args(p)
    p.add_argument("--check", default="all",
                   choices=["all", "poisson", "self-adjoint", "equivariance", "extension",
                            "conservation", "gradient"])
    p.add_argument("--method", choices=METHODS, default="spherical")
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--delta", type=float, default=1e-5)
    p.add_argument("--steps", type=int, default=1000, help="steps for the conservation check")
    p.add_argument("--conservation-tol", type=float, default=1e-12)
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("vortex-manifold", help="four-vortex invariant manifold checks")
    p.add_argument("--theta", type=float, default=1.0)
    p.add_argument("--phi", type=float, default=0.7)
    p.add_argument("--h", type=float, default=0.1)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--grid", type=int, default=20, help="tangency grid size (0 to skip)")
    p.add_argument("--report", help="write report lines here")
    _solver_args(p)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_vortex_manifold)

    p = sub.add_parser("nambu", help="integrate a Nambu system")
    p.add_argument("--system", default="lagrange", help=", ".join(NAMBU_SYSTEMS))
    p.add_argument("--w0", default="2,1,1")
    p.add_argument("--h", type=float, default=0.05)
    p.add_argument("--steps", type=int, default=10,
                   help="the lagrange solution from 2,1,1 blows up near t = 0.76")
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=None, help="seed for the random Hamiltonian")
    _solver_args(p)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_nambu)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InvalidInput as exc:
        print(f"spinstep: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (NoConvergenceError, DomainError) as exc:
        msg, k = str(exc), getattr(exc, "step_index", None)
        if k is not None and not msg.startswith(f"step {k}:"):
            msg = f"step {k}: {msg}"
        print(f"spinstep: numerical failure: {msg}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
