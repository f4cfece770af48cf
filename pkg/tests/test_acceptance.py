"""Acceptance criteria, one test per criterion.

Each test records a ``PASS``/``FAIL`` line (printed in the pytest terminal
summary, or directly when this file is run as a script) and then asserts.
Runtime bounds are part of each criterion.
"""

from __future__ import annotations

import time

import numpy as np
import pytest

from spinstep import diagnostics as diag
from spinstep.cli import main as cli_main
from spinstep.errors import DomainError, NoConvergenceError, SpinStepError
from spinstep.integrators import StepConfig, integrate
from spinstep.nambu import NambuSystem, casimir_catalog, integrate_nambu, lagrange_system
from spinstep.sphere import random_rotations, random_spin_state, spin_state
from spinstep.systems import (
    closed_curve_state,
    forced_rigid_body,
    free_rigid_body,
    heisenberg_chain,
    irreversible_rigid_body,
    point_vortices,
)

RESULTS: dict[int, str] = {}

RB_W0 = np.array([[np.cos(1.1), 0.0, np.sin(1.1)]])
IRREV_W0 = spin_state([[0.0, 0.7248, -0.6889]])
H_LIST = [2.0**-k for k in range(5, 10)]


def record(num: int, title: str, ok: bool, detail: str, runtime: float, limit: float) -> bool:
    ok_time = runtime < limit
    passed = bool(ok and ok_time)
    RESULTS[num] = (
        f"criterion {num:2d} {'PASS' if passed else 'FAIL'}  {title}: {detail}; "
        f"runtime {runtime:.2f} s (limit {limit:g} s)"
    )
    return passed


def timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


# 1 ---------------------------------------------------------------------------

def criterion_1():
    def run():
        cfg = StepConfig(0.1, solver_tol=1e-14)
        return integrate(free_rigid_body((1.0, 2.0, 4.0)), RB_W0, 0.0, cfg, 1000)

    traj, rt = timed(run)
    dH = float(np.max(np.abs(traj.energies - traj.energies[0])))
    dr = diag.radius_deviation(traj, 1.0)
    ok = dH <= 1e-12 and dr <= 1e-12
    return record(1, "exact invariants, free rigid body", ok,
                  f"max|dH| = {dH:.2e}, max||w|-1| = {dr:.2e} (tol 1e-12)", rt, 1.0)


# 2 ---------------------------------------------------------------------------

def criterion_2():
    def run():
        H = free_rigid_body()
        return {
            m: diag.fitted_slope(H_LIST, diag.convergence_errors(H, RB_W0, 10.0, H_LIST, m))
            for m in ("spherical", "classical", "extended")
        }

    slopes, rt = timed(run)
    ok = all(1.9 <= s <= 2.1 for s in slopes.values())
    detail = ", ".join(f"{m} {s:.4f}" for m, s in slopes.items()) + " (need [1.9, 2.1])"
    return record(2, "order of accuracy", ok, detail, rt, 10.0)


# 3 ---------------------------------------------------------------------------

def criterion_3():
    def run():
        H = free_rigid_body()
        return [diag.compare_methods(H, RB_W0, 10.0, h, ("spherical", "classical")) for h in H_LIST]

    errs, rt = timed(run)
    ratios = [e["classical"] / e["spherical"] for e in errs]
    ok = all(r >= 5.0 for r in ratios)
    detail = "classical/spherical error ratios " + ", ".join(f"{r:.3f}" for r in ratios) + " (need >= 5)"
    return record(3, "error-ratio reproduction", ok, detail, rt, 10.0)


# 4 ---------------------------------------------------------------------------

def criterion_4():
    cases = [(free_rigid_body(), RB_W0), (irreversible_rigid_body(sigma=2.0 / 3.0), IRREV_W0)]

    def run():
        out = []
        for H, w0 in cases:
            for h in (0.1, 0.5):
                cfg = StepConfig(h)
                coarse = diag.check_poisson_preservation(H, w0, cfg, trials=50, delta=1e-5)
                fine = diag.check_poisson_preservation(H, w0, cfg, trials=50, delta=1e-6)
                out.append((H.name, h, coarse.max_violation, fine.max_violation))
        return out

    rows, rt = timed(run)
    ok = all(c <= 1e-6 and f < c for _, _, c, f in rows)
    detail = "; ".join(f"{n} h={h}: {c:.1e} -> {f:.1e}" for n, h, c, f in rows)
    return record(4, "Poisson bivector preservation (delta 1e-5 -> 1e-6)", ok, detail, rt, 5.0)


# 5 ---------------------------------------------------------------------------

def criterion_5():
    H = irreversible_rigid_body(sigma=2.0 / 3.0)

    def run():
        cfg = StepConfig(0.5)
        return {m: integrate(H, IRREV_W0, 0.0, cfg, 2000, m).energies for m in ("spherical", "classical")}

    energies, rt = timed(run)
    dev = {m: np.abs(e - e[0]) for m, e in energies.items()}
    sph, cls = float(dev["spherical"].max()), float(dev["classical"].max())
    # Bounded: the second half of the run does not exceed twice the first half.
    bounded = dev["spherical"][1000:].max() <= 2.0 * dev["spherical"][:1001].max()
    ok = bounded and 10.0 * sph <= cls
    detail = (f"spherical max|dH| = {sph:.3e} (bounded: {bounded}), classical max|dH| = {cls:.3e}, "
              f"ratio {cls / sph:.2f} (need >= 10)")
    return record(5, "energy-drift contrast", ok, detail, rt, 2.0)


# 6 ---------------------------------------------------------------------------

def criterion_6():
    def run():
        errs = {}
        for lh in (0.1, 0.5, 1.0, 1.9):
            errs[lh] = abs(diag.harmonic_rotation_angle(lh) - diag.expected_harmonic_angle(lh))
        try:
            angle = diag.harmonic_rotation_angle(2.5)
            failure = f"angle {angle:.3f} returned"
            rejected = False
        except (NoConvergenceError, DomainError) as exc:
            failure = type(exc).__name__
            rejected = True
        return errs, rejected, failure

    (errs, rejected, failure), rt = timed(run)
    ok = all(e <= 1e-10 for e in errs.values()) and rejected
    detail = ", ".join(f"lh={k}: {v:.1e}" for k, v in errs.items()) + f"; lh=2.5: {failure}"
    return record(6, "linear stability", ok, detail, rt, 1.0)


# 7 ---------------------------------------------------------------------------

def _random_system(k, rng):
    kind = k % 5
    if kind == 0:
        return free_rigid_body(rng.uniform(0.5, 5.0, 3)), 0.0
    if kind == 1:
        return irreversible_rigid_body(rng.uniform(0.5, 5.0, 3), rng.uniform(-0.9, 0.9)), 0.0
    if kind == 2:
        return forced_rigid_body(rng.uniform(0.5, 5.0, 3), rng.uniform(0.0, 0.2)), rng.uniform(0, 10)
    if kind == 3:
        return point_vortices(rng.uniform(-2.0, 2.0, 3)), 0.0
    return heisenberg_chain(int(rng.integers(2, 6))), 0.0


def _separated_pair(H, rng, min_chord2=0.5):
    """State and rotation tuple; for vortices both ``w`` and ``g w`` keep pairs apart."""
    while True:
        w = random_spin_state(H.n, rng)
        g = random_rotations(H.n, rng)
        if H.name != "vortices":
            return w, g
        gw = np.einsum("nij,nj->ni", g, w)
        iu = np.triu_indices(H.n, 1)
        if min((2 - 2 * (x @ x.T))[iu].min() for x in (w, gw)) >= min_chord2:
            return w, g


def criterion_7():
    def run():
        rng = np.random.default_rng(2024)
        worst = {"self-adjoint": 0.0, "equivariance": 0.0, "extension": 0.0}
        tol = None
        for k in range(50):
            H, t = _random_system(k, rng)
            w, g = _separated_pair(H, rng)
            cfg = StepConfig(rng.uniform(0.01, 0.2))
            tol = 10 * cfg.solver_tol
            reps = {
                "self-adjoint": diag.check_self_adjoint(H, w, cfg, t),
                "equivariance": diag.check_equivariance(H, w, g, cfg, t),
                "extension": diag.check_extension_independence(H, w, rng.uniform(-3, 3, H.n), cfg, t),
            }
            for name, r in reps.items():
                worst[name] = max(worst[name], r.max_violation)
        return worst, tol

    (worst, tol), rt = timed(run)
    ok = all(v <= tol for v in worst.values())
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + f" over 50 systems (tol {tol:.0e})"
    return record(7, "self-adjointness, equivariance, extension independence", ok, detail, rt, 5.0)


# 8 ---------------------------------------------------------------------------

def criterion_8():
    def run():
        rng = np.random.default_rng(0)
        H = heisenberg_chain(100)
        w0 = closed_curve_state(100, rng)
        return integrate(H, w0, 0.0, StepConfig(0.05), 2000)

    traj, rt = timed(run)
    dH = float(np.max(np.abs(traj.energies - traj.energies[0])))
    S = traj.states.sum(axis=1)
    dS = float(np.max(np.abs(S - S[0])))
    dr = diag.radius_deviation(traj, 1.0)
    ok = dH <= 1e-8 and dS <= 1e-10 and dr <= 1e-12
    detail = f"energy {dH:.1e} (1e-8), total spin {dS:.1e} (1e-10), radii {dr:.1e} (1e-12)"
    return record(8, "Heisenberg chain n=100", ok, detail, rt, 30.0)


# 9 ---------------------------------------------------------------------------

def criterion_9():
    def run():
        th = (np.arange(20) + 0.5) * np.pi / 20
        ph = (np.arange(20) + 0.5) * 2 * np.pi / 20
        worst, valid = 0.0, 0
        for a in th:
            for b in ph:
                try:
                    worst = max(worst, diag.manifold_tangency_residual(a, b))
                    valid += 1
                except DomainError:
                    continue
        inv = diag.manifold_invariance_run(1.0, 0.7, 0.1, 1000)
        return worst, valid, inv

    (tang, valid, inv), rt = timed(run)
    ok = tang <= 1e-10 and inv <= 1e-8
    detail = f"tangency {tang:.1e} on {valid} grid points (1e-10), chart residual {inv:.1e} (1e-8)"
    return record(9, "vortex invariant manifold", ok, detail, rt, 10.0)


# 10 --------------------------------------------------------------------------

def _per_step(values):
    return float(np.max(np.abs(np.diff(values)))) if len(values) > 1 else 0.0


def criterion_10():
    def run():
        sys_ = lagrange_system((2.0, 1.0, 1.0))
        try:
            traj = integrate_nambu(sys_, [2.0, 1.0, 1.0], StepConfig(0.05), 1000)
            C = [sys_.casimir(s[0]) for s in traj.states]
            lag = (True, _per_step(C), _per_step(traj.energies), "1000 steps")
        except SpinStepError as exc:
            # Per-step preservation over the steps that were computed.
            part = integrate_nambu(sys_, [2.0, 1.0, 1.0], StepConfig(0.05), exc.step_index)
            C = [sys_.casimir(s[0]) for s in part.states]
            lag = (False, _per_step(C), _per_step(part.energies),
                   f"{type(exc).__name__} at step {exc.step_index}, last |w| = "
                   f"{np.linalg.norm(part.final):.3g}")
        rng = np.random.default_rng(10)
        cat = {}
        for name, M in casimir_catalog():
            B = rng.standard_normal((3, 3))
            A = B.T @ B + np.eye(3)
            A /= np.linalg.norm(A, 2)
            w0 = rng.standard_normal(3)
            nsys = NambuSystem.on_level_of(2 * M, lambda w, A=A: 0.5 * w @ A @ w, lambda w, A=A: A @ w, w0, name)
            try:
                tr = integrate_nambu(nsys, w0, StepConfig(0.05), 1000)
                cat[name] = _per_step([nsys.casimir(s[0]) for s in tr.states])
            except SpinStepError:
                cat[name] = float("inf")
        return lag, cat

    ((completed, dC, dH, note), cat), rt = timed(run)
    ok = completed and dC <= 1e-12 and dH <= 1e-12 and all(v <= 1e-12 for v in cat.values())
    detail = (f"lagrange: {note}, per-step |dC| {dC:.1e}, |dH| {dH:.1e}; catalog per-step |dC| "
              + ", ".join(f"{k} {v:.1e}" for k, v in cat.items()))
    return record(10, "Nambu systems", ok, detail, rt, 2.0)


# 11 --------------------------------------------------------------------------

def criterion_11(tmp_dir):
    def run():
        same, rows = [], []
        for eps in (0.01, 0.07):
            blobs = []
            for rep in range(2):
                path = tmp_dir / f"poincare_{eps}_{rep}.csv"
                code = cli_main(["poincare", "--epsilon", str(eps), "--N", "20", "--periods", "500",
                                 "--seed", "11", "--out", str(path)])
                if code != 0:
                    return False, [], code
                blobs.append(path.read_bytes())
            same.append(blobs[0] == blobs[1])
            rows.append(blobs[0].count(b"\n") - 1)
        return all(same), rows, 0

    (identical, rows, code), rt = timed(run)
    ok = code == 0 and identical and rows == [501, 501]
    detail = f"byte-identical reruns: {identical}, data rows {rows} (need 501 each), exit {code}"
    return record(11, "forced rigid body Poincare determinism", ok, detail, rt, 30.0)


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9, criterion_10]


@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{k}" for k in range(1, 11)])
def test_criterion(criterion):
    passed = criterion()
    print(RESULTS[CRITERIA.index(criterion) + 1])
    assert passed, RESULTS[CRITERIA.index(criterion) + 1]


def test_criterion_11(tmp_path, capsys):
    passed = criterion_11(tmp_path)
    capsys.readouterr()  # drop the CLI's own output
    print(RESULTS[11])
    assert passed, RESULTS[11]


if __name__ == "__main__":
    import tempfile
    from pathlib import Path

    for crit in CRITERIA:
        crit()
        print(RESULTS[CRITERIA.index(crit) + 1], flush=True)
    with tempfile.TemporaryDirectory() as d:
        criterion_11(Path(d))
    print(RESULTS[11])
