"""Canned experiments built on the generic engine: the Kwiat-style IFM and Δt sweeps."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import model
from .linalg import kron, mat_exp_i_hermitian
from .montecarlo import McConfig, McResult, resolve_workers, run_ensemble
from .zeno import (
    DEFAULT_LIMIT_TOL,
    DEFAULT_MAX_DOUBLINGS,
    InterruptedEvolution,
    NonConvergenceError,
    asymptotic_limit,
    conditional_trajectory,
    photon_atom_evolution,
    spectral_report,
)

# --------------------------------------------------------------------------
# Kwiat-style interaction-free measurement
#
# The atom is static (H = sigma_y ⊗ I): atom |1> plays the absorbing object,
# atom |0> means no object. With the object present the photon is checked
# every Δt = T/n for being at the object; with it absent nothing is measured.
# --------------------------------------------------------------------------

PHOTON_LEFT = kron(np.diag([1.0, 0.0]), np.eye(2))


def kwiat_hamiltonian() -> np.ndarray:
    return kron(model.SIGMA_Y, model.IDENTITY_2)


@dataclass
class KwiatResult:
    n: int
    delta_t: float
    p_object_present: float          # no absorption during the whole run time T
    p_object_absent: float           # photon still in the left cavity at T, no measurement
    p_present_closed_form: float     # cos^(2n)(π / 2n)
    survival_curve: np.ndarray       # p(kΔt), k = 0..n, object present
    left_curve_absent: np.ndarray    # photon-left probability at kΔt, object absent
    mc: McResult | None = None


def kwiat_ifm(n: int = 100, n_trajectories: int = 0, seed: int = 0, workers: int | None = None) -> KwiatResult:
    if n < 1:
        raise ValueError("n must be >= 1")
    dt = model.ROUND_TRIP_T / n
    h = kwiat_hamiltonian()
    ev = InterruptedEvolution(h, model.survival_projector(), dt)

    present0 = model.basis_state("01")
    traj = conditional_trajectory(ev, present0, n)
    curve = traj.survival_probabilities()

    absent0 = model.basis_state("00")
    step = mat_exp_i_hermitian(h, dt)
    left = np.empty(n + 1)
    psi = absent0
    for k in range(n + 1):
        if k:
            psi = step @ psi
        left[k] = float(np.vdot(psi, PHOTON_LEFT @ psi).real)

    mc = None
    if n_trajectories > 0:
        cfg = McConfig(seed=seed, n_trajectories=n_trajectories, n_steps=n, delta_t=dt,
                       initial_state=present0, hamiltonian=h,
                       survival_projector=model.survival_projector())
        mc = run_ensemble(cfg, workers=workers)

    return KwiatResult(
        n=n,
        delta_t=dt,
        p_object_present=float(curve[-1]),
        p_object_absent=float(left[-1]),
        p_present_closed_form=math.cos(math.pi / (2 * n)) ** (2 * n),
        survival_curve=curve,
        left_curve_absent=left,
        mc=mc,
    )


# --------------------------------------------------------------------------
# Δt sweep of the contraction diagnostics
# --------------------------------------------------------------------------

SWEEP_COLUMNS = (
    "delta_t", "delta", "sin_phi", "det_B", "delta4", "trace_B", "predicted_trace",
    "norm_B", "doublings", "steps_to_converge", "p_inf", "status",
)


def sweep_point(delta_t: float, psi0=None, tolerance: float = DEFAULT_LIMIT_TOL,
                max_doublings: int = DEFAULT_MAX_DOUBLINGS) -> dict:
    """One sweep row. Points in the exclusion window carry status "excluded"."""
    if psi0 is None:
        psi0 = model.basis_state("00")
    nan = float("nan")
    row = dict.fromkeys(SWEEP_COLUMNS, nan)
    row["delta_t"] = float(delta_t)
    if model.is_excluded(delta_t):
        row["status"] = "excluded"
        return row
    ev = photon_atom_evolution(delta_t)
    rep = spectral_report(ev)
    row.update(
        delta=rep.delta, sin_phi=rep.sin_phi, det_B=rep.det_B, delta4=rep.predicted_det,
        trace_B=rep.trace_B, predicted_trace=rep.predicted_trace, norm_B=rep.norm_B,
    )
    try:
        lim = asymptotic_limit(ev, tolerance, max_doublings)
    except NonConvergenceError:
        row["status"] = "no-convergence"
        return row
    v = lim.matrix @ (ev.survival_projector @ psi0)
    row.update(doublings=lim.doublings, steps_to_converge=lim.steps,
               p_inf=float(np.vdot(v, v).real), status="ok")
    return row


def sweep_delta_t(lo: float, hi: float, points: int, psi0=None,
                  tolerance: float = DEFAULT_LIMIT_TOL, workers: int | None = None) -> list[dict]:
    """Rows for ``points`` evenly spaced Δt in [lo, hi], always in ascending Δt order."""
    if not (lo > 0 and hi < math.pi and lo < hi):
        raise ValueError("sweep range must satisfy 0 < lo < hi < π")
    if points < 2:
        raise ValueError("sweep needs at least 2 points")
    grid = np.linspace(lo, hi, points)
    workers = resolve_workers(workers)

    def run(dt):
        return sweep_point(float(dt), psi0, tolerance)

    if workers == 1:
        return [run(dt) for dt in grid]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, grid))
