"""Born-rule unravelling of the click / no-click measurement record."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels, model
from .linalg import as_state
from .zeno import InterruptedEvolution, photon_atom_evolution, survival_probability

SURVIVOR_CAP = 1000
_MIN_CHUNK = 2048


@dataclass(frozen=True)
class CounterStream:
    """Random substream for one trajectory, keyed by (seed, index)."""

    seed: int
    index: int

    def uniform(self, step: int) -> float:
        return float(_kernels.uniforms_np(self.seed, [self.index], step)[0])


@dataclass(frozen=True)
class McConfig:
    seed: int
    n_trajectories: int
    n_steps: int
    delta_t: float
    initial_state: np.ndarray
    hamiltonian: np.ndarray | None = None
    survival_projector: np.ndarray | None = None

    def __post_init__(self):
        if self.n_trajectories < 1:
            raise ValueError("n_trajectories must be >= 1")
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        object.__setattr__(self, "initial_state", as_state(self.initial_state, "initial_state"))

    def evolution(self) -> InterruptedEvolution:
        if self.hamiltonian is None and self.survival_projector is None:
            return photon_atom_evolution(self.delta_t)
        m = model.build_model()
        h = m.hamiltonian if self.hamiltonian is None else self.hamiltonian
        p = m.survival_projector if self.survival_projector is None else self.survival_projector
        return InterruptedEvolution(h, p, self.delta_t)


@dataclass
class McResult:
    no_click_fraction: float
    click_step_histogram: np.ndarray  # index k = first click at step k, k = 0..n_steps
    final_states_sample: list[np.ndarray]
    standard_error: float
    n_trajectories: int
    n_survivors: int
    mean_survivor_fidelity: float  # |<Psi+|psi>|^2 averaged over survivors, nan if none
    expected_probability: float = field(default=float("nan"))

    @property
    def z_score(self) -> float:
        if self.standard_error == 0.0:
            return 0.0 if self.no_click_fraction == self.expected_probability else math.inf
        return (self.no_click_fraction - self.expected_probability) / self.standard_error


def sample_trajectory(ev: InterruptedEvolution, psi0, n_steps: int, rng_stream: CounterStream):
    """One stochastic trajectory.

    Returns ``(clicked_at, final_state)`` where ``clicked_at`` is None for a
    trajectory that never clicked. ``final_state`` is the last conditional
    state, or None after a click.
    """
    psi0 = as_state(psi0, "psi0")
    clicks, finals = _kernels.mc_chunk(
        ev.propagator, ev.survival_projector, psi0, rng_stream.seed, rng_stream.index, 1, n_steps
    )
    if clicks[0] >= 0:
        return int(clicks[0]), None
    return None, finals[0].copy()


def resolve_workers(workers: int | None = None) -> int:
    if workers is None:
        env = os.environ.get("ZENO_THREADS")
        if env:
            workers = int(env)
        else:
            workers = os.cpu_count() or 1
    return max(1, int(workers))


def _chunks(total: int, workers: int) -> list[tuple[int, int]]:
    size = max(_MIN_CHUNK, -(-total // workers))
    return [(s, min(size, total - s)) for s in range(0, total, size)]


def run_ensemble(config: McConfig, workers: int | None = None) -> McResult:
    """Simulate ``config.n_trajectories`` independent records.

    Trajectory k draws only from the stream (seed, k) and results are
    assembled in trajectory order, so the output is bit-identical for any
    worker count.
    """
    ev = config.evolution()
    u, p, psi0 = ev.propagator, ev.survival_projector, config.initial_state
    n, steps = config.n_trajectories, config.n_steps
    workers = resolve_workers(workers)
    chunks = _chunks(n, workers)

    def run(chunk):
        start, count = chunk
        return _kernels.mc_chunk(u, p, psi0, config.seed, start, count, steps)

    if workers == 1 or len(chunks) == 1:
        parts = [run(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, chunks))
    clicks = np.concatenate([c for c, _ in parts])
    finals = np.concatenate([f for _, f in parts])

    survivors = clicks < 0
    n_surv = int(survivors.sum())
    hist = np.bincount(clicks[~survivors], minlength=steps + 1).astype(np.int64)
    frac = n_surv / n
    se = math.sqrt(frac * (1.0 - frac) / n)

    surv_states = finals[survivors]
    plus = model.bell_state(+1)
    if n_surv:
        fids = np.abs(surv_states @ plus.conj()) ** 2
        mean_fid = math.fsum(fids.tolist()) / n_surv
    else:
        mean_fid = float("nan")
    sample = [s.copy() for s in surv_states[:SURVIVOR_CAP]]

    expected = survival_probability(ev, psi0, steps)
    return McResult(
        no_click_fraction=frac,
        click_step_histogram=hist,
        final_states_sample=sample,
        standard_error=se,
        n_trajectories=n,
        n_survivors=n_surv,
        mean_survivor_fidelity=mean_fid,
        expected_probability=expected,
    )
