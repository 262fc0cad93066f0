"""Compare the numba kernels with their pure-numpy fallbacks.

Times the Jacobi eigensolver and the Monte-Carlo trajectory chunk on both
backends, checks that they agree, and prints a small table.

    python3 benchmarks/bench_backends.py [--repeat 5] [--trajectories 20000]
"""
import argparse
import time

import numpy as np

from qzeno import _kernels, model
from qzeno.linalg import mat_exp_i_hermitian


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def bench_jacobi(repeat, batch=200):
    rng = np.random.default_rng(0)
    mats = []
    for _ in range(batch):
        x = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
        mats.append(np.ascontiguousarray((x + x.conj().T) / 2))

    def run(fn):
        return [fn(a, _kernels.JACOBI_TOL, _kernels.JACOBI_MAX_SWEEPS)[0] for a in mats]

    _kernels.jacobi_eigh_nb(mats[0], 1e-14, 100)  # compile
    t_py, w_py = best_of(lambda: run(_kernels.jacobi_eigh_py), repeat)
    t_nb, w_nb = best_of(lambda: run(_kernels.jacobi_eigh_nb), repeat)
    err = max(float(np.max(np.abs(a - b))) for a, b in zip(w_py, w_nb))
    return f"jacobi 8x8 x{batch}", t_py, t_nb, f"max |dw| {err:.1e}"


def bench_mc(repeat, n_traj, n_steps=500):
    u = mat_exp_i_hermitian(model.hamiltonian(), 0.7)
    p = model.survival_projector()
    psi0 = model.basis_state("01")
    seed = np.uint64(20240611)
    _kernels.mc_chunk_nb(u, p, psi0, seed, 0, 4, 4)  # compile
    t_np, (c_np, f_np) = best_of(lambda: _kernels.mc_chunk_np(u, p, psi0, seed, 0, n_traj, n_steps), repeat)
    t_nb, (c_nb, f_nb) = best_of(lambda: _kernels.mc_chunk_nb(u, p, psi0, seed, 0, n_traj, n_steps), repeat)
    same = np.array_equal(c_np, c_nb)
    err = float(np.max(np.abs(f_np - f_nb)))
    return f"mc {n_traj} traj x {n_steps} steps", t_np, t_nb, f"clicks identical={same}, max |dpsi| {err:.1e}"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--trajectories", type=int, default=20_000)
    args = ap.parse_args()
    if not _kernels.HAS_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    rows = [bench_jacobi(args.repeat), bench_mc(args.repeat, args.trajectories)]
    print(f"{'kernel':<28}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}  agreement")
    for name, t_ref, t_jit, note in rows:
        print(f"{name:<28}{t_ref:>12.4f}{t_jit:>12.4f}{t_ref / t_jit:>9.1f}x  {note}")


if __name__ == "__main__":
    main()
