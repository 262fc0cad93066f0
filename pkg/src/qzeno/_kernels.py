"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The numba path is used when numba imports cleanly and ``ZENO_DISABLE_NUMBA``
is unset (or ``0``). Both implementations are always importable under their
explicit names (``*_py`` / ``*_np`` and ``*_nb``) so the benchmark and the
parity tests can drive each one directly.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAS_NUMBA = False


def _flag_disabled(value: str | None) -> bool:
    return value is not None and value.strip().lower() in ("1", "true", "yes", "on")


USE_NUMBA = HAS_NUMBA and not _flag_disabled(os.environ.get("ZENO_DISABLE_NUMBA"))

JACOBI_TOL = 1e-14
JACOBI_MAX_SWEEPS = 100


# --------------------------------------------------------------------------
# Cyclic complex Jacobi eigensolver
# --------------------------------------------------------------------------

def jacobi_eigh_py(a, tol, max_sweeps):
    """Cyclic Jacobi diagonalisation of a complex Hermitian matrix.

    Each pivot (p, q) is removed by a unitary that first rotates the phase of
    ``a[p, q]`` onto the real axis and then applies a real Givens rotation.
    Sweeps stop once the off-diagonal Frobenius mass drops below
    ``tol * max(1, ||a||_F)``.

    Returns ``(eigenvalues, eigenvectors, sweeps)`` with eigenvalues ascending
    and eigenvectors as columns. ``sweeps == max_sweeps + 1`` signals that
    the tolerance was never reached.
    """
    n = a.shape[0]
    a = a.copy()
    v = np.eye(n, dtype=np.complex128)

    frob = 0.0
    for i in range(n):
        for j in range(n):
            frob += a[i, j].real ** 2 + a[i, j].imag ** 2
    scale = max(1.0, math.sqrt(frob))

    sweeps = 0
    converged = False
    while sweeps <= max_sweeps:
        off = 0.0
        for p in range(n):
            for q in range(p + 1, n):
                off += a[p, q].real ** 2 + a[p, q].imag ** 2
        if math.sqrt(2.0 * off) < tol * scale:
            converged = True
            break
        sweeps += 1
        for p in range(n):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r == 0.0:
                    continue
                ph = apq / r
                phc = ph.conjugate()
                app = a[p, p].real
                aqq = a[q, q].real
                angle = 0.5 * math.atan2(2.0 * r, aqq - app)
                c = math.cos(angle)
                s = math.sin(angle)
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * phc * akq
                    a[k, q] = s * akp + c * phc * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * ph * aqk
                    a[q, k] = s * apk + c * ph * aqk
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * phc * vkq
                    v[k, q] = s * vkp + c * phc * vkq
    if not converged:
        sweeps = max_sweeps + 1

    w = np.empty(n, dtype=np.float64)
    for i in range(n):
        w[i] = a[i, i].real
    order = np.argsort(w)
    w_sorted = np.empty(n, dtype=np.float64)
    v_sorted = np.empty((n, n), dtype=np.complex128)
    for j in range(n):
        w_sorted[j] = w[order[j]]
        for i in range(n):
            v_sorted[i, j] = v[i, order[j]]
    return w_sorted, v_sorted, sweeps


# --------------------------------------------------------------------------
# Counter-based random numbers
#
# u(seed, trajectory, step) is a pure function of its three integer inputs
# (splitmix64 finaliser applied to a keyed counter), so any partition of the
# trajectories over workers draws exactly the same numbers.
# --------------------------------------------------------------------------

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_TRAJ_SALT = np.uint64(0xD1B54A32D192ED03)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_ONE = np.uint64(1)
_INV_2_53 = 1.0 / 9007199254740992.0
MASK64 = (1 << 64) - 1


def _mix64(z):
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


def _stream_key(seed, traj):
    base = _mix64(seed + _GOLDEN)
    return _mix64(base ^ _mix64(traj * _TRAJ_SALT + _GOLDEN))


def _uniform(key, step):
    z = _mix64(key + (step + _ONE) * _GOLDEN)
    return (z >> _S11) * _INV_2_53


def uniforms_np(seed: int, traj, step: int) -> np.ndarray:
    """Vectorised draw of u(seed, traj, step) for an array of trajectory ids."""
    traj = np.asarray(traj, dtype=np.uint64)
    with np.errstate(over="ignore"):
        key = _stream_key(np.uint64(seed & MASK64), traj)
        return _uniform(key, np.uint64(step)).astype(np.float64)


# --------------------------------------------------------------------------
# Monte-Carlo unravelling of the no-click record
#
# Convention: the survival check happens once before any evolution (step 0)
# and then after each propagation by ``u`` (steps 1..n_steps). A trajectory
# survives step k when u(seed, traj, k) < q_k, q_k being the Born weight of
# the survival projector.
# --------------------------------------------------------------------------

def mc_chunk_np(u, proj, psi0, seed, start, count, n_steps):
    """Vectorised (over trajectories) numpy implementation.

    Matrix-vector products are unrolled into elementwise ufunc calls in a
    fixed summation order so every row is computed independently of the
    batch it sits in.
    """
    d = psi0.shape[0]
    clicks = np.full(count, -1, dtype=np.int64)
    finals = np.zeros((count, d), dtype=np.complex128)
    ids = np.arange(start, start + count, dtype=np.uint64)

    phi0 = np.zeros(d, dtype=np.complex128)
    for i in range(d):
        acc = proj[i, 0] * psi0[0]
        for j in range(1, d):
            acc = acc + proj[i, j] * psi0[j]
        phi0[i] = acc
    q0 = 0.0
    for i in range(d):
        q0 += phi0[i].real ** 2 + phi0[i].imag ** 2

    draws = uniforms_np(seed, ids, 0)
    alive = draws < q0
    clicks[~alive] = 0
    idx = np.nonzero(alive)[0]
    if idx.size == 0:
        return clicks, finals
    norm0 = math.sqrt(q0)
    states = np.empty((idx.size, d), dtype=np.complex128)
    for i in range(d):
        states[:, i] = phi0[i] / norm0

    for step in range(1, n_steps + 1):
        if idx.size == 0:
            break
        evolved = [None] * d
        for i in range(d):
            acc = u[i, 0] * states[:, 0]
            for j in range(1, d):
                acc = acc + u[i, j] * states[:, j]
            evolved[i] = acc
        projected = [None] * d
        q = np.zeros(idx.size, dtype=np.float64)
        for i in range(d):
            acc = proj[i, 0] * evolved[0]
            for j in range(1, d):
                acc = acc + proj[i, j] * evolved[j]
            projected[i] = acc
            q = q + (acc.real ** 2 + acc.imag ** 2)
        draws = uniforms_np(seed, ids[idx], step)
        keep = draws < q
        clicks[idx[~keep]] = step
        idx = idx[keep]
        norm = np.sqrt(q[keep])
        states = np.empty((idx.size, d), dtype=np.complex128)
        for i in range(d):
            states[:, i] = projected[i][keep] / norm

    finals[idx] = states
    return clicks, finals


def _mc_chunk_loop(u, proj, psi0, seed, start, count, n_steps):
    d = psi0.shape[0]
    clicks = np.full(count, -1, dtype=np.int64)
    finals = np.zeros((count, d), dtype=np.complex128)
    seed64 = seed

    phi0 = np.zeros(d, dtype=np.complex128)
    for i in range(d):
        acc = proj[i, 0] * psi0[0]
        for j in range(1, d):
            acc = acc + proj[i, j] * psi0[j]
        phi0[i] = acc
    q0 = 0.0
    for i in range(d):
        q0 += phi0[i].real ** 2 + phi0[i].imag ** 2
    norm0 = math.sqrt(q0)

    state = np.empty(d, dtype=np.complex128)
    evolved = np.empty(d, dtype=np.complex128)
    projected = np.empty(d, dtype=np.complex128)
    for t in range(count):
        key = _stream_key_nb(seed64, np.uint64(start + t))
        if not _uniform_nb(key, np.uint64(0)) < q0:
            clicks[t] = 0
            continue
        for i in range(d):
            state[i] = phi0[i] / norm0
        for step in range(1, n_steps + 1):
            for i in range(d):
                acc = u[i, 0] * state[0]
                for j in range(1, d):
                    acc = acc + u[i, j] * state[j]
                evolved[i] = acc
            q = 0.0
            for i in range(d):
                acc = proj[i, 0] * evolved[0]
                for j in range(1, d):
                    acc = acc + proj[i, j] * evolved[j]
                projected[i] = acc
                q = q + (acc.real ** 2 + acc.imag ** 2)
            if _uniform_nb(key, np.uint64(step)) < q:
                norm = math.sqrt(q)
                for i in range(d):
                    state[i] = projected[i] / norm
            else:
                clicks[t] = step
                break
        if clicks[t] < 0:
            for i in range(d):
                finals[t, i] = state[i]
    return clicks, finals


if HAS_NUMBA:
    _mix64_nb = numba.njit(inline="always")(_mix64)

    @numba.njit(inline="always")
    def _stream_key_nb(seed, traj):
        base = _mix64_nb(seed + _GOLDEN)
        return _mix64_nb(base ^ _mix64_nb(traj * _TRAJ_SALT + _GOLDEN))

    @numba.njit(inline="always")
    def _uniform_nb(key, step):
        z = _mix64_nb(key + (step + _ONE) * _GOLDEN)
        return np.float64(z >> _S11) * _INV_2_53

    @numba.njit(cache=True)
    def uniforms_nb(seed, traj, step):
        out = np.empty(traj.shape[0], dtype=np.float64)
        s = np.uint64(seed)
        for i in range(traj.shape[0]):
            out[i] = _uniform_nb(_stream_key_nb(s, np.uint64(traj[i])), np.uint64(step))
        return out

    jacobi_eigh_nb = numba.njit(cache=True)(jacobi_eigh_py)
    mc_chunk_nb = numba.njit(cache=True, nogil=True)(_mc_chunk_loop)
else:  # pragma: no cover
    jacobi_eigh_nb = None
    mc_chunk_nb = None
    uniforms_nb = None


def jacobi_eigh(a: np.ndarray, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS):
    a = np.ascontiguousarray(a, dtype=np.complex128)
    if USE_NUMBA:
        return jacobi_eigh_nb(a, tol, max_sweeps)
    return jacobi_eigh_py(a, tol, max_sweeps)


def mc_chunk(u, proj, psi0, seed, start, count, n_steps):
    """Run trajectories ``start .. start+count-1``.

    Returns ``(clicks, finals)``: first-click step per trajectory (``-1`` for
    survivors) and the final conditional state of each survivor (zero rows
    for clicked trajectories).
    """
    u = np.ascontiguousarray(u, dtype=np.complex128)
    proj = np.ascontiguousarray(proj, dtype=np.complex128)
    psi0 = np.ascontiguousarray(psi0, dtype=np.complex128)
    seed = int(seed) & MASK64
    if USE_NUMBA:
        return mc_chunk_nb(u, proj, psi0, np.uint64(seed), int(start), int(count), int(n_steps))
    return mc_chunk_np(u, proj, psi0, seed, int(start), int(count), int(n_steps))
