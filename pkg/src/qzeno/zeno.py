"""Unitary evolution interrupted by an incomplete projective measurement.

The central object is the no-click step operator ``W = P exp(iHΔt) P`` for a
Hermitian ``H`` and a survival projector ``P``. Everything here is generic in
(H, P, Δt) up to dimension 8, except the closed forms tied to the
photon + atom model (``closed_form_u_lim``, ``entangled_basis_form``,
``spectral_report``), which refuse other inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from . import model
from .linalg import (
    MAX_DIM,
    LinalgError,
    as_matrix,
    as_state,
    hermitian_eig,
    is_hermitian,
    mat_exp_i_hermitian,
    mat_pow,
    numeric_rank,
    operator_norm,
)

UNDERFLOW = 1e-300
DEFAULT_LIMIT_TOL = 1e-10
DEFAULT_MAX_DOUBLINGS = 60
FIXED_POINT_TOL = 1e-10
_STRUCTURE_TOL = 1e-12


class NonConvergenceError(RuntimeError):
    """Repeated squaring did not settle; carries the last iterate."""

    def __init__(self, message: str, last_iterate: np.ndarray, doublings: int, residual: float):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.doublings = doublings
        self.residual = residual


@dataclass(frozen=True, eq=False)
class InterruptedEvolution:
    """Hamiltonian, survival projector and measurement period Δt."""

    hamiltonian: np.ndarray
    survival_projector: np.ndarray
    delta_t: float

    def __post_init__(self):
        h = as_matrix(self.hamiltonian, "hamiltonian")
        p = as_matrix(self.survival_projector, "survival_projector")
        d = h.shape[0]
        if h.shape != (d, d) or p.shape != (d, d):
            raise LinalgError(f"hamiltonian {h.shape} and projector {p.shape} must be square and equal")
        if d > MAX_DIM:
            raise LinalgError(f"dimension {d} exceeds {MAX_DIM}")
        if not is_hermitian(h):
            raise LinalgError("hamiltonian is not Hermitian")
        if not is_hermitian(p) or np.max(np.abs(p @ p - p)) > _STRUCTURE_TOL:
            raise LinalgError("survival_projector is not a Hermitian idempotent")
        rank = int(round(np.trace(p).real))
        if not 1 <= rank < d:
            raise LinalgError(f"survival_projector rank {rank} must satisfy 1 <= r < {d}")
        if not (math.isfinite(self.delta_t) and self.delta_t > 0):
            raise ValueError(f"delta_t must be positive and finite, got {self.delta_t!r}")
        object.__setattr__(self, "hamiltonian", h)
        object.__setattr__(self, "survival_projector", p)
        object.__setattr__(self, "delta_t", float(self.delta_t))

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    @cached_property
    def propagator(self) -> np.ndarray:
        return mat_exp_i_hermitian(self.hamiltonian, self.delta_t)

    @cached_property
    def step(self) -> np.ndarray:
        p = self.survival_projector
        return p @ self.propagator @ p

    def with_delta_t(self, delta_t: float) -> "InterruptedEvolution":
        return InterruptedEvolution(self.hamiltonian, self.survival_projector, delta_t)


def photon_atom_evolution(delta_t: float) -> InterruptedEvolution:
    m = model.build_model()
    return InterruptedEvolution(m.hamiltonian, m.survival_projector, delta_t)


def is_photon_atom(ev: InterruptedEvolution) -> bool:
    if ev.dim != 4:
        return False
    return bool(
        np.allclose(ev.hamiltonian, model.hamiltonian(), rtol=0.0, atol=_STRUCTURE_TOL)
        and np.allclose(ev.survival_projector, model.survival_projector(), rtol=0.0, atol=_STRUCTURE_TOL)
    )


def _require_photon_atom(ev: InterruptedEvolution, what: str) -> None:
    if not is_photon_atom(ev):
        raise ValueError(f"{what} is defined only for the photon + atom model")
    model.check_admissible(ev.delta_t)


def step_operator(ev: InterruptedEvolution) -> np.ndarray:
    """W(Δt) = P exp(iHΔt) P."""
    return ev.step.copy()


# --------------------------------------------------------------------------
# Conditional (no-click) trajectories
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TrajectoryRecord:
    step_index: int
    time: float
    conditional_state: np.ndarray | None
    survival_probability: float
    step_survival: float


@dataclass
class ConditionalTrajectory:
    records: list[TrajectoryRecord]
    status: str = "complete"  # or "underflow"

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    @property
    def final(self) -> TrajectoryRecord:
        return self.records[-1]

    def survival_probabilities(self) -> np.ndarray:
        return np.array([r.survival_probability for r in self.records])


def conditional_trajectory(ev: InterruptedEvolution, psi0, n_steps: int) -> ConditionalTrajectory:
    """Deterministic no-click record: normalised W^k psi0 and p(kΔt) = ||W^k psi0||^2.

    Step 0 applies the projector alone. The state is renormalised after every
    step and the cumulative probability is carried separately, so long runs
    keep an accurate direction. If the cumulative probability falls below
    1e-300 (or hits zero) the trajectory stops with status ``"underflow"``.
    """
    psi0 = as_state(psi0, "psi0")
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    p = ev.survival_projector
    u = ev.propagator
    records: list[TrajectoryRecord] = []

    phi = p @ psi0
    q = float(np.vdot(phi, phi).real)
    cumulative = q
    for k in range(n_steps + 1):
        if k > 0:
            phi = p @ (u @ state)
            q = float(np.vdot(phi, phi).real)
            cumulative *= q
        if q == 0.0 or cumulative < UNDERFLOW:
            records.append(TrajectoryRecord(k, k * ev.delta_t, None, cumulative, q))
            return ConditionalTrajectory(records, status="underflow")
        state = phi / math.sqrt(q)
        records.append(TrajectoryRecord(k, k * ev.delta_t, state, cumulative, q))
    return ConditionalTrajectory(records)


def survival_probability(ev: InterruptedEvolution, psi0, n: int) -> float:
    """p(nΔt) = ||W^n P psi0||^2 evaluated by repeated squaring."""
    psi0 = as_state(psi0, "psi0")
    v = mat_pow(ev.step, n) @ (ev.survival_projector @ psi0)
    return float(np.vdot(v, v).real)


def asymptotic_survival(psi0) -> float:
    """Closed-form n -> infinity no-click probability |<Psi+|psi0>|^2 (photon + atom)."""
    psi0 = as_state(psi0, "psi0")
    return float(abs(np.vdot(model.bell_state(+1), psi0)) ** 2)


# --------------------------------------------------------------------------
# Frequent-measurement (Zeno) limit
# --------------------------------------------------------------------------

def cut_hamiltonian(hamiltonian, projector) -> np.ndarray:
    p = as_matrix(projector)
    return p @ as_matrix(hamiltonian) @ p


def zeno_limit_hamiltonian(ev: InterruptedEvolution) -> np.ndarray:
    """H_cut = P H P."""
    return cut_hamiltonian(ev.hamiltonian, ev.survival_projector)


def zeno_limit_unitary(ev: InterruptedEvolution, t: float) -> np.ndarray:
    """exp(i P H P t) on the full space (identity on the range of 1 - P)."""
    return mat_exp_i_hermitian(zeno_limit_hamiltonian(ev), t)


def closed_form_u_lim(t: float) -> np.ndarray:
    """Closed-form 3x3 limit unitary on span{|00>, |01>, |10>}."""
    r2 = math.sqrt(2.0)
    c = math.cos(r2 * t)
    s = math.sin(r2 * t) / r2
    ch = math.cos(r2 * t / 2.0) ** 2
    sh = math.sin(r2 * t / 2.0) ** 2
    return np.array(
        [
            [c, -s, s],
            [s, ch, sh],
            [-s, sh, ch],
        ],
        dtype=np.complex128,
    )


SURVIVAL_SUBSPACE = (0, 1, 2)


def restrict(m: np.ndarray, indices: Sequence[int] = SURVIVAL_SUBSPACE) -> np.ndarray:
    idx = np.asarray(indices)
    return np.asarray(m)[np.ix_(idx, idx)]


@dataclass
class ConvergenceStudy:
    n_values: list[int]
    deviations: list[float]
    decay_order: float
    total_time: float

    @property
    def monotone(self) -> bool:
        d = self.deviations
        return all(b < a for a, b in zip(d, d[1:]))

    def rows(self) -> list[tuple[int, float]]:
        return list(zip(self.n_values, self.deviations))


def zeno_convergence_study(hamiltonian, projector, total_time: float, n_values: Sequence[int], psi0) -> ConvergenceStudy:
    """Distance between n interrupted steps and the Zeno-limit evolution.

    deviation(n) = ||(P exp(iHT/n) P)^n psi0 - P exp(iPHPT) psi0||; the decay
    order is the negated log-log slope over the n values with a nonzero
    deviation.
    """
    if total_time <= 0:
        raise ValueError("total_time must be positive")
    ns = [int(n) for n in n_values]
    if not ns or any(n <= 0 for n in ns) or any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError("n_values must be positive and strictly ascending")
    h = as_matrix(hamiltonian)
    p = as_matrix(projector)
    psi0 = as_state(psi0, "psi0")
    target = p @ mat_exp_i_hermitian(cut_hamiltonian(h, p), total_time) @ psi0
    w_h, w_v = hermitian_eig(h)
    deviations = []
    for n in ns:
        u = (w_v * np.exp(1j * w_h * (total_time / n))) @ w_v.conj().T
        step = mat_pow(p @ u @ p, n)
        deviations.append(float(np.linalg.norm(step @ psi0 - target)))
    usable = [(n, d) for n, d in zip(ns, deviations) if d > 0.0]
    if len(usable) >= 2:
        x = np.log([n for n, _ in usable])
        y = np.log([d for _, d in usable])
        order = float(-np.polyfit(x, y, 1)[0])
    else:
        order = float("nan")
    return ConvergenceStudy(ns, deviations, order, float(total_time))


# --------------------------------------------------------------------------
# Long-time limit of the conditional dynamics
# --------------------------------------------------------------------------

@dataclass
class LimitResult:
    matrix: np.ndarray
    doublings: int
    residual: float

    @property
    def steps(self) -> int:
        return 2 ** self.doublings


def asymptotic_limit(
    ev: InterruptedEvolution,
    tolerance: float = DEFAULT_LIMIT_TOL,
    max_doublings: int = DEFAULT_MAX_DOUBLINGS,
) -> LimitResult:
    """lim W^n by repeated squaring.

    Stops at the first m = 2^k with ||W^(2m) - W^m|| < tolerance and returns
    W^(2m). Raises :class:`NonConvergenceError` after ``max_doublings``
    squarings, or earlier once rounding drift pushes an iterate out of the
    unit ball. Squaring only visits even powers, so a W with a -1 eigenvalue
    (period-2 dynamics) still "converges" here; the returned matrix is then
    the limit along even n.
    """
    m = ev.step.copy()
    residual = float("inf")
    # W is a contraction, so ||W^n||_F <= sqrt(d); beyond that only float drift grows
    bound = 2.0 * math.sqrt(ev.dim)
    for k in range(1, max_doublings + 1):
        m2 = m @ m
        if not np.linalg.norm(m2) <= bound:
            raise NonConvergenceError(
                f"W^n left the unit ball after {k} doublings (rounding drift); no limit at this tolerance",
                last_iterate=m,
                doublings=k - 1,
                residual=residual,
            )
        residual = operator_norm(m2 - m)
        if residual < tolerance:
            return LimitResult(m2, k, residual)
        m = m2
    raise NonConvergenceError(
        f"W^n did not converge within {max_doublings} doublings (last residual {residual:.3e})",
        last_iterate=m,
        doublings=max_doublings,
        residual=residual,
    )


def fixed_point_check(ev: InterruptedEvolution, tol: float = FIXED_POINT_TOL) -> list[np.ndarray]:
    """Orthonormal basis of {v : W v = v}.

    The candidates are eigenvectors of (W - I)^†(W - I) with eigenvalue below
    1e-12; each one is accepted only if ||W v - v|| < tol.
    """
    d = ev.dim
    diff = ev.step - np.eye(d)
    w, v = hermitian_eig(diff.conj().T @ diff)
    out = []
    for k in range(d):
        if w[k] < 1e-12:
            vec = v[:, k]
            if np.linalg.norm(ev.step @ vec - vec) < tol:
                out.append(vec)
    return out


# --------------------------------------------------------------------------
# Closed forms for the photon + atom model
# --------------------------------------------------------------------------

def entangled_basis_form(ev: InterruptedEvolution) -> np.ndarray:
    """Matrix of W in the Δt-adapted entangled basis, entry [j, k] = <Psi_j|W|Psi_k>."""
    _require_photon_atom(ev, "entangled_basis_form")
    b = model.entangled_basis(ev.delta_t).matrix()
    return b.conj().T @ ev.step @ b


def phi_coefficients(delta_t: float) -> tuple[float, float, float, float]:
    """(tau, sin phi, cos phi, delta) for a given admissible Δt."""
    model.check_admissible(delta_t)
    tau = math.tan(delta_t)
    t2 = tau * tau
    sin_phi = (t2 - 2.0) / (t2 + 2.0)
    cos_phi = 4.0 * tau / (math.sqrt(2.0) * (t2 + 2.0))
    delta = math.cos(delta_t) ** 2
    return tau, sin_phi, cos_phi, delta


def printed_block(delta_t: float) -> np.ndarray:
    """Closed-form central 2x2 block of W in the entangled basis."""
    _, s, c, d = phi_coefficients(delta_t)
    return np.array([[-s, -c], [d * c, -d * s]])


def contraction_matrix(delta_t: float) -> np.ndarray:
    """The 2x2 matrix A = [[sin phi, cos phi], [delta cos phi, -delta sin phi]]."""
    _, s, c, d = phi_coefficients(delta_t)
    return np.array([[s, c], [d * c, -d * s]])


@dataclass
class SpectralReport:
    delta_t: float
    tau: float
    sin_phi: float
    cos_phi: float
    delta: float
    A: np.ndarray
    B: np.ndarray
    b1: float
    b2: float
    norm_B: float
    det_B: float
    trace_B: float
    predicted_det: float
    predicted_trace: float
    central_block: np.ndarray = field(repr=False)

    def checks(self, tol: float = 1e-11) -> dict[str, bool]:
        return {
            "pythagorean": abs(self.sin_phi ** 2 + self.cos_phi ** 2 - 1.0) < 1e-12,
            "det_B": abs(self.det_B - self.predicted_det) < tol,
            "trace_B": abs(self.trace_B - self.predicted_trace) < tol,
            "norm_B_below_one": self.norm_B < 1.0,
            "eig_product": abs(self.b1 * self.b2 - self.det_B) < 1e-10,
            "eig_sum": abs(self.b1 + self.b2 - self.trace_B) < 1e-10,
        }

    @property
    def ok(self) -> bool:
        return all(self.checks().values())


def spectral_report(ev: InterruptedEvolution) -> SpectralReport:
    """Diagnostics of the contraction argument for lim W^n.

    A is built from its closed form and B = (A^T)^2 A^2. The measured det,
    trace, eigenvalues and norm of B sit next to the predicted delta^4 and
    sin^2 phi (1 + delta^4) + 2 delta^2 cos^2 phi.
    """
    _require_photon_atom(ev, "spectral_report")
    tau, s, c, d = phi_coefficients(ev.delta_t)
    a = contraction_matrix(ev.delta_t)
    a2 = a @ a
    b = a2.T @ a2
    eig, _ = hermitian_eig(b)
    det_b = float(b[0, 0] * b[1, 1] - b[0, 1] * b[1, 0])
    return SpectralReport(
        delta_t=ev.delta_t,
        tau=tau,
        sin_phi=s,
        cos_phi=c,
        delta=d,
        A=a.astype(np.complex128),
        B=b.astype(np.complex128),
        b1=float(eig[0]),
        b2=float(eig[1]),
        norm_B=operator_norm(b),
        det_B=det_b,
        trace_B=float(b[0, 0] + b[1, 1]),
        predicted_det=d ** 4,
        predicted_trace=s * s * (1.0 + d ** 4) + 2.0 * d * d * c * c,
        central_block=entangled_basis_form(ev)[1:3, 1:3],
    )


# --------------------------------------------------------------------------
# Closed-form vs computed comparison
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Discrepancy:
    kind: str
    where: str
    printed: float
    computed: float
    status: str  # "sign-flip", "mismatch" or "observed"


def _compare(kind: str, where: str, printed: float, computed: float, tol: float) -> Discrepancy | None:
    if abs(printed - computed) <= tol:
        return None
    status = "sign-flip" if abs(printed + computed) <= tol else "mismatch"
    return Discrepancy(kind, where, float(printed), float(computed), status)


def discrepancy_table(
    times: Sequence[float] | None = None,
    delta_t: float = 0.7,
    tol: float = 1e-10,
) -> list[Discrepancy]:
    """Entries where closed forms disagree with direct evaluation.

    The definitions (P H P exponential, P exp(iHΔt) P) are taken as ground
    truth. Also records the observed commutator ||[exp(iHΔt), P]|| at the
    excluded periods π/2 and π.
    """
    if times is None:
        times = np.linspace(0.0, math.pi, 50)
    rows: list[Discrepancy] = []
    ev = photon_atom_evolution(delta_t)
    h_cut = zeno_limit_hamiltonian(ev)
    w, v = hermitian_eig(h_cut)
    for t in times:
        computed = restrict((v * np.exp(1j * w * t)) @ v.conj().T)
        printed = closed_form_u_lim(t)
        for i in range(3):
            for j in range(3):
                for part, pr, co in (("re", printed[i, j].real, computed[i, j].real),
                                     ("im", printed[i, j].imag, computed[i, j].imag)):
                    row = _compare("limit_unitary", f"t={t:.12g} [{i},{j}].{part}", pr, co, tol)
                    if row:
                        rows.append(row)

    block = entangled_basis_form(ev)
    for name, printed_m in (("entangled_block", printed_block(delta_t)),
                            ("contraction_matrix", contraction_matrix(delta_t))):
        for i in range(2):
            for j in range(2):
                row = _compare(name, f"Δt={delta_t:.12g} [{i},{j}]", printed_m[i, j], block[1 + i, 1 + j].real, tol)
                if row:
                    rows.append(row)
    for name, idx in (("entangled_row_first", [(0, k) for k in range(4)] + [(k, 0) for k in range(1, 4)]),
                      ("entangled_row_last", [(3, k) for k in range(4)])):
        for i, j in idx:
            expected = 1.0 if (i, j) == (0, 0) else 0.0
            row = _compare(name, f"Δt={delta_t:.12g} [{i},{j}]", expected, block[i, j].real, tol)
            if row:
                rows.append(row)

    p = model.survival_projector()
    for label, dt in (("π/2", math.pi / 2), ("π", math.pi)):
        u = model.product_propagator(dt)
        comm = float(np.linalg.norm(u @ p - p @ u, 2))
        rows.append(Discrepancy("excluded_commutation", f"Δt={label}", 0.0, comm, "observed"))
    return rows
