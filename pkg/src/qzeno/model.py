"""The photon + atom two-qubit system.

Photon states |0>_f (left cavity) and |1>_f (right cavity) form the first
tensor factor; the atom (|0> ground, |1>) is the second. Both evolve under
sigma_y with opposite signs, and the absorbing "explosion" state |1>_f|1> is
what the measurement checks for.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import kron, projector_from_state

SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=np.complex128)
IDENTITY_2 = np.eye(2, dtype=np.complex128)
IDENTITY_4 = np.eye(4, dtype=np.complex128)

# Photon round-trip time from the left to the right cavity.
ROUND_TRIP_T = math.pi / 2

EXCLUSION_WINDOW = 1e-9

BASIS_LABELS = ("00", "01", "10", "11")


class ExcludedIntervalError(ValueError):
    """Raised when Δt lies within the exclusion window around kπ/2."""


def basis_state(label: str) -> np.ndarray:
    """Computational basis ket from a two-character label such as ``"01"``."""
    try:
        idx = BASIS_LABELS.index(label)
    except ValueError:
        raise ValueError(f"unknown basis label {label!r}; expected one of {BASIS_LABELS}") from None
    v = np.zeros(4, dtype=np.complex128)
    v[idx] = 1.0
    return v


def bell_state(sign: int | str = +1) -> np.ndarray:
    """Psi± = (|01> ± |10>) / sqrt(2)."""
    if sign in (+1, "+", "plus"):
        s = 1.0
    elif sign in (-1, "-", "minus"):
        s = -1.0
    else:
        raise ValueError(f"sign must be +1 or -1, got {sign!r}")
    return (basis_state("01") + s * basis_state("10")) / math.sqrt(2.0)


def single_qubit_rotation(t: float) -> np.ndarray:
    """exp(i sigma_y t) = cos t I + i sin t sigma_y = [[cos t, sin t], [-sin t, cos t]]."""
    c, s = math.cos(t), math.sin(t)
    return np.array([[c, s], [-s, c]], dtype=np.complex128)


def hamiltonian() -> np.ndarray:
    """H = sigma_y ⊗ I - I ⊗ sigma_y."""
    return kron(SIGMA_Y, IDENTITY_2) - kron(IDENTITY_2, SIGMA_Y)


def explosion_state() -> np.ndarray:
    return basis_state("11")


def survival_projector() -> np.ndarray:
    """P⊥ = I - |11><11|."""
    return IDENTITY_4 - projector_from_state(explosion_state())


@dataclass(frozen=True)
class TwoQubitModel:
    hamiltonian: np.ndarray
    survival_projector: np.ndarray
    explosion_state: np.ndarray
    round_trip_scale: float = ROUND_TRIP_T


def build_model() -> TwoQubitModel:
    return TwoQubitModel(
        hamiltonian=hamiltonian(),
        survival_projector=survival_projector(),
        explosion_state=explosion_state(),
    )


def product_propagator(t: float) -> np.ndarray:
    """exp(iHt) assembled as exp(i sigma_y t) ⊗ exp(-i sigma_y t)."""
    return kron(single_qubit_rotation(t), single_qubit_rotation(-t))


def is_excluded(delta_t: float, window: float = EXCLUSION_WINDOW) -> bool:
    """True when Δt is within ``window`` of an integer multiple of π/2."""
    k = round(delta_t / (math.pi / 2))
    return abs(delta_t - k * math.pi / 2) < window


def check_admissible(delta_t: float) -> float:
    if not math.isfinite(delta_t):
        raise ExcludedIntervalError(f"Δt = {delta_t!r} is not finite")
    if is_excluded(delta_t):
        raise ExcludedIntervalError(
            f"Δt = {delta_t!r} lies within {EXCLUSION_WINDOW:g} of the excluded set "
            "{kπ/2 : k integer} (which contains kπ); the closed forms are undefined there"
        )
    return float(delta_t)


@dataclass(frozen=True)
class EntangledBasis:
    delta_t: float
    tau: float
    alpha: float
    beta: float
    vectors: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]

    def matrix(self) -> np.ndarray:
        """Basis vectors as the columns of a 4x4 unitary."""
        return np.column_stack(self.vectors)


def entangled_basis(delta_t: float) -> EntangledBasis:
    """Δt-dependent basis {Psi+, Psi2, Psi3, |11>} adapted to the step operator.

    Psi2 = alpha ((2/tau)|00> + sqrt2 Psi-) and Psi3 = beta (-tau|00> + sqrt2 Psi-)
    with tau = tan Δt.
    """
    check_admissible(delta_t)
    tau = math.tan(delta_t)
    alpha = abs(tau) / math.sqrt(2.0 * tau * tau + 4.0)
    beta = 1.0 / math.sqrt(tau * tau + 2.0)
    s00 = basis_state("00")
    minus = bell_state(-1)
    root2 = math.sqrt(2.0)
    psi2 = alpha * ((2.0 / tau) * s00 + root2 * minus)
    psi3 = beta * (-tau * s00 + root2 * minus)
    return EntangledBasis(
        delta_t=float(delta_t),
        tau=tau,
        alpha=alpha,
        beta=beta,
        vectors=(bell_state(+1), psi2, psi3, basis_state("11")),
    )
