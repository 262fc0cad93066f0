"""Unitary two-qubit evolution interrupted by incomplete projective measurement.

Photon + atom model in which a no-click measurement record either drives
entangling Zeno-limit dynamics (frequent checks) or conditionally freezes the
pair into the Bell state Psi+ (any admissible check period).
"""

__version__ = "0.1.0"

from .linalg import (  # noqa: E402
    LinalgError,
    adjoint,
    hermitian_eig,
    kron,
    mat_exp_i_hermitian,
    mat_mul,
    operator_norm,
    partial_trace,
    projector_from_state,
)
from .model import (  # noqa: E402
    ExcludedIntervalError,
    basis_state,
    bell_state,
    build_model,
    entangled_basis,
    product_propagator,
)
from .zeno import (  # noqa: E402
    InterruptedEvolution,
    NonConvergenceError,
    asymptotic_limit,
    closed_form_u_lim,
    conditional_trajectory,
    entangled_basis_form,
    fixed_point_check,
    photon_atom_evolution,
    spectral_report,
    step_operator,
    zeno_convergence_study,
    zeno_limit_hamiltonian,
    zeno_limit_unitary,
)
from .entanglement import concurrence, entanglement_entropy, zeno_entanglement_profile  # noqa: E402
from .montecarlo import CounterStream, McConfig, McResult, run_ensemble, sample_trajectory  # noqa: E402
