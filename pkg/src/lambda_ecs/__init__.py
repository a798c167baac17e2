"""Entangled coherent states of two cavity modes coupled through a driven
Lambda-type atom.

Closed-form dynamics live in :mod:`lambda_ecs.analytic`; truncated Fock-space
oracles in :mod:`lambda_ecs.fock` and :mod:`lambda_ecs.dynamics`; the
two-qubit encoding and Wootters concurrence in :mod:`lambda_ecs.entanglement`.
"""

from .analytic import (
    ConcurrenceReport,
    LossyDensityState,
    MixedFieldState,
    SuperpositionState,
    Term,
    concurrence_lossy,
    concurrence_pure,
    eta_factor,
    evolve_amplitudes,
    full_evolution_state,
    lambda_factors,
    lossy_density_state,
    normalization_m,
    normalization_n,
    project_lossy,
    project_measurement,
)
from .core import (
    CoherentPair,
    EffectiveParams,
    SystemParams,
    effective_couplings,
    load_params,
    regime_check,
)
from .dynamics import (
    HamiltonianSpec,
    IntegratorConfig,
    adiabatic_elimination_check,
    build_hamiltonian,
    integrate_master,
    master_trajectory,
    project_atom_numeric,
    propagate,
    rotating_frame,
)
from .entanglement import (
    QubitMapping,
    build_qubit_mapping,
    concurrence_crosscheck,
    concurrence_profile,
    wootters_concurrence,
)
from .exceptions import (
    ConfigError,
    CrosscheckError,
    DegenerateOutcomeError,
    IntegrationError,
    RegimeWarning,
    TruncationError,
)
from .fock import (
    HilbertSpec,
    atomic_operators,
    coherent_vector,
    default_n_max,
    fidelity,
    mode_operators,
    partial_trace,
    su2_disentangle_check,
    superposition_to_matrix,
)

__version__ = "0.1.0"
