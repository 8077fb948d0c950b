"""nlspin: spin-1/2 dynamics under a norm-preserving nonlinear state equation.

The package simulates d|psi>/dt = (-i H + gamma M)|psi> on 2- and
4-dimensional Hilbert spaces, where M is a Hermitian drive rebuilt from the
current state and a target vector.  It covers one-spin Bloch dynamics with
analytic fixed points, thermalization under an exponentially correlated
fluctuating field, two-spin disentanglement and butterfly runs, and the
driven two-spin limit cycle, plus a config-driven CLI that reproduces each
bundled experiment.
"""

__version__ = "0.1.0"

from .bloch import (
    OneSpinParams,
    ThermalParams,
    augmented_kpar_rhs,
    bloch_from_state,
    bloch_rhs,
    effective_temperature,
    evolve_bloch,
    fixed_point_strong,
    fixed_point_weak,
    relax_fixed_point,
    relaxation_rates,
    state_from_bloch,
    thermal_steady_state,
)
from .dynamics import (
    EvolutionSettings,
    FixedTarget,
    SpinFlipTarget,
    Trajectory,
    density_rhs,
    drive_operator,
    evolve,
    expectation_rate,
    state_rhs,
)
from .errors import (
    ConfigError,
    ConvergenceError,
    DegenerateGeometryError,
    IntegrationDivergedError,
    NumericalError,
    SingularPointError,
)
from .linalg import (
    PAULI,
    SIGMA_0,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    as_state,
    density,
    embed_spin1,
    embed_spin2,
    expectation,
    kron,
    normalized,
    partial_transpose,
    pauli_dot,
    projector,
    spin_flip_target,
)
from .noise import (
    NoiseParams,
    NoiseRealization,
    NoisyHamiltonian,
    autocovariance,
    noisy_hamiltonian,
    synthesize,
)
from .twospin import (
    BELL_SINGLET,
    BELL_TRIPLET,
    ButterflyReport,
    DrivenParams,
    LimitCycleReport,
    butterfly_run,
    detect_limit_cycle,
    entanglement_amplitude,
    hartmann_hahn_mismatch,
    omega_matrix,
    purity,
    r_expectation,
    r_expectation_from_operators,
    rabi_frequency,
    random_state_with_entanglement,
    spin_expectations,
    spin_projection_op,
    symmetric_state,
    two_spin_observables,
)
