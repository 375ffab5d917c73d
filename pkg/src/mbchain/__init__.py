"""Numerics for continuously monitored boson chains.

Deterministic most-likely-trajectory evolution of Gaussian moments,
stochastic quantum-state-diffusion ensembles, analytic steady states
with a self-consistent surrogate mass, logarithmic-negativity scaling,
a perturbative relevance criterion, and a truncated-number-basis oracle
that validates the moment equations against exact density-matrix
evolution.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DomainError,
    InsufficientDataError,
    MbchainError,
    NoConvergenceError,
    NonFiniteError,
    TruncationLeakError,
)
from .gaussian import (
    GaussianState,
    assemble_covariance,
    momentum_correlation_profile,
    symplectic_eigenvalues,
    symplectic_form,
    vacuum_state,
)
from .lattice import ChainParams, coupling_matrix, dispersion, mode_momenta, regulator
from .mlt import (
    MltConfig,
    MltResult,
    ModeResult,
    detect_steady_state,
    evolve_modes,
    integrate,
    quadratic_energy,
    rhs_free,
    rhs_sg,
)
from .negativity import (
    NegativityResult,
    ScalingFit,
    fit_log_scaling,
    half_chain_subset,
    log_negativity,
    partial_transpose,
)
from .perturbation import (
    PerturbationResult,
    cosine_correlation,
    critical_alpha,
    ensemble_cosine_average,
    gamma_factor,
    perturbation_result,
    sctdha_boundary,
)
from .qsd import (
    EnsembleStats,
    QsdConfig,
    qsd_cov_rhs,
    qsd_step_free,
    qsd_step_sg,
    run_ensemble,
    sample_wiener,
)
from .sctdha import HarmonicCoefficients, SineGordonParams, coefficients
from .steady import (
    DecayFit,
    SteadyStateSolution,
    big_gamma,
    classify_decay,
    elliptic_k,
    real_space_from_modes,
    sigma_xp_steady,
    solve_self_consistent,
    state_from_solution,
)

__all__ = [
    "__version__",
    # errors
    "MbchainError", "ConfigError", "DomainError", "NonFiniteError",
    "NoConvergenceError", "InsufficientDataError", "TruncationLeakError",
    # lattice
    "ChainParams", "regulator", "dispersion", "mode_momenta", "coupling_matrix",
    # gaussian
    "GaussianState", "vacuum_state", "assemble_covariance", "symplectic_form",
    "symplectic_eigenvalues", "momentum_correlation_profile",
    # sctdha
    "SineGordonParams", "HarmonicCoefficients", "coefficients",
    # mlt
    "MltConfig", "MltResult", "ModeResult", "rhs_free", "rhs_sg", "integrate",
    "detect_steady_state", "quadratic_energy", "evolve_modes",
    # qsd
    "QsdConfig", "EnsembleStats", "sample_wiener", "qsd_cov_rhs",
    "qsd_step_free", "qsd_step_sg", "run_ensemble",
    # steady
    "SteadyStateSolution", "DecayFit", "sigma_xp_steady", "big_gamma",
    "elliptic_k", "solve_self_consistent", "real_space_from_modes",
    "state_from_solution", "classify_decay",
    # negativity
    "NegativityResult", "ScalingFit", "half_chain_subset", "partial_transpose",
    "log_negativity", "fit_log_scaling",
    # perturbation
    "PerturbationResult", "gamma_factor", "critical_alpha", "perturbation_result",
    "cosine_correlation", "ensemble_cosine_average", "sctdha_boundary",
]
