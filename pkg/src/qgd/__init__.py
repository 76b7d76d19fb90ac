"""Gaussian quantum states under randomly timed symplectic kicks.

The package tracks first and second quadrature moments of bosonic
modes whose evolution mixes unitary Gaussian channels at Poisson times:
deterministic solvers (``ode_evolve``, ``series_evolve``,
``spectral_evolve``), trajectory sampling, two-mode entanglement
diagnostics with closed forms for the squeeze channel, and an
independent truncated density-matrix oracle for cross-checking.  The
``qgd`` console script drives all of it from scenario files.
"""

from .dynamics import (
    AsymptoticsReport,
    ChannelSet,
    EvolutionProblem,
    GaussianBaseline,
    GaussianMoments,
    SpectralDecomposition,
    UnitaryChannel,
    classify_asymptotics,
    ode_evolve,
    rotation_generator,
    series_evolve,
    spectral_decompose,
    spectral_evolve,
    stationary_state,
    vacuum_moments,
)
from .entanglement import (
    EntanglementReport,
    asymptotic_slope,
    closed_form_moments,
    closed_form_report,
    coherent_information_bound,
    covariance_report,
    gaussian_entropy,
    partial_transpose,
    ppt_min_nu,
    squeeze_channel,
)
from .errors import (
    DegenerateSpectrumWarning,
    DimensionError,
    DivergenceError,
    DomainError,
    IntegrationError,
    LeakageError,
    NormalizationError,
    NotNormalError,
    NotPassiveError,
    NotSymplecticError,
    PhysicalityError,
    QgdError,
    ResonanceError,
    ScenarioError,
    TermBudgetError,
)
from .fock import (
    DensityState,
    FockSystem,
    build_fock_system,
    channel_unitary,
    collision_step_check,
    controlled_unitary_check,
    displacement_unitary,
    extract_moments,
    gkls_integrate,
    mode_leakage,
    quadratic_hamiltonian,
    spectral_solution,
    vacuum_state,
)
from .sampler import (
    EnsembleStatistics,
    TrajectoryConfig,
    discrete_collision,
    ensemble_mean,
    sample_trajectory,
    scattering_sample,
    trajectory_stream,
)
from .scenario import OracleSpec, Scenario, SolverSpec, load_scenario, parse_scenario
from .symplectic import (
    check_symmetric,
    check_uncertainty,
    is_symplectic,
    require_physical,
    symplectic_eigenvalues,
    symplectic_exp,
    symplectic_form,
    uncertainty_margin,
    vacuum_covariance,
)

__version__ = "0.1.0"

__all__ = [
    "AsymptoticsReport",
    "ChannelSet",
    "DegenerateSpectrumWarning",
    "DensityState",
    "DimensionError",
    "DivergenceError",
    "DomainError",
    "EnsembleStatistics",
    "EntanglementReport",
    "EvolutionProblem",
    "FockSystem",
    "GaussianBaseline",
    "GaussianMoments",
    "IntegrationError",
    "LeakageError",
    "NormalizationError",
    "NotNormalError",
    "NotPassiveError",
    "NotSymplecticError",
    "OracleSpec",
    "PhysicalityError",
    "QgdError",
    "ResonanceError",
    "Scenario",
    "ScenarioError",
    "SolverSpec",
    "SpectralDecomposition",
    "TermBudgetError",
    "TrajectoryConfig",
    "UnitaryChannel",
    "asymptotic_slope",
    "build_fock_system",
    "channel_unitary",
    "check_symmetric",
    "check_uncertainty",
    "classify_asymptotics",
    "closed_form_moments",
    "closed_form_report",
    "coherent_information_bound",
    "collision_step_check",
    "controlled_unitary_check",
    "covariance_report",
    "discrete_collision",
    "displacement_unitary",
    "ensemble_mean",
    "extract_moments",
    "gaussian_entropy",
    "gkls_integrate",
    "is_symplectic",
    "load_scenario",
    "mode_leakage",
    "ode_evolve",
    "parse_scenario",
    "partial_transpose",
    "ppt_min_nu",
    "quadratic_hamiltonian",
    "require_physical",
    "rotation_generator",
    "sample_trajectory",
    "scattering_sample",
    "series_evolve",
    "spectral_decompose",
    "spectral_evolve",
    "spectral_solution",
    "squeeze_channel",
    "stationary_state",
    "symplectic_eigenvalues",
    "symplectic_exp",
    "symplectic_form",
    "trajectory_stream",
    "uncertainty_margin",
    "vacuum_covariance",
    "vacuum_moments",
    "vacuum_state",
]
