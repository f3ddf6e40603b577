"""Spectral and scattering toolkit for the half-line kernel 1/(t+s).

Closed-form resolvent, Mellin diagonalization and multiplier calculus,
large-time propagation asymptotics, Nystrom scattering for symmetric
perturbations, and eigenvalue counting above the continuous spectrum.
"""

from .errors import (
    BranchCutAmbiguityError,
    CarlemanError,
    CoalescenceError,
    DomainError,
    EdgeProximityError,
    GridSupportError,
    KernelConditionError,
    NearSingularEnergyError,
)
from .spectral_core import (
    EDGE_MARGIN,
    QuasiMomentum,
    SpectralPoint,
    branch_k,
    k_of_lambda,
    lambda_of_k,
    resolvent_kernel,
    resonance_series,
    rho,
    sigma_coefficient,
    spectral_density,
    zero_energy_kernel,
)
from .mellin import (
    LogGrid,
    MellinSpectrum,
    TruncationWarning,
    apply_operator_function,
    carleman_apply,
    carleman_matrix,
    default_grid,
    mellin_forward,
    mellin_inverse,
)
from .evolution import (
    K_CRITICAL,
    StationaryData,
    compact_bump,
    lambda_double_prime,
    lambda_prime,
    propagate_exact,
    propagate_stationary_phase,
    stationary_points,
)
from .scattering import (
    EigenfunctionTable,
    PerturbationKernel,
    ScatteringMatrix,
    assemble_perturbation,
    born_scattering_matrix,
    extract_asymptotics,
    free_resolvent_matrix,
    limiting_absorption_resolvent,
    scattering_matrix,
    solve_lippmann_schwinger,
    stationary_scattering_matrix,
    transmission_weight,
)
from .discrete_spectrum import (
    BirmanSchwingerReport,
    birman_schwinger_count,
    birman_schwinger_report,
    certified_count,
    certified_counts,
    count_direct,
    eigenvalue_bound,
    gamma_alpha,
    gamma_alpha_with_error,
    hamiltonian_spectrum,
    limit_kernel_deviation,
    resonance_weight,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
