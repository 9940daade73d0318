"""Heston option pricing by SIPG discontinuous Galerkin finite elements with
POD-Galerkin and DMD reduced-order models."""

from .assembly import (
    AssembledSystem,
    BoundaryData,
    assemble_load,
    assemble_mass,
    assemble_source,
    assemble_stiffness,
    assemble_system,
    evaluate_solution,
    l2_project,
)
from .dmd import (
    DMDModel,
    dmd_exact,
    dmd_variant,
    initial_amplitudes,
    optimal_amplitudes,
    reconstruct,
    reconstruct_series,
    vandermonde,
)
from .errors import ConfigurationError, DomainError, NumericalError
from .fields import CoefficientField
from .fom import SnapshotSet, StepOperator, TimeGrid, solve_fom, step_matrix
from .harness import (
    ErrorReport,
    ExperimentConfig,
    config_from_preset,
    run_experiment,
)
from .heston import (
    ButterflySpread,
    DigitalCall,
    EuropeanCall,
    HestonParams,
    boundary_value,
    coefficients,
    log_transform,
    inverse_log_transform,
    normal_cdf,
    payoff,
    preset,
)
from .mesh import Mesh, RectDomain, build_structured_mesh, classify_edges
from .metrics import (
    benchmark_speedup,
    relative_frobenius_error,
    relative_price_error,
)
from .oracle import reference_price_heston_cf
from .pod import PODBasis, ReducedSystem, compute_pod_basis, lift, reduce_system, solve_rom
from .space import DGSpace

__version__ = "0.1.0"
