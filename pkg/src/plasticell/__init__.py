"""plasticell: activator-inhibitor cellular plasticity toolkit.

A small numpy library for a two-variable activator-inhibitor model of
cellular plasticity (self-replicating factories producing environment-
consumed products), including closed-form equilibrium and stability
analysis, fixed-step simulation, parametric experiments, and a servo-
joint application demo.
"""

from .analysis import (
    EquilibriumReport,
    MultiEquilibrium,
    NullclineSet,
    VectorFieldGrid,
    classify,
    classify_linearization,
    jacobian_metrics,
    multi_equilibrium,
    nullclines,
    single_equilibrium,
    vector_field,
)
from .dynamics import (
    EnsembleResult,
    IntegratorConfig,
    Trajectory,
    integrate,
    run_to_steady,
    simulate_ensemble,
)
from .errors import (
    ConfigError,
    DivergenceError,
    ModelInputError,
    NonConvergenceError,
    NonPhysicalEquilibriumError,
    PlasticellError,
    SolverError,
    StepSizeError,
)
from .experiments import (
    CapacityMapResult,
    OppositionSurfaceResult,
    PulseTransientResult,
    SweepGrid,
    TimeConstantResult,
    capacity_along_contour,
    capacity_map,
    check_response_ordering,
    opposition_surface,
    pulse_transient,
    tau_ratio_heatmap,
    time_constants,
)
from .model import (
    CellSpec,
    CellState,
    DerivedParams,
    FactoryParams,
    StimulusProfile,
    ValidationReport,
    derivative,
    derived_params,
    flow_field,
    params_from_levels,
    validate,
)
from .servo import JointSpec, ServoTrajectory, simulate_joint

__version__ = "0.1.0"

__all__ = [
    "CapacityMapResult",
    "CellSpec",
    "CellState",
    "ConfigError",
    "DerivedParams",
    "DivergenceError",
    "EnsembleResult",
    "EquilibriumReport",
    "FactoryParams",
    "IntegratorConfig",
    "JointSpec",
    "ModelInputError",
    "MultiEquilibrium",
    "NonConvergenceError",
    "NonPhysicalEquilibriumError",
    "NullclineSet",
    "OppositionSurfaceResult",
    "PlasticellError",
    "PulseTransientResult",
    "ServoTrajectory",
    "SolverError",
    "StepSizeError",
    "StimulusProfile",
    "SweepGrid",
    "TimeConstantResult",
    "Trajectory",
    "ValidationReport",
    "VectorFieldGrid",
    "capacity_along_contour",
    "capacity_map",
    "check_response_ordering",
    "classify",
    "classify_linearization",
    "derivative",
    "derived_params",
    "flow_field",
    "integrate",
    "jacobian_metrics",
    "multi_equilibrium",
    "nullclines",
    "opposition_surface",
    "params_from_levels",
    "pulse_transient",
    "run_to_steady",
    "simulate_ensemble",
    "simulate_joint",
    "single_equilibrium",
    "tau_ratio_heatmap",
    "time_constants",
    "validate",
    "vector_field",
]
