"""Driven-dissipative BEC-cavity simulator and phase-diagram toolkit."""

from .errors import (
    BadSteadyState,
    CavityBECError,
    DegenerateSpectrum,
    EigenSolverFailure,
    GridTooCoarse,
    IncompatibleOrbits,
    InteractionUnsupported,
    MissingObservable,
    NoConvergence,
    NonFiniteState,
    NonFiniteValue,
    NonPositiveKappa,
    NonuniformSampling,
    NumericalError,
    OscillatoryResidual,
    ParameterError,
    ResumeMismatch,
    StepSizeUnderflow,
    TrajectoryTooShort,
    TruncationTooSmall,
    UnnormalizedState,
    WindowTooShort,
)
from .model import (
    DOMAIN_LENGTH,
    CondensateState,
    ModelParams,
    OrderParams,
    SystemState,
    chi_correlation,
    delta_matrix,
    density_profile,
    field_on_grid,
    kinetic_energy,
    order_parameters,
    validate_params,
    z2_transform,
)
from .dynamics import (
    IntegratorConfig,
    PhaseSlip,
    Trajectory,
    TruncationAlarm,
    build_coupling_matrix,
    coupled_rhs,
    detect_phase_slips,
    evolve_meanfield,
    load_snapshot,
    save_snapshot,
)
from .steady import (
    SteadyState,
    adiabatic_cavity,
    analytic_critical_pump,
    imaginary_time_solve,
    pump_threshold,
)
from .stability import (
    StabilityReport,
    analyze_stability,
    build_stability_matrix,
    departs_in_time,
    max_growth_rate,
)
from .classify import (
    ClassifyRules,
    IntensitySpectrum,
    MergingReport,
    Orbit,
    PhaseLabel,
    chi_orbit,
    classify_phase,
    detect_merging,
    dominant_frequency,
    intensity_spectrum,
    spectral_ipr,
)
from .twa import (
    EnsembleConfig,
    EnsembleStats,
    noise_increment,
    run_ensemble,
    sample_wigner_initial,
)
from .sweep import AxisSpec, SweepResult, SweepSpec, run_sweep

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
