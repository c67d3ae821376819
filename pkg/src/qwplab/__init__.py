"""Uncertainty dynamics of wave packets in at most quadratic potentials."""
from .analytic import (
    CanonicalOrbit,
    ZKState,
    canonical_orbit_series,
    canonical_orbit_state,
    classical_trajectory,
    evolve,
    evolve_harmonic,
    evolve_inverted,
    evolve_linear,
    evolve_series,
    gaussian_orbit,
    narrowing_bound_from_product,
    narrowing_time_bound,
    orbit_from_state,
    time_of_zero_mixed,
)
from .core import (
    Constants,
    Harmonic,
    Inverted,
    Linear,
    PhasePoint,
    PotentialSpec,
    QWPError,
    Regime,
    UncertaintyState,
    UnitsConfig,
    check_generalized_uncertainty,
    classify_regime,
    constants_of_motion,
    spreading_sign,
)
from .gaussian import (
    ChirpExtrema,
    GaussianClass,
    GaussianParams,
    chirp_extrema,
    chirp_history,
    classify_gaussian,
    coherent_eigenvalue_residual,
    gaussian_from_moments,
    moments_from_gaussian,
    sample_wavefunction,
)
from .grid import Grid, GridWavefunction, dump_snapshot, load_snapshot
from .oracle import (
    MomentSet,
    PotentialFn,
    integrate_moment_odes,
    measure_moments,
    propagate,
)

__version__ = "0.1.0"
