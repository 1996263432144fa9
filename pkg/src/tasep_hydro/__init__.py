"""Event-driven TASEP on the Harris construction, with exact Burgers
solutions to compare against."""

from .burgers import (
    RiemannProblem,
    SpaceTimePoint,
    characteristic_speed,
    density_integral,
    flux_function,
    riemann_solution,
    shock_speed,
)
from .experiments import ExperimentSpec, ResultReport, default_spec, emit_report, run, run_batch
from .field import PoissonField, events_between, from_events, sample_field, time_shift
from .multiclass import (
    TwoClassConfiguration,
    couple,
    cut,
    evolve_two_class,
    isolated_second_class,
    leftmost_second_class,
    rightmost_second_class,
    tagged_second_class,
    two_class_from_pair,
)
from .observables import ObservationLine, ReplicaStatistics, density_field, flux, local_correlation, replica_mean
from .tasep import (
    Configuration,
    ProfileSpec,
    TrackedTrajectory,
    evolve,
    evolve_traced,
    force_hole_at_origin,
    force_particle_at_origin,
    init_product,
)

__version__ = "0.1.0"
