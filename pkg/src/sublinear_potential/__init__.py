"""Discrete Green potentials, Kato moduli and monotone iteration for
``-Laplace u = mu u^q + nu`` (0 < q < 1) on grid domains."""

from .checks import Margin
from .experiments import ExperimentConfig, load_config, run_experiment
from .green import (
    BoundaryData,
    GreenOperator,
    GridFunction,
    analytic_disk_kernel,
    build_green,
    green_invariants,
    green_potential,
    harmonic_extension,
)
from .grid_domain import EmptyDomainError, GridDomain, Shape, build_domain, refine
from .measure import (
    GridMeasure,
    atom_measure,
    dist_alpha_measure,
    growth_constant,
    lebesgue,
    measure_from_density,
    zero_measure,
)
from .oscillation import OscillationReport, holder_oscillation
from .potential import (
    KatoReport,
    check_iterated_inequality,
    check_lower_bound,
    finite_energy_threshold_sweep,
    kato_modulus,
    kato_threshold_sweep,
    lgamma_norm,
)
from .solver import (
    DegenerateDataError,
    SolveReport,
    SolverConfig,
    newton_oracle,
    picard_solve,
    uniqueness_experiment,
    verify_estimates,
)

__version__ = "0.1.0"
