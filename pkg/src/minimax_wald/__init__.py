"""Minimax-regret sequential experiments with costly sampling."""

__version__ = "0.1.0"

from .analytics import (  # noqa: E402
    BaiSolution,
    DesignParams,
    EquilibriumSolution,
    bai_regret,
    closed_form_regret,
    efficiency_ratio,
    expected_stopping_time,
    minimax_value,
    misid_prob,
    nonadaptive_duration,
    scaled_regret,
    solve_bai_equilibrium,
    solve_equilibrium,
    universal_constants,
)
from .costs import CostFunction, expected_cost, solve_general_equilibrium, zeta  # noqa: E402
from .diffusion import DiffusionSpec, estimate_regret, simulate_path, simulate_paths  # noqa: E402
from .engine import (  # noqa: E402
    ConjugatePrior,
    DiscreteConfig,
    ForcedExploration,
    KnownVariance,
    OutcomeModel,
    estimate_discrete_regret,
    run_experiment,
    run_replications,
)
from .errors import (  # noqa: E402
    ConfigurationError,
    EstimationError,
    MinimaxWaldError,
    NumericalError,
    ParameterError,
    SolverError,
)
from .hjb import HjbGrid, HjbSolution, belief, obstacle, solve_hjb  # noqa: E402
from .summary import RegretSummary  # noqa: E402
