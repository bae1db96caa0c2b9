"""Performance evaluation of two-user NOMA small cells coexisting with a
massive-MIMO macro tier in a K-tier Poisson network.

Analytical results (quadrature over stochastic-geometry expressions) and a
Monte Carlo engine share one configuration type so every number can be
cross-checked between the two routes.
"""

from .coverage import CoverageBreakdown, coverage_probability, coverage_probability_closed
from .energy import (
    DEFAULT_POWER_MODEL,
    EnergyReport,
    PowerModel,
    energy_efficiency,
    macro_power_total,
    small_power_total,
)
from .experiments import (
    FIGURES,
    ConfigError,
    Experiment,
    ResultRow,
    figure_experiment,
    load_config,
    parse_experiment,
    reproduce_figure,
    run,
    serialize,
)
from .model import (
    MacroTier,
    NetworkConfig,
    SmallTier,
    Targets,
    association_prob_closed,
    association_prob_macro,
    association_prob_small,
    dbm_to_watts,
    watts_to_dbm,
)
from .montecarlo import Estimate, TrialRecords, estimate, simulate_records, summarize
from .rates import (
    RateReport,
    ergodic_rate_small,
    macro_rate_lower_bound,
    macro_rate_lower_bound_closed,
    spectrum_efficiency,
)
from .specfun import QuadratureError

__version__ = "0.1.0"

__all__ = [
    "CoverageBreakdown",
    "coverage_probability",
    "coverage_probability_closed",
    "DEFAULT_POWER_MODEL",
    "EnergyReport",
    "PowerModel",
    "energy_efficiency",
    "macro_power_total",
    "small_power_total",
    "FIGURES",
    "ConfigError",
    "Experiment",
    "ResultRow",
    "figure_experiment",
    "load_config",
    "parse_experiment",
    "reproduce_figure",
    "run",
    "serialize",
    "MacroTier",
    "NetworkConfig",
    "SmallTier",
    "Targets",
    "association_prob_closed",
    "association_prob_macro",
    "association_prob_small",
    "dbm_to_watts",
    "watts_to_dbm",
    "Estimate",
    "TrialRecords",
    "estimate",
    "simulate_records",
    "summarize",
    "RateReport",
    "ergodic_rate_small",
    "macro_rate_lower_bound",
    "macro_rate_lower_bound_closed",
    "spectrum_efficiency",
    "QuadratureError",
]
