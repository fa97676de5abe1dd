"""Equilibria of a directed-search oligopoly where firms post prices and signals."""

from .core import (
    DegenerateN,
    DiscreteDistribution,
    FirmStrategy,
    InvalidSupport,
    MarketError,
    MarketParams,
    OutOfRange,
    PostedPriceDistribution,
    Regime,
    full_info,
    make_binary_posterior,
    no_info,
    validate,
)
from .equilibrium import (
    EquilibriumProfile,
    NonpositivePrice,
    consumer_welfare,
    equilibrium,
    hidden_equilibrium,
    posted_equilibrium,
    posted_equilibrium_profit,
    posted_price_cdf,
    posted_price_quantile,
    posting_threshold,
)
from .montecarlo import MarketStats, simulate_market
from .verify import (
    DemandCurve,
    DeviationReport,
    best_deviation_search,
    concave_envelope,
    demand_curve,
    deviation_payoff,
    hidden_deviation_check,
    majorizing_line,
    ternary_effective_weights,
)
from .weitzman import (
    EffectiveValueLottery,
    SearchOutcome,
    effective_value_lottery,
    pandora_search,
    reservation_value,
    static_winner,
)

__version__ = "0.1.0"
