"""Optimal stat-arb trading under concave transient price impact.

The model: trades move the price through an impact state J that decays
exponentially at timescale tau, felt through a concave power I =
lambda sign(J)|J|^c.  The package computes the profit-maximizing
impact path for a given alpha signal, prices arbitrary strategies,
fits (c, tau, g) to meta-order panels, and quantifies what trading
with the wrong exponent or decay estimate costs.
"""

from .alpha import (
    AlphaModel,
    AlphaPath,
    load_alpha_csv,
    sample_alpha,
    stationary_abs_moment,
    stationary_alpha_vol,
)
from .calibration import (
    BootstrapC,
    CalibGrid,
    LogLogFit,
    MetaOrder,
    bootstrap_c,
    fit_loglog,
    grid_fit,
    orders_from_csv,
    orders_to_csv,
    synth_metaorders,
)
from .core import (
    AfsParams,
    ImpactPath,
    TimeGrid,
    evolve_impact,
    execution_cost,
    impact_of_state,
    impact_potential,
    rates_matching_states,
    state_of_impact,
)
from .pnl import (
    PnlReport,
    decay_profit_ratio,
    misspec_value_constant_alpha,
    misspec_value_decay_ou,
    optimal_value_constant_alpha,
    optimal_value_decay_ou,
    refine_until_stable,
    simulate_pnl,
    value_impact_space,
    value_plan,
)
from .policy import (
    OptimalPlan,
    PolicySpec,
    implied_alpha,
    optimal_impact,
    order_size_from_alpha,
    plan_to_csv,
    turnover_factor,
)
from .sensitivity import (
    ScanResult,
    StatPnlCurves,
    g_curve_concavity,
    g_curve_decay,
    scan_concavity,
    scan_decay,
    statistical_vs_pnl,
)

__version__ = "0.1.0"

__all__ = [
    "AfsParams",
    "AlphaModel",
    "AlphaPath",
    "BootstrapC",
    "CalibGrid",
    "ImpactPath",
    "LogLogFit",
    "MetaOrder",
    "OptimalPlan",
    "PnlReport",
    "PolicySpec",
    "ScanResult",
    "StatPnlCurves",
    "TimeGrid",
    "bootstrap_c",
    "decay_profit_ratio",
    "evolve_impact",
    "execution_cost",
    "fit_loglog",
    "g_curve_concavity",
    "g_curve_decay",
    "grid_fit",
    "impact_of_state",
    "impact_potential",
    "implied_alpha",
    "load_alpha_csv",
    "misspec_value_constant_alpha",
    "misspec_value_decay_ou",
    "optimal_impact",
    "optimal_value_constant_alpha",
    "optimal_value_decay_ou",
    "order_size_from_alpha",
    "orders_from_csv",
    "orders_to_csv",
    "plan_to_csv",
    "rates_matching_states",
    "refine_until_stable",
    "sample_alpha",
    "scan_concavity",
    "scan_decay",
    "simulate_pnl",
    "state_of_impact",
    "stationary_abs_moment",
    "stationary_alpha_vol",
    "statistical_vs_pnl",
    "synth_metaorders",
    "turnover_factor",
    "value_impact_space",
    "value_plan",
]
