"""Monte Carlo stochastic-tree bounds for options on an asset and its running maximum."""

from .model import AugmentedState, MarketParams, RngStream, gbm_step, simulate_path, simulate_paths
from .payoffs import Kind, PiPayoff, Tag, classify, evaluate
from .tree import (
    DiscountMode,
    EstimateReport,
    FixtureNode,
    FixtureTree,
    NodeEstimates,
    TreeConfig,
    evaluate_fixture,
    evaluate_tree,
    phi_estimate,
    price,
    theta_estimate,
)

__version__ = "0.1.0"

__all__ = [
    "AugmentedState",
    "DiscountMode",
    "EstimateReport",
    "FixtureNode",
    "FixtureTree",
    "Kind",
    "MarketParams",
    "NodeEstimates",
    "PiPayoff",
    "RngStream",
    "Tag",
    "TreeConfig",
    "classify",
    "evaluate",
    "evaluate_fixture",
    "evaluate_tree",
    "gbm_step",
    "phi_estimate",
    "price",
    "simulate_path",
    "simulate_paths",
    "theta_estimate",
]
