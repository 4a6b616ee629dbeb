"""Generalized Markov chain choice models.

A customer walks on a graph of products, comparing an offered product
against the alternatives before buying it. The probability of stopping
shrinks as more alternatives are offered, so larger assortments can lose
customers.
"""

from gmchoice.assortment import (
    FptasConfig,
    OptimizationResult,
    brute_force_gmnl,
    brute_force_optimal,
    build_partition_instance_large_alpha,
    build_partition_instance_small_alpha,
    fptas_gmnl,
    fptas_lowrank,
)
from gmchoice.chain import MarkovChainModel, choice_probabilities, expected_revenue
from gmchoice.errors import (
    ChoiceModelError,
    NonTerminationError,
    PreconditionError,
    SingularSystemError,
    SpectralRadiusViolation,
)
from gmchoice.estimation import ChoiceDataset, GmnlParams, estimate_gmnl, estimate_mnl, roc_auc
from gmchoice.features import build_feature_chain_general, build_feature_chain_mnl
from gmchoice.gmnl import GmnlModel, gmnl_choice_probability, gmnl_revenue
from gmchoice.lowrank import LowRankModel, lowrank_revenue
from gmchoice.simulate import generate_dataset, simulate_walk, simulate_walks

__all__ = [name for name in dir() if not name.startswith("_")]
