"""Diverse sets of near-optimal TSP tours: a niching memetic first stage
followed by a diversity-maximising (mu+1)-EA."""
from ._backend import BACKEND
from .budget import EvalBudget, default_budget
from .diversity import cluster_count, d1, d2, gmm_select, mean_gap
from .ea import Mutation, Variant, run_ea
from .local_search import improve
from .nma import NichingParams, run_nma
from .pipeline import RunConfig, RunRecord, run_experiment, run_seed, run_two_stage
from .tour import Tour, edge_distance, tour_cost
from .tsplib import Instance, QualityThreshold, load_instance, make_threshold

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "EvalBudget", "default_budget", "cluster_count", "d1", "d2", "gmm_select",
    "mean_gap", "Mutation", "Variant", "run_ea", "improve", "NichingParams", "run_nma",
    "RunConfig", "RunRecord", "run_experiment", "run_seed", "run_two_stage", "Tour",
    "edge_distance", "tour_cost", "Instance", "QualityThreshold", "load_instance",
    "make_threshold",
]
