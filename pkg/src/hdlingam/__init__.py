"""Causal ordering and DAG estimation for linear non-Gaussian structural equation models.

The direction statistic compares higher-order moments of a regression
residual with those of a candidate parent; aggregated over small adjustment
sets it identifies root nodes one at a time, which yields a topological
ordering and parent sets even when ``p`` exceeds ``n``.
"""
__version__ = "0.1.0"

from .aggregate import MaxMinState, enumerate_subsets, t1_minmax, t2_maxmin, t2_update
from .errors import HDLingamError, InputError, NumericalError, StateError, StructureError
from .graph import (
    Dag,
    WeightedDag,
    ancestors,
    children,
    descendants,
    has_unique_ordering,
    hub_dag,
    is_consistent_ordering,
    parents,
    random_dag,
    topological_sort,
)
from .moments import MomentCache, OracleMomentCache
from .search import EstimateConfig, GraphEstimate, estimate_graph, final_parents, prune_candidates, update_cutoff
from .sem import (
    Dataset,
    ErrorLaw,
    ErrorSpec,
    PopulationOracle,
    Sem,
    gaussian_offset_moments,
    is_parentally_faithful,
    population_covariance,
    population_regression,
    population_tau,
    population_tau_no_confounding,
    residual_total_effect,
    simulate,
    total_effects,
)

__all__ = [name for name in dir() if not name.startswith("_")]
