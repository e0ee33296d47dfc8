"""Distributed convex optimization over random networks with state-dependent weights."""

from .algorithm import (AlgorithmConfig, Scenario, Trajectory, initial_positions_example1,
                        iterate, run, step_size)
from .config import ScenarioConfig, bundled_config, load_config
from .graph import (GraphSample, GraphSet, IidCategorical, MarkovChain, MinOccurrenceDependency,
                    PerLinkBernoulli, Topology, build_topology, occurrence_counts,
                    single_link_graph_set, union_graph)
from .objective import QuadraticForm, QuadraticObjective, analytic_consensus_minimizer
from .weights import (Constant, CuckerSmale, LogDistance, apply_T, apply_T_hat,
                      build_mixing_matrix, eval_weight)

__version__ = "0.1.0"
