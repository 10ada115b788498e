"""Belief systems with logic constraints, analyzed through their graphs.

The package answers three questions about coupled opinion dynamics: whether
the system converges (periodicity of closed components), how long it takes
(mixing, coupling, and absorbing times on the Kronecker product structure),
and where it lands (stationary-weighted limits and absorption probabilities).
"""

from .beliefs import (BeliefState, BeliefSystem, ConvergenceVerdict,
                      SimulationResult, assemble, converges, initial_state,
                      oblivious_set, simulate, step, system_matrix)
from .errors import (AllTrialsCapped, DanglingNode, EmptyGraph,
                     FailedToConverge, KronmixError, NonConvergent,
                     NotErgodic, NotStochastic, NoUniqueFixedPoint,
                     ParseError, SpecError, StructuralError, TooLarge)
from .generators import FAMILIES, TopologySpec, generate, lazify
from .graphs import (DirectedGraph, SccDecomposition, condensation,
                     scc_decompose, scc_period)
from .kron import ProductOperator, ProductSccReport, kron, kron_graph, product_scc_check
from .limits import (ClosedLimit, LimitReport, SocialPower, TransientBlock,
                     absorbing_probabilities, closed_limit, limit_matrix,
                     open_limit, social_power, structural_limit, stubborn_limit)
from .mixing import (AbsorbingTimes, CouplingEstimate, MixingReport,
                     analyze_mixing, coupling_bound, distance_to_limit_curve,
                     eigen_bounds, estimate_coupling_time,
                     expected_absorbing_time, measure_mixing_time,
                     product_distance_to_limit, second_eigenvalue, theorem_bound)
from .netio import (ExperimentConfig, largest_scc, load_edgelist, read_config,
                    run_experiment)
from .stochastic import (StochasticMatrix, equal_weight_matrix, evolve,
                         stationary, tv_distance, validate_distribution,
                         validate_stochastic)

__version__ = "0.1.0"
