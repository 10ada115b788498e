"""
Where does a belief system converge?
====================================

The limit is computable without iterating: closed components settle on a
stationary-weighted average of their initial beliefs, and everything else is
an absorption-weighted mix of those values. Three independent routes (the
structural solve, the anchored fixed point, and plain simulation) must land
on the same numbers.

Social power is the stationary weight of each agent: its share of the final
consensus. On a star, the hub dominates; the cumulative curve shows how
concentrated the influence is.
"""

import numpy as np

from kronmix import (TopologySpec, assemble, equal_weight_matrix, generate,
                     lazify, simulate, social_power, structural_limit,
                     stubborn_limit)

rng = np.random.default_rng(11)

# --- three routes to the same limit -----------------------------------------

agents = equal_weight_matrix(lazify(generate(TopologySpec("two-star", 8)), 0.3))
constraints = equal_weight_matrix(lazify(generate(TopologySpec("cycle", 3)), 0.3))
lam = np.array([1.0, 0.6, 1.0, 1.0, 0.3, 1.0, 1.0, 1.0])  # two stubborn agents
x0 = rng.random((8, 3))
system = assemble(agents, constraints, lam, x0)

structural = structural_limit(system).beliefs
fixed = stubborn_limit(system, tol=1e-13)
simulated = simulate(system, stop_delta=1e-13).beliefs(system)

print("agreement between the three limit routes:")
print(f"  structural vs fixed-point: {np.abs(structural - fixed).max():.2e}")
print(f"  structural vs simulation:  {np.abs(structural - simulated).max():.2e}")
print(f"  agent 0 limiting beliefs: {np.round(structural[0], 6)}")

# --- a pure consensus and its social power ----------------------------------

print()
hub = equal_weight_matrix(lazify(generate(TopologySpec("star", 12)), 0.5))
topics = equal_weight_matrix(lazify(generate(TopologySpec("complete", 4)), 0.2))
x0 = rng.random((12, 4))
consensus_system = assemble(hub, topics, np.ones(12), x0)
report = structural_limit(consensus_system)
print(f"star-of-12 consensus value: {report.consensus:.6f}")

power = social_power(hub)
print("social power ranking (node, weight):",
      [(int(power.order[i]), round(float(power.weights[i]), 4)) for i in range(4)])
share = np.searchsorted(power.cumulative, 0.5) + 1
print(f"top {share} of 12 nodes already hold half the final value")

# the hub's weight is exactly its stationary mass: check against the limit
manual = float(power.weights @ x0[power.order].mean(axis=1))
print(f"stationary-weighted average of initial beliefs: {manual:.6f} "
      f"(matches the consensus)")
