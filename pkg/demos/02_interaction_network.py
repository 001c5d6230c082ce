"""
The instantaneous interaction network
=====================================

Agents talk to everyone within d_i = 0.1 m.  Whether a snapshot of the
swarm is one connected blob or many islands depends on the density.
"""
# %%
import numpy as np

from namegame import build_graph, components, critical_sizes, expected_avg_degree

L, d_i = 1.0, 0.1
N1, Nc = critical_sizes(L, d_i)
print(f"<k> = 1 at N1 = {N1}; giant component expected above Nc = {Nc}")

# %%
rng = np.random.default_rng(0)
print(f"{'N':>5} {'<k> formula':>12} {'<k> measured':>13} {'giant':>6}")
for N in (10, 32, 50, 100, 143, 200, 300, 500):
    deg, giant = [], []
    for _ in range(50):
        g = build_graph(rng.uniform(0, L, (N, 2)), d_i, L, periodic=True)
        deg.append(g.mean_degree())
        giant.append(components(g)[1])
    print(f"{N:5d} {expected_avg_degree(N, L, d_i):12.2f} {np.mean(deg):13.2f} {np.mean(giant):6.2f}")

# %%
# Below N1 most agents are alone at any instant, so they only agree by
# meeting while moving.  Above Nc nearly everyone is reachable through a
# chain of hops, and broadcasts can sweep the whole swarm.
