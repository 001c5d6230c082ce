"""
One naming game run, watched over time
======================================

Fifty point agents wander a 1 m torus and broadcast a word every ten
seconds.  We follow how the vocabulary collapses to a single word.
"""
# %%
import numpy as np

from namegame import SimConfig, run

config = SimConfig.from_times(tau_m=10, tau_s=10, N=50, seed=1, series_every=100)
result = run(config)
print(f"consensus at t_c = {result.t_c:g} s after {result.steps} steps")
print(f"memory M = {result.M:.2f} words per agent, {result.words_created} words invented")

# %%
# The series is sampled every 10 s.  Early on every agent holds a private
# word; the count of distinct words then drops as local agreements merge.
print(f"{'time_s':>8} {'distinct':>9} {'total':>6} {'single':>7}")
for s in result.series[::5]:
    print(f"{s.time:8.0f} {s.distinct:9d} {s.total:6d} {s.single_fraction:7.2f}")

# %%
# A few seeds show how broad the distribution of t_c is.
times = [run(config.replace(seed=s, series_every=0)).t_c for s in range(10)]
print("t_c over 10 seeds:", np.round(times).astype(int))
print(f"median {np.median(times):.0f} s, mean {np.mean(times):.0f} s")
