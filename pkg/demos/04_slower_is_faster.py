"""
Broadcasting less often
=======================

At N = 300 we stretch the broadcast period tau_s and fit t_c ~ tau_s^gamma.
A sublinear gamma means fewer broadcasts in total are needed to agree.
Takes a minute or two.
"""
# %%
import numpy as np

from namegame import SimConfig, fit_power_law, run
from namegame.experiments import run_seed

taus = [10, 30, 100, 300]
means = []
for cell, ts in enumerate(taus):
    cfg = SimConfig.from_times(tau_m=10, tau_s=ts, N=300, series_every=0)
    t = [run(cfg.replace(seed=run_seed(0, cell, k))).t_c for k in range(8)]
    means.append(np.mean(t))
    print(f"tau_s = {ts:4d} s  mean t_c = {means[-1]:7.1f} s  broadcasts per agent = {means[-1] / ts:5.1f}")

# %%
fit = fit_power_law(taus, means)
print(f"gamma = {fit.exponent:.2f}")
