"""
Points versus robots in a small arena
=====================================

The same game in a 0.45 m walled box, once with ideal point agents on a
torus and once with 33 mm disk robots that pivot, jitter and bump.
"""
# %%
import numpy as np

from namegame import SimConfig, run
from namegame.experiments import run_seed

rows = []
for N in (5, 20, 35):
    for model in ("point", "embodied"):
        cfg = SimConfig.from_times(tau_m=5, tau_s=5, N=N, L=0.45, model=model, series_every=0)
        res = [run(cfg.replace(seed=run_seed(3, N, k))) for k in range(10)]
        t = [r.t_c for r in res if r.converged]
        rows.append((N, model, np.median(t), np.mean([r.M for r in res])))

print(f"{'N':>3} {'model':>9} {'median t_c':>11} {'mean M':>7}")
for N, model, t, m in rows:
    print(f"{N:3d} {model:>9} {t:11.1f} {m:7.2f}")

# %%
# Robots spend time turning on the spot and cannot pass through each other,
# so they spread information more slowly.  The slower mixing also tends to
# keep inventories smaller.
