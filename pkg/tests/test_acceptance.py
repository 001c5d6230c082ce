"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line.

The simulation-heavy criteria run at their stated sizes and take several
minutes in total on one core.
"""
import subprocess
import sys
from collections import Counter

import numpy as np
import pytest

from namegame.arena import max_overlap
from namegame.engine import ConfigError, SimConfig, check_convergence, init_state, run, step
from namegame.experiments import run_seed
from namegame.metrics import estimate_diffusion, fit_power_law, memory_metric
from namegame.mobility import MotionParams, simulate_walkers
from namegame.network import build_graph, critical_sizes

from helpers import static_config, static_state
from oracles import brute_force_edges, synchronous_ng_distribution, total_variation

pytestmark = pytest.mark.slow


def test_c01_critical_sizes(report):
    got = (critical_sizes(1.0, 0.1), critical_sizes(0.45, 0.1))
    ok = got == ((32, 143), (6, 29))
    assert report(1, ok, f"critical sizes L=1 {got[0]}, L=0.45 {got[1]}")


def test_c02_degree_formula(report):
    rng = np.random.default_rng(2)
    degs = [build_graph(rng.uniform(0, 1, (200, 2)), 0.1, 1.0, True).mean_degree()
            for _ in range(100)]
    target = np.pi * 200 * 0.01
    err = abs(np.mean(degs) / target - 1)
    assert report(2, err <= 0.05, f"mean degree {np.mean(degs):.3f} vs {target:.3f} ({err:.1%})")


def test_c03_spatial_hash_exact(report):
    rng = np.random.default_rng(3)
    mismatches = 0
    for k in range(50):
        n = int(rng.integers(2, 301))
        periodic = bool(k % 2)
        pos = rng.uniform(0, 1, (n, 2))
        if set(build_graph(pos, 0.1, 1.0, periodic).edges) != brute_force_edges(pos, 0.1, 1.0, periodic):
            mismatches += 1
    assert report(3, mismatches == 0, f"{mismatches} mismatches over 50 configurations, both metrics")


def _fuzz_config(rng, seed):
    while True:
        model = str(rng.choice(["point", "embodied"]))
        try:
            return SimConfig(
                N=int(rng.integers(1, 31)), L=float(rng.uniform(0.2, 1.0)), model=model,
                n_s=int(rng.integers(1, 51)), n_m=int(rng.integers(1, 51)),
                loss_policy="iid", loss_p=float(rng.choice([0.0, rng.uniform(0, 0.3)])),
                speak_phase=str(rng.choice(["shared", "staggered"])), seed=seed,
                max_steps=2000, series_every=0)
        except ConfigError:
            continue


def test_c04_word_bound_and_absorption(report):
    rng = np.random.default_rng(4)
    bound_violations = absorb_violations = converged = 0
    for k in range(500):
        config = _fuzz_config(rng, run_seed(4, 0, k))
        state = init_state(config)
        while state.n_t < config.max_steps and not check_convergence(state):
            step(state, config)
            if sum(state.counters) > config.N:
                bound_violations += 1
                break
        if check_convergence(state):
            converged += 1
            for _ in range(1000):
                step(state, config)
                if not check_convergence(state):
                    absorb_violations += 1
                    break
        if sum(state.counters) > config.N:
            bound_violations += 1
    ok = bound_violations == 0 and absorb_violations == 0
    assert report(4, ok, f"500 fuzz runs ({converged} converged): {bound_violations} word-bound "
                         f"and {absorb_violations} absorption violations")


def test_c05_two_agent_oracle(report):
    rounds, n = 3, 10_000
    exact = synchronous_ng_distribution(2, rounds)
    counts = [Counter() for _ in range(rounds)]
    for seed in range(n):
        config = static_config(2, seed=seed)
        state = static_state(config, [[0.5, 0.5], [0.55, 0.5]])
        step(state, config)
        for k in range(rounds):
            step(state, config)  # completes hearing round k + 1
            counts[k][tuple(frozenset(w.creator for w in inv) for inv in state.inventories)] += 1
    tv = [total_variation({s: c / n for s, c in counts[k].items()}, exact[k]) for k in range(rounds)]
    ok = max(tv) < 0.02
    assert report(5, ok, "TV after rounds 1..3 over 10^4 runs: " + ", ".join(f"{x:.4f}" for x in tv))


def test_c06_density_trend(report):
    means = []
    for cell, N in enumerate((50, 150, 300)):
        t = [run(SimConfig(N=N, seed=run_seed(6, cell, rep), series_every=0)).t_c for rep in range(50)]
        assert None not in t
        means.append(float(np.mean(t)))
    ok = means[0] > means[1] > means[2]
    assert report(6, ok, "mean t_c for N=50,150,300: " + ", ".join(f"{m:.0f} s" for m in means))


TAU_S = (10, 30, 100, 300)


@pytest.fixture(scope="module")
def scaling_sweep():
    means = []
    for cell, ts in enumerate(TAU_S):
        cfg = SimConfig.from_times(10, ts, N=300, series_every=0)
        t = [run(cfg.replace(seed=run_seed(7, cell, rep))).t_c for rep in range(20)]
        means.append(float(np.mean([x for x in t if x is not None])) if None not in t else np.nan)
    return np.array(means)


def test_c07_power_law(report, scaling_sweep):
    gamma = fit_power_law(TAU_S, scaling_sweep).exponent
    ok = 0.35 <= gamma <= 0.65
    assert report(7, ok, f"gamma = {gamma:.3f} from mean t_c "
                         + ", ".join(f"{m:.0f}" for m in scaling_sweep) + " s")


def test_c08_slower_is_faster(report, scaling_sweep):
    rescaled = scaling_sweep / np.array(TAU_S)
    ok = bool(np.all(np.diff(rescaled) < 0))
    assert report(8, ok, "mean t_c/tau_s: " + ", ".join(f"{x:.2f}" for x in rescaled))


def _checked_run(config):
    """``run`` with a physical-soundness check after every step."""
    state = init_state(config)
    r, L = config.body_radius, config.L
    worst_overlap, outside = 0.0, 0
    while state.n_t < config.max_steps:
        step(state, config)
        worst_overlap = max(worst_overlap, max_overlap(state.positions, r, L))
        outside += int(np.any((state.positions < r) | (state.positions > L - r)))
        if check_convergence(state):
            break
    t_c = state.n_t * config.dt if check_convergence(state) else None
    return t_c, memory_metric(state.max_inventory), worst_overlap, outside


@pytest.fixture(scope="module")
def embodiment_sweep():
    out = {}
    for cell, N in enumerate((50, 150)):
        for model in ("point", "embodied"):
            base = SimConfig.from_times(50, 10, N=N, model=model, series_every=0)
            rows = []
            for rep in range(20):
                cfg = base.replace(seed=run_seed(9, cell, rep))
                if model == "embodied":
                    rows.append(_checked_run(cfg))
                else:
                    res = run(cfg)
                    rows.append((res.t_c, res.M, 0.0, 0))
            out[N, model] = rows
    # the checked loop must reproduce the engine's own run
    cfg = SimConfig.from_times(50, 10, N=50, model="embodied", series_every=0, seed=run_seed(9, 0, 0))
    res = run(cfg)
    assert (res.t_c, res.M) == out[50, "embodied"][0][:2]
    return out


def _means(rows):
    t = [r[0] for r in rows]
    assert None not in t
    return float(np.mean(t)), float(np.mean([r[1] for r in rows]))


def test_c09_embodiment_slows(report, embodiment_sweep):
    parts, ok = [], True
    for N in (50, 150):
        tp, _ = _means(embodiment_sweep[N, "point"])
        te, _ = _means(embodiment_sweep[N, "embodied"])
        ok &= te > tp
        parts.append(f"N={N}: embodied {te:.0f} s vs point {tp:.0f} s")
    assert report(9, ok, "; ".join(parts))


def test_c10_embodiment_lowers_memory(report, embodiment_sweep):
    parts, ok = [], True
    for N in (50, 150):
        _, mp = _means(embodiment_sweep[N, "point"])
        _, me = _means(embodiment_sweep[N, "embodied"])
        ok &= me <= mp
        parts.append(f"N={N}: embodied M {me:.3f} vs point {mp:.3f}")
    assert report(10, ok, "; ".join(parts))


def test_c11_diffusion_law(report):
    rng = np.random.default_rng(11)
    D = {}
    for model in ("point", "embodied"):
        for tau_m in (10, 50):
            params = MotionParams(n_m=int(round(tau_m / 0.1)))
            traj = simulate_walkers(model, 1000, 2000, params, rng, sample_every=10)
            D[model, tau_m] = estimate_diffusion(traj, 1.0, tau_m)
    ratio = D["point", 50] / D["point", 10]
    below = all(D["embodied", t] < D["point", t] for t in (10, 50))
    ok = abs(ratio / 5 - 1) <= 0.2 and below
    assert report(11, ok, f"point D ratio {ratio:.2f}; embodied/point D at tau_m=10,50: "
                          f"{D['embodied', 10] / D['point', 10]:.2f}, {D['embodied', 50] / D['point', 50]:.2f}")


def test_c12_physical_soundness(report, embodiment_sweep):
    rows = embodiment_sweep[50, "embodied"] + embodiment_sweep[150, "embodied"]
    worst = max(r[2] for r in rows)
    outside = sum(r[3] for r in rows)
    ok = worst <= 1e-6 and outside == 0
    assert report(12, ok, f"{len(rows)} embodied runs: max overlap {worst:.2e} m, "
                          f"{outside} steps with a centre outside [r, L-r]")


def test_c13_determinism(report, tmp_path):
    digests = []
    for k in range(2):
        out = tmp_path / f"exec{k}"
        subprocess.run([sys.executable, "-m", "namegame", "preset", "fig6-small-arena",
                        "--replicates", "10", "--seed", "13", "--out", str(out)],
                       check=True, capture_output=True)
        digests.append((out / "results.csv").read_bytes())
    rows = digests[0].count(b"\n") - 1
    ok = digests[0] == digests[1] and rows == 180
    assert report(13, ok, f"fig6-small-arena twice ({rows} rows each): "
                          f"{'byte-identical' if digests[0] == digests[1] else 'DIFFERENT'}")
