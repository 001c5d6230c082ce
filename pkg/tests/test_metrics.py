import numpy as np
import pytest

from namegame.metrics import (RunResult, SeriesSample, Stats, estimate_diffusion, fit_power_law,
                              memory_metric, mean_squared_displacement, rescaled_broadcasts)
from namegame.mobility import MotionParams, simulate_walkers


def test_power_law_exact_recovery():
    tau = np.array([10, 30, 100, 300.0])
    fit = fit_power_law(tau, 7.0 * tau ** 0.5)
    assert fit.exponent == pytest.approx(0.5, abs=1e-12)
    assert fit.prefactor == pytest.approx(7.0, rel=1e-12)
    assert np.allclose(fit.residuals, 0, atol=1e-12)


def test_power_law_flat_and_noisy():
    tau = np.logspace(0, 3, 8)
    assert fit_power_law(tau, np.full(8, 42.0)).exponent == pytest.approx(0.0, abs=1e-12)
    rng = np.random.default_rng(0)
    noisy = 3 * tau ** 0.4 * np.exp(rng.normal(0, 0.05, 8))
    assert fit_power_law(tau, noisy).exponent == pytest.approx(0.4, abs=0.05)


def test_power_law_rejects_bad_input():
    with pytest.raises(ValueError):
        fit_power_law([1, 2, 3], [1, 2, 3])
    with pytest.raises(ValueError):
        fit_power_law([1, 2, 3, 4], [1, 0, 3, 4])


def test_rescaled_broadcasts():
    assert rescaled_broadcasts(300.0, 10.0) == 30.0
    with pytest.raises(ValueError):
        rescaled_broadcasts(1.0, 0.0)


def test_memory_metric():
    assert memory_metric([1, 2, 3, 2]) == 2.0
    assert memory_metric([]) == 0.0


def test_msd_of_ballistic_walkers():
    t = np.arange(5.0)
    traj = np.zeros((3, 5, 2))
    traj[:, :, 0] = 2.0 * t
    assert np.allclose(mean_squared_displacement(traj), 4 * t ** 2)


def test_static_walkers_have_zero_diffusion():
    params = MotionParams(v=0.0, n_m=10)
    traj = simulate_walkers("point", 100, 200, params, np.random.default_rng(0))
    assert estimate_diffusion(traj, 1.0, 1.0) == 0.0


def test_diffusion_needs_long_runs_and_many_walkers():
    params = MotionParams(n_m=100)
    traj = simulate_walkers("point", 100, 50, params, np.random.default_rng(0))
    with pytest.raises(ValueError):
        estimate_diffusion(traj, 1.0, 10.0)
    with pytest.raises(ValueError):
        estimate_diffusion(traj[:50], 1.0, 1.0)


def test_diffusion_matches_persistent_walk_formula():
    # straight runs of length v*tau between uniform turns: D = v^2 tau / 4 for large t
    v, tau = 0.01, 10.0
    params = MotionParams(v=v, dt=0.1, n_m=100)
    traj = simulate_walkers("point", 2000, 1000, params, np.random.default_rng(1))
    assert estimate_diffusion(traj, 1.0, tau) == pytest.approx(v * v * tau / 4, rel=0.15)


def test_stats_of():
    s = Stats.of([5, 1, 4, 2, 3])
    assert (s.count, s.mean, s.median, s.q1, s.q3) == (5, 3.0, 3.0, 2.0, 4.0)
    one = Stats.of([7.0])
    assert (one.median, one.q1, one.q3) == (7.0, 7.0, 7.0)
    assert Stats.of([]).count == 0 and Stats.of([]).median is None


def test_series_csv(tmp_path):
    res = RunResult(converged=True, t_c=1.0, M=1.0, M_alt=1.0, steps=10, distinct_final=1,
                    words_created=1, final_word=None, max_inventory=[1],
                    series=[SeriesSample(0.0, 0, 0, 0.0), SeriesSample(1.0, 1, 1, 1.0)])
    path = tmp_path / "s.csv"
    res.write_series(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "time_s,distinct_words,total_words,single_word_fraction"
    assert len(lines) == 3
