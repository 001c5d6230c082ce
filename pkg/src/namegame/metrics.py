"""Consensus observables and post-processing fits."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .words import Word, hearer_update

SERIES_HEADER = ("time_s", "distinct_words", "total_words", "single_word_fraction")


class SeriesSample(NamedTuple):
    time: float
    distinct: int
    total: int
    single_fraction: float


@dataclass
class RunResult:
    converged: bool
    t_c: Optional[float]
    M: float
    M_alt: float
    steps: int
    distinct_final: int
    words_created: int
    final_word: Optional[Word] = None
    max_inventory: list[int] = field(default_factory=list)
    series: Optional[list[SeriesSample]] = None
    trajectories: Optional[np.ndarray] = None

    def write_series(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(SERIES_HEADER)
            for s in self.series or []:
                writer.writerow((repr(s.time), s.distinct, s.total, repr(s.single_fraction)))


def memory_metric(max_inventory: Sequence[int]) -> float:
    """Mean over agents of each agent's largest inventory size."""
    sizes = np.asarray(max_inventory, dtype=float)
    return float(sizes.mean()) if sizes.size else 0.0


def memory_from_log(lines, n_agents: int) -> float:
    """Recompute the memory metric by replaying an engine event log.

    Only ``broadcast`` (speaker may invent) and ``deliver`` (hearer update)
    records change inventories; they are replayed in file order.
    """
    inventories: list[list[Word]] = [[] for _ in range(n_agents)]
    peak = [0] * n_agents
    for line in lines:
        parts = line.split()
        if len(parts) < 4 or parts[1] not in ("broadcast", "deliver"):
            continue
        agent = int(parts[2].split(",")[0])
        word = Word.parse(parts[3])
        inv = inventories[agent]
        if parts[1] == "broadcast":
            if word not in inv:
                inv = inv + [word]
        else:
            inv, _ = hearer_update(inv, word)
        inventories[agent] = inv
        peak[agent] = max(peak[agent], len(inv))
    return memory_metric(peak)


def mean_squared_displacement(trajectories: np.ndarray) -> np.ndarray:
    disp = trajectories - trajectories[:, :1, :]
    return np.mean(np.sum(disp ** 2, axis=2), axis=0)


def estimate_diffusion(trajectories: np.ndarray, sample_dt: float, tau_m: float) -> float:
    """Diffusion coefficient from the ensemble MSD, ``MSD = 4 D t``.

    ``trajectories`` are unwrapped positions of shape ``(walkers, samples, 2)``
    taken every ``sample_dt`` seconds.  The slope is fitted by least squares
    on ``t >= 10 * tau_m``.
    """
    trajectories = np.asarray(trajectories, dtype=float)
    if trajectories.ndim != 3 or trajectories.shape[0] < 100:
        raise ValueError("need at least 100 trajectories shaped (walkers, samples, 2)")
    t = np.arange(trajectories.shape[1]) * sample_dt
    window = t >= 10 * tau_m
    if window.sum() < 2:
        raise ValueError(f"trajectories span {t[-1]:g} s, need well over 10*tau_m = {10 * tau_m:g} s")
    msd = mean_squared_displacement(trajectories)
    slope, _ = np.polyfit(t[window], msd[window], 1)
    return float(slope / 4.0)


@dataclass
class PowerLawFit:
    exponent: float
    prefactor: float
    residuals: np.ndarray


def fit_power_law(tau_s: Sequence[float], t_c: Sequence[float]) -> PowerLawFit:
    """Least-squares fit of ``log t_c = log c + gamma log tau_s``.

    Residuals are returned in log space; structured (oscillating) residuals
    are expected and are not treated as a failure.
    """
    x = np.asarray(tau_s, dtype=float)
    y = np.asarray(t_c, dtype=float)
    if x.shape != y.shape or x.size < 4:
        raise ValueError("need at least 4 (tau_s, t_c) points")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("power-law fit needs strictly positive values")
    lx, ly = np.log(x), np.log(y)
    A = np.column_stack((lx, np.ones_like(lx)))
    (gamma, logc), *_ = np.linalg.lstsq(A, ly, rcond=None)
    return PowerLawFit(float(gamma), float(np.exp(logc)), ly - (gamma * lx + logc))


def rescaled_broadcasts(t_c: float, tau_s: float) -> float:
    if tau_s <= 0:
        raise ValueError("tau_s must be positive")
    return t_c / tau_s


@dataclass
class Stats:
    count: int
    mean: Optional[float] = None
    median: Optional[float] = None
    q1: Optional[float] = None
    q3: Optional[float] = None

    @classmethod
    def of(cls, values: Sequence[float]) -> "Stats":
        x = np.asarray(values, dtype=float)
        if x.size == 0:
            return cls(0)
        q1, med, q3 = np.percentile(x, [25, 50, 75])
        return cls(int(x.size), float(x.mean()), float(med), float(q1), float(q3))


@dataclass
class SweepSummary:
    """Per-cell statistics over converged replicates; failures counted apart."""

    cell_id: int
    params: dict
    replicates: int
    nonconverged: int
    t_c: Stats
    M: Stats
