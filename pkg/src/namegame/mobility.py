"""Agent motion.

Point agents follow an uncorrelated random walk: a new uniform heading every
``n_m`` steps and straight, noise-free motion in between.  Embodied agents get
the same target-heading schedule but must pivot in place at angular speed
``omega`` before moving, and their forward step carries multiplicative
Gaussian noise.

All step functions are vectorised over agents: poses are ``(N, 2)`` position
arrays plus ``(N,)`` heading arrays.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi
NOISE_FLOOR = -0.99  # keeps 1 + g > 0, no backward motion


@dataclass(frozen=True)
class MotionParams:
    v: float = 0.01
    omega: float = np.pi / 5
    sigma: float = 0.4
    dt: float = 0.1
    n_m: int = 100

    def __post_init__(self):
        if self.v < 0 or self.omega <= 0 or self.sigma < 0 or self.dt <= 0 or self.n_m < 1:
            raise ValueError(f"invalid motion parameters: {self}")

    @property
    def tau_m(self) -> float:
        return self.n_m * self.dt


def normalize_heading(theta):
    out = np.mod(theta, TWO_PI)
    # np.mod can return exactly 2*pi for tiny negative inputs
    return np.where(out >= TWO_PI, 0.0, out)


def angle_diff(target, heading):
    """Signed shortest-arc difference ``target - heading`` in [-pi, pi)."""
    return np.mod(np.asarray(target) - heading + np.pi, TWO_PI) - np.pi


def sample_heading(rng: np.random.Generator, size=None):
    return normalize_heading(rng.uniform(0.0, TWO_PI, size))


def random_walk_controller(targets: np.ndarray, n_t: int, n_m: int,
                           rng: np.random.Generator) -> np.ndarray:
    """New uniform target headings for every agent when ``n_t % n_m == 0``."""
    if n_t % n_m == 0:
        return sample_heading(rng, len(targets))
    return targets


def point_step(positions: np.ndarray, headings: np.ndarray, params: MotionParams,
               n_t: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """One noise-free step of the point random walk (no boundary handling)."""
    headings = random_walk_controller(headings, n_t, params.n_m, rng)
    step = params.v * params.dt
    disp = np.column_stack((np.cos(headings), np.sin(headings))) * step
    return positions + disp, headings


def embodied_step(positions: np.ndarray, headings: np.ndarray, targets: np.ndarray,
                  params: MotionParams, rng: np.random.Generator
                  ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pivot toward ``targets`` or, once aligned, move forward with noise.

    Returns ``(positions, headings, reached)``.  One noise sample is drawn per
    agent on every call whether or not it moves, so the stream consumption
    does not depend on the agents' state.
    """
    max_turn = params.omega * params.dt
    diff = angle_diff(targets, headings)
    reached = np.abs(diff) <= max_turn * (1.0 + 1e-9)
    g = np.maximum(rng.normal(0.0, params.sigma, len(headings)), NOISE_FLOOR)

    new_headings = np.where(reached, targets,
                            normalize_heading(headings + np.sign(diff) * max_turn))
    step = params.v * params.dt * (1.0 + g) * reached
    disp = np.column_stack((np.cos(new_headings), np.sin(new_headings))) * step[:, None]
    return positions + disp, new_headings, reached


def simulate_walkers(model: str, n_walkers: int, duration: float, params: MotionParams,
                     rng: np.random.Generator, sample_every: int = 10) -> np.ndarray:
    """Free-space (unbounded, non-interacting) walker ensemble.

    Returns unwrapped trajectories of shape ``(n_walkers, n_samples, 2)``
    sampled every ``sample_every`` steps, starting at the origin.
    """
    n_steps = int(round(duration / params.dt))
    pos = np.zeros((n_walkers, 2))
    headings = sample_heading(rng, n_walkers)
    targets = headings.copy()
    out = np.empty((n_walkers, n_steps // sample_every + 1, 2))
    out[:, 0] = pos
    for n_t in range(1, n_steps + 1):
        if model == "point":
            pos, headings = point_step(pos, headings, params, n_t, rng)
        elif model == "embodied":
            targets = random_walk_controller(targets, n_t, params.n_m, rng)
            pos, headings, _ = embodied_step(pos, headings, targets, params, rng)
        else:
            raise ValueError(f"unknown model {model!r}")
        if n_t % sample_every == 0:
            out[:, n_t // sample_every] = pos
    return out
