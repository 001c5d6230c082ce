"""World geometry: periodic torus for point agents, walled box for disk robots."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .mobility import sample_heading
from .network import SpatialHash, displacement

COLLISION_EPS = 1e-6
COLLISION_MAX_ITERS = 50


class CollisionError(RuntimeError):
    """Projection solver left overlaps above tolerance (arena over-packed)."""


@dataclass(frozen=True)
class Arena:
    L: float
    boundary: str = "periodic"
    body_radius: float = 0.0

    def __post_init__(self):
        if self.L <= 0 or self.body_radius < 0:
            raise ValueError("arena needs L > 0 and body_radius >= 0")
        if self.boundary == "periodic":
            if self.body_radius != 0:
                raise ValueError("periodic arenas host point agents only (body_radius = 0)")
        elif self.boundary == "walled":
            if not 0 < 2 * self.body_radius < self.L:
                raise ValueError("walled arenas need 0 < 2r < L")
        else:
            raise ValueError(f"unknown boundary {self.boundary!r}")

    @property
    def periodic(self) -> bool:
        return self.boundary == "periodic"


def wrap(positions, L: float) -> np.ndarray:
    out = np.mod(positions, L)
    return np.where(out >= L, 0.0, out)


def torus_distance(a, b, L: float) -> float:
    d = displacement(np.asarray(a, float), np.asarray(b, float), L, True)
    return float(np.hypot(*d))


def clamp_to_walls(positions: np.ndarray, r: float, L: float) -> np.ndarray:
    return np.clip(positions, r, L - r)


def max_overlap(positions: np.ndarray, r: float, L: float) -> float:
    """Largest pairwise penetration ``2r - d`` (0 if none)."""
    if len(positions) < 2:
        return 0.0
    i, j = SpatialHash(positions, 2 * r, L, False).pairs(2 * r)
    if len(i) == 0:
        return 0.0
    d = np.hypot(*(positions[j] - positions[i]).T)
    return float(max(0.0, (2 * r - d).max()))


@njit(cache=True)
def _project(pos, pi, pj, r, L, eps, max_iters):
    """Gauss-Seidel sweeps over candidate pairs until no overlap exceeds ``eps``.

    Each overlapping pair is pushed apart half-and-half along its centre line;
    displacement refused by a wall is handed to the partner.  Returns the
    number of sweeps that still found an overlap.
    """
    lo = r
    hi = L - r
    contact = 2.0 * r
    for sweep in range(max_iters):
        worst = 0.0
        for k in range(pi.shape[0]):
            i = pi[k]
            j = pj[k]
            dx = pos[j, 0] - pos[i, 0]
            dy = pos[j, 1] - pos[i, 1]
            dist = math.sqrt(dx * dx + dy * dy)
            overlap = contact - dist
            if overlap <= eps:
                continue
            worst = max(worst, overlap)
            if dist == 0.0:
                nx, ny = 1.0, 0.0
            else:
                nx, ny = dx / dist, dy / dist
            xi = min(max(pos[i, 0] - 0.5 * nx * overlap, lo), hi)
            yi = min(max(pos[i, 1] - 0.5 * ny * overlap, lo), hi)
            rest = overlap - ((pos[i, 0] - xi) * nx + (pos[i, 1] - yi) * ny)
            pos[i, 0] = xi
            pos[i, 1] = yi
            pos[j, 0] = min(max(pos[j, 0] + nx * rest, lo), hi)
            pos[j, 1] = min(max(pos[j, 1] + ny * rest, lo), hi)
        if worst <= eps:
            return sweep
    return max_iters


def resolve_collisions(positions: np.ndarray, r: float, arena: Arena,
                       eps: float = COLLISION_EPS, max_iters: int = COLLISION_MAX_ITERS
                       ) -> tuple[np.ndarray, int]:
    """Iterative position projection for disks in a walled box.

    Centres are clamped into ``[r, L - r]`` and overlapping pairs are pushed
    apart along their centre lines until no overlap exceeds ``eps``.  Candidate
    pairs come from a spatial hash with a skin of ``r / 2``; if any disk moves
    further than half the skin the candidate list is rebuilt.  Returns the
    corrected positions and the number of sweeps that found overlaps.

    Raises CollisionError when more than ``10 * eps`` of overlap survives
    ``max_iters`` sweeps.
    """
    L = arena.L
    pos = clamp_to_walls(np.array(positions, dtype=float), r, L)
    if len(pos) < 2:
        return pos, 0
    reach = 2.5 * r
    sweeps = 0
    while True:
        i, j = SpatialHash(pos, reach, L, False).pairs(reach)
        d = pos[j] - pos[i]
        if not (np.einsum("ij,ij->i", d, d) < (2 * r - eps) ** 2).any():
            return pos, sweeps
        if sweeps >= max_iters:
            break
        anchor = pos.copy()
        sweeps += _project(pos, i, j, r, L, eps, max_iters - sweeps)
        if sweeps < max_iters and np.abs(pos - anchor).max() < 0.25 * r:
            return pos, sweeps
    residual = max_overlap(pos, r, L)
    if residual > 10 * eps:
        raise CollisionError(f"residual overlap {residual:.3g} m after {sweeps} sweeps")
    return pos, sweeps


@njit(cache=True)
def _advance(pos, disp, ptr, nbr, r, L):
    lo = r
    hi = L - r
    r4 = 4.0 * r * r
    for i in range(pos.shape[0]):
        px, py = pos[i, 0], pos[i, 1]
        dx, dy = disp[i, 0], disp[i, 1]
        for _ in range(2):  # straight move, then one tangential slide
            a = dx * dx + dy * dy
            if a == 0.0:
                break
            s = 1.0
            nx, ny = 0.0, 0.0
            if dx > 0.0 and px + dx > hi:
                s, nx, ny = max(0.0, (hi - px) / dx), 1.0, 0.0
            elif dx < 0.0 and px + dx < lo:
                s, nx, ny = max(0.0, (lo - px) / dx), 1.0, 0.0
            if dy > 0.0 and py + dy > hi:
                t = max(0.0, (hi - py) / dy)
                if t < s:
                    s, nx, ny = t, 0.0, 1.0
            elif dy < 0.0 and py + dy < lo:
                t = max(0.0, (lo - py) / dy)
                if t < s:
                    s, nx, ny = t, 0.0, 1.0
            for k in range(ptr[i], ptr[i + 1]):
                j = nbr[k]
                wx = px - pos[j, 0]
                wy = py - pos[j, 1]
                b = 2.0 * (wx * dx + wy * dy)
                if b >= 0.0:
                    continue  # moving away
                c = wx * wx + wy * wy - r4
                if c <= 0.0:
                    t = 0.0
                else:
                    disc = b * b - 4.0 * a * c
                    if disc < 0.0:
                        continue
                    t = (-b - math.sqrt(disc)) / (2.0 * a)
                if t < s:
                    s = max(t, 0.0)
                    hx, hy = wx + s * dx, wy + s * dy
                    h = math.sqrt(hx * hx + hy * hy)
                    nx, ny = hx / h, hy / h
            px += s * dx
            py += s * dy
            if s >= 1.0:
                break
            rx, ry = (1.0 - s) * dx, (1.0 - s) * dy
            dot = rx * nx + ry * ny
            dx, dy = rx - dot * nx, ry - dot * ny
        pos[i, 0] = min(max(px, lo), hi)
        pos[i, 1] = min(max(py, lo), hi)


def advance_blocked(positions: np.ndarray, displacement: np.ndarray, r: float,
                    arena: Arena) -> np.ndarray:
    """Move disks one at a time (index order), stopping each at first contact.

    A blocked disk keeps the tangential part of its remaining displacement
    and slides once along the wall or disk it hit.  Starting from an
    overlap-free configuration the result is overlap-free as well.
    """
    pos = np.array(positions, dtype=float)
    disp = np.asarray(displacement, dtype=float)
    if len(pos) == 0:
        return pos
    reach = 2 * r + 2 * float(np.sqrt((disp ** 2).sum(axis=1)).max()) + 1e-9
    i, j = SpatialHash(pos, reach, arena.L, False).pairs(reach)
    src = np.concatenate((i, j))
    dst = np.concatenate((j, i))
    order = np.lexsort((dst, src))
    ptr = np.searchsorted(src[order], np.arange(len(pos) + 1))
    _advance(pos, disp, ptr, dst[order], r, arena.L)
    return pos


def grid_cells(arena: Arena, margin: float = 0.1) -> tuple[int, float]:
    """Cells per side and cell side length for robot placement."""
    side = 2 * arena.body_radius * (1 + margin)
    return int(arena.L // side), side


def grid_place(N: int, arena: Arena, rng: np.random.Generator, margin: float = 0.1
               ) -> tuple[np.ndarray, np.ndarray]:
    """Put each robot at the centre of a distinct random free cell."""
    n, side = grid_cells(arena, margin)
    if N > n * n:
        raise ValueError(f"arena holds only {n * n} robots, asked for {N}")
    cells = rng.choice(n * n, size=N, replace=False)
    pos = (np.column_stack((cells // n, cells % n)) + 0.5) * side
    return pos, sample_heading(rng, N)


def uniform_place(N: int, L: float, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    pos = wrap(rng.uniform(0.0, L, (N, 2)), L)
    return pos, sample_heading(rng, N)
