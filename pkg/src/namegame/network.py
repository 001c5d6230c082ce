"""Interaction network: uniform-grid spatial hash, range graphs, percolation.

Agents are linked when their distance (torus minimum image, or plain
Euclidean in walled arenas) is at most the interaction range.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

PERCOLATION_DEGREE = 4.51


def displacement(a: np.ndarray, b: np.ndarray, L: float, periodic: bool) -> np.ndarray:
    d = b - a
    if periodic:
        d = d - L * np.round(d / L)
    return d


@njit(cache=True)
def _grid_pairs(pos, keys, starts, ends, order, n, L, periodic, radius):
    r2 = radius * radius
    m = pos.shape[0]
    cap = 16 * m + 16
    out_i = np.empty(cap, dtype=np.int64)
    out_j = np.empty(cap, dtype=np.int64)
    count = 0
    for i in range(m):
        ci = keys[i] // n
        cj = keys[i] % n
        for dx in range(-1, 2):
            for dy in range(-1, 2):
                if n < 3:
                    # tiny grid: visit every point once, through the (0, 0) slot
                    if dx != 0 or dy != 0:
                        continue
                    lo_k, hi_k = 0, m
                else:
                    ni = ci + dx
                    nj = cj + dy
                    if periodic:
                        ni %= n
                        nj %= n
                    elif ni < 0 or ni >= n or nj < 0 or nj >= n:
                        continue
                    key = ni * n + nj
                    lo_k, hi_k = starts[key], ends[key]
                for s in range(lo_k, hi_k):
                    j = order[s] if n >= 3 else s
                    if j <= i:
                        continue
                    ddx = pos[j, 0] - pos[i, 0]
                    ddy = pos[j, 1] - pos[i, 1]
                    if periodic:
                        ddx -= L * np.round(ddx / L)
                        ddy -= L * np.round(ddy / L)
                    if ddx * ddx + ddy * ddy <= r2:
                        if count == cap:
                            cap *= 2
                            grown_i = np.empty(cap, dtype=np.int64)
                            grown_j = np.empty(cap, dtype=np.int64)
                            grown_i[:count] = out_i[:count]
                            grown_j[:count] = out_j[:count]
                            out_i, out_j = grown_i, grown_j
                        out_i[count] = i
                        out_j[count] = j
                        count += 1
    return out_i[:count], out_j[:count]


class SpatialHash:
    """Bucket points into a uniform ``n x n`` grid with cell side >= ``cell_size``.

    Range queries with radius up to ``cell_size`` only visit the 3x3 block of
    cells around a point.
    """

    def __init__(self, positions: np.ndarray, cell_size: float, L: float, periodic: bool):
        self.positions = np.ascontiguousarray(positions, dtype=float)
        self.L = L
        self.periodic = periodic
        self.n = max(1, int(L // cell_size))
        self.side = L / self.n
        ij = np.floor(self.positions / self.side).astype(np.int64)
        np.clip(ij, 0, self.n - 1, out=ij)
        self.ij = ij
        self.keys = ij[:, 0] * self.n + ij[:, 1]
        self.order = np.argsort(self.keys, kind="stable")
        counts = np.bincount(self.keys, minlength=self.n * self.n)
        self.ends = np.cumsum(counts)
        self.starts = self.ends - counts

    def _check(self, radius):
        if self.n >= 3 and radius > self.side * (1 + 1e-12):
            raise ValueError("query radius exceeds the hash cell side")

    def pairs(self, radius: float) -> tuple[np.ndarray, np.ndarray]:
        """All pairs ``i < j`` within ``radius``, sorted lexicographically."""
        self._check(radius)
        if len(self.positions) < 2:
            empty = np.empty(0, dtype=np.int64)
            return empty, empty
        i, j = _grid_pairs(self.positions, self.keys, self.starts, self.ends, self.order,
                           self.n, float(self.L), self.periodic, float(radius))
        order = np.lexsort((j, i))
        return i[order], j[order]

    def query(self, index: int, radius: float) -> np.ndarray:
        """Sorted indices of points within ``radius`` of point ``index`` (itself excluded)."""
        self._check(radius)
        n = self.n
        if n < 3:
            cand = np.arange(len(self.positions))
        else:
            ci, cj = self.ij[index]
            chunks = []
            for dx in (-1, 0, 1):
                for dy in (-1, 0, 1):
                    ni, nj = ci + dx, cj + dy
                    if self.periodic:
                        ni %= n
                        nj %= n
                    elif not (0 <= ni < n and 0 <= nj < n):
                        continue
                    key = ni * n + nj
                    chunks.append(self.order[self.starts[key]:self.ends[key]])
            cand = np.concatenate(chunks)
        d = displacement(self.positions[index], self.positions[cand], self.L, self.periodic)
        hit = cand[(np.einsum("ij,ij->i", d, d) <= radius * radius) & (cand != index)]
        hit.sort()
        return hit


@dataclass
class InteractionGraph:
    n: int
    adjacency: list[np.ndarray]

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(i, int(j)) for i, nbrs in enumerate(self.adjacency) for j in nbrs if i < j]

    def degrees(self) -> np.ndarray:
        return np.array([len(a) for a in self.adjacency])

    def mean_degree(self) -> float:
        return float(self.degrees().mean()) if self.n else 0.0

    def write_edge_list(self, path) -> None:
        """Write one ``i j`` line per undirected edge (``i < j``)."""
        with open(path, "w") as fh:
            for i, j in self.edges:
                fh.write(f"{i} {j}\n")


def graph_from_pairs(n: int, i: np.ndarray, j: np.ndarray) -> InteractionGraph:
    src = np.concatenate((i, j))
    dst = np.concatenate((j, i))
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    bounds = np.searchsorted(src, np.arange(n + 1))
    return InteractionGraph(n, [dst[bounds[k]:bounds[k + 1]] for k in range(n)])


def build_graph(positions: np.ndarray, d_i: float, L: float, periodic: bool) -> InteractionGraph:
    positions = np.asarray(positions, dtype=float)
    if periodic and d_i > L / 2:
        raise ValueError("periodic interaction range must satisfy d_i <= L/2")
    i, j = SpatialHash(positions, d_i, L, periodic).pairs(d_i)
    return graph_from_pairs(len(positions), i, j)


def expected_avg_degree(N: int, L: float, d_i: float) -> float:
    return math.pi * N * d_i ** 2 / L ** 2


def critical_sizes(L: float, d_i: float) -> tuple[int, int]:
    """Group sizes at mean degree 1 and at the percolation threshold.

    ``N1`` is the nearest integer to unit degree; ``Nc`` is the largest group
    whose mean degree does not exceed ``PERCOLATION_DEGREE``.
    """
    unit = L ** 2 / (math.pi * d_i ** 2)
    return int(round(unit)), int(math.floor(PERCOLATION_DEGREE * unit))


def components(graph: InteractionGraph) -> tuple[list[int], float]:
    """Component sizes (descending) and the giant-component fraction."""
    if graph.n == 0:
        return [], 0.0
    deg = graph.degrees()
    rows = np.repeat(np.arange(graph.n), deg)
    cols = np.concatenate(graph.adjacency) if deg.sum() else np.empty(0, dtype=np.intp)
    mat = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(graph.n, graph.n))
    _, labels = connected_components(mat, directed=False)
    sizes = sorted(np.bincount(labels).tolist(), reverse=True)
    return sizes, sizes[0] / graph.n
