"""Discrete-time simulation of the concurrent broadcast naming game.

Every step, for all agents at once: increment the clock, move (turning on
the reorientation schedule), hear the words broadcast by neighbours during
the previous step in a per-agent random order, then let the agents whose
speaking phase comes up broadcast one word to everyone currently within
range.  Broadcasts therefore arrive exactly one step after they are sent.

Randomness is split into independent streams derived from the run seed:
placement, speaking phases, motion, channel losses, and one stream per
agent for word choice and inbox shuffling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import NamedTuple, Optional, TextIO

import numpy as np

from .arena import (Arena, advance_blocked, grid_cells, grid_place, resolve_collisions,
                    uniform_place, wrap)
from .metrics import RunResult, SeriesSample, memory_metric
from .mobility import MotionParams, embodied_step, point_step, random_walk_controller
from .network import SpatialHash, build_graph
from .words import Word, hearer_update, speaker_select

MODELS = {"point": "periodic", "embodied": "walled"}
LOSS_POLICIES = ("none", "iid")
SPEAK_PHASES = ("shared", "staggered")
BATCH_QUERY = 8  # above this many speakers, build the whole range graph


class ConfigError(ValueError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


def steps_for(seconds: float, dt: float, name: str) -> int:
    """Convert a duration into a whole number of steps of ``dt``."""
    n = seconds / dt
    k = int(round(n))
    if k < 1 or abs(n - k) > 1e-9 * max(1.0, n):
        raise ConfigError([f"{name}={seconds:g} s is not a positive integer multiple of dt={dt:g} s"])
    return k


@dataclass(frozen=True)
class SimConfig:
    N: int = 50
    L: float = 1.0
    d_i: float = 0.1
    model: str = "point"
    boundary: str = ""
    v: float = 0.01
    omega: float = math.pi / 5
    sigma: float = 0.4
    dt: float = 0.1
    n_m: int = 100
    n_s: int = 100
    body_radius: float = 0.0165
    loss_policy: str = "none"
    loss_p: float = 0.0
    seed: int = 0
    max_steps: int = 10 ** 7
    speak_phase: str = "staggered"
    series_every: int = 10
    grid_margin: float = 0.1

    def __post_init__(self):
        if not self.boundary and self.model in MODELS:
            object.__setattr__(self, "boundary", MODELS[self.model])
        problems = self.problems()
        if problems:
            raise ConfigError(problems)

    @classmethod
    def from_times(cls, tau_m: float = 10.0, tau_s: float = 10.0, **kwargs) -> "SimConfig":
        dt = kwargs.get("dt", cls.dt)
        problems = []
        n = {}
        for name, tau in (("tau_m", tau_m), ("tau_s", tau_s)):
            try:
                n[name] = steps_for(tau, dt, name)
            except ConfigError as exc:
                problems += exc.problems
        if problems:
            raise ConfigError(problems)
        return cls(n_m=n["tau_m"], n_s=n["tau_s"], **kwargs)

    def problems(self) -> list[str]:
        out = []
        if not isinstance(self.N, (int, np.integer)) or self.N < 1:
            out.append("N must be a positive integer")
        if not self.L > 0:
            out.append("L must be positive")
        if not self.d_i > 0:
            out.append("d_i must be positive")
        if self.model not in MODELS:
            out.append(f"model must be one of {sorted(MODELS)}")
        elif self.boundary != MODELS[self.model]:
            out.append(f"model={self.model} requires boundary={MODELS[self.model]}, got {self.boundary}")
        if self.boundary == "periodic" and self.L > 0 and self.d_i > self.L / 2:
            out.append("d_i must not exceed L/2 on a periodic arena")
        if self.v < 0:
            out.append("v must be non-negative")
        if not self.omega > 0:
            out.append("omega must be positive")
        if self.sigma < 0:
            out.append("sigma must be non-negative")
        if not self.dt > 0:
            out.append("dt must be positive")
        for name in ("n_m", "n_s", "max_steps"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                out.append(f"{name} must be a positive integer")
        if self.model == "embodied" and self.L > 0:
            if not 0 < 2 * self.body_radius < self.L:
                out.append("body_radius must satisfy 0 < 2r < L")
            elif self.grid_margin >= 0:
                n, _ = grid_cells(Arena(self.L, "walled", self.body_radius), self.grid_margin)
                if isinstance(self.N, (int, np.integer)) and self.N > n * n:
                    out.append(f"N={self.N} exceeds the {n * n} placement cells of the arena")
        if self.grid_margin < 0:
            out.append("grid_margin must be non-negative")
        if self.loss_policy not in LOSS_POLICIES:
            out.append(f"loss_policy must be one of {LOSS_POLICIES}")
        if not 0.0 <= self.loss_p <= 1.0:
            out.append("loss_p must lie in [0, 1]")
        elif self.loss_policy == "none" and self.loss_p != 0:
            out.append("loss_p > 0 requires loss_policy=iid")
        if self.speak_phase not in SPEAK_PHASES:
            out.append(f"speak_phase must be one of {SPEAK_PHASES}")
        if not 0 <= self.seed < 2 ** 64:
            out.append("seed must be an unsigned 64-bit integer")
        if self.series_every < 0:
            out.append("series_every must be >= 0")
        return out

    @property
    def tau_m(self) -> float:
        return self.n_m * self.dt

    @property
    def tau_s(self) -> float:
        return self.n_s * self.dt

    @property
    def motion(self) -> MotionParams:
        return MotionParams(self.v, self.omega, self.sigma, self.dt, self.n_m)

    @property
    def arena(self) -> Arena:
        if self.model == "point":
            return Arena(self.L, "periodic", 0.0)
        return Arena(self.L, "walled", self.body_radius)

    def replace(self, **changes) -> "SimConfig":
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        if "model" in changes and "boundary" not in changes:
            values["boundary"] = ""
        values.update(changes)
        return SimConfig(**values)


class Message(NamedTuple):
    word: Word
    sender: int
    sent_at: int


@dataclass
class SimState:
    n_t: int
    positions: np.ndarray
    headings: np.ndarray
    targets: np.ndarray
    inventories: list[list[Word]]
    counters: list[int]
    rngs: list[np.random.Generator]
    phases: np.ndarray
    speakers_by_phase: list[np.ndarray]
    motion_rng: np.random.Generator
    channel_rng: np.random.Generator
    max_inventory: list[int]
    # (receiver, message) pairs to deliver next step
    in_flight: list[tuple[int, Message]] = field(default_factory=list)
    holders: dict[Word, int] = field(default_factory=dict)
    total_words: int = 0
    peak_total: int = 0
    log: Optional[TextIO] = None

    @property
    def N(self) -> int:
        return len(self.inventories)


def init_state(config: SimConfig, log: Optional[TextIO] = None) -> SimState:
    N = config.N
    streams = np.random.SeedSequence(config.seed).spawn(4 + N)
    place_rng, phase_rng, motion_rng, channel_rng = (np.random.default_rng(s) for s in streams[:4])
    if config.model == "point":
        positions, headings = uniform_place(N, config.L, place_rng)
    else:
        positions, headings = grid_place(N, config.arena, place_rng, config.grid_margin)
    if config.speak_phase == "shared":
        phases = np.zeros(N, dtype=np.int64)
    else:
        phases = phase_rng.integers(0, config.n_s, N)
    by_phase = [np.empty(0, dtype=np.int64)] * config.n_s
    for p in np.unique(phases):
        by_phase[p] = np.flatnonzero(phases == p)
    return SimState(
        n_t=0,
        positions=positions,
        headings=headings,
        targets=headings.copy(),
        inventories=[[] for _ in range(N)],
        counters=[0] * N,
        rngs=[np.random.default_rng(s) for s in streams[4:]],
        phases=phases,
        speakers_by_phase=by_phase,
        motion_rng=motion_rng,
        channel_rng=channel_rng,
        max_inventory=[0] * N,
        log=log,
    )


def loss_mask(n: int, policy: str, p: float, rng: np.random.Generator) -> np.ndarray:
    if policy == "none":
        return np.ones(n, dtype=bool)
    if policy == "iid":
        return rng.random(n) >= p
    raise ValueError(f"unknown loss policy {policy!r}")


def apply_loss(messages: list, policy: str, rng: np.random.Generator, p: float = 0.0) -> list:
    """Drop each (message, receiver) delivery independently with probability ``p``."""
    keep = loss_mask(len(messages), policy, p, rng)
    return [m for m, k in zip(messages, keep) if k]


def _emit(state: SimState, kind: str, agents, word="-") -> None:
    state.log.write(f"{state.n_t} {kind} {agents} {word}\n")


def _hear(state: SimState, agent: int, word: Word) -> None:
    old = state.inventories[agent]
    new, success = hearer_update(old, word)
    holders = state.holders
    if success:
        for w in old:
            if w != word:
                left = holders[w] - 1
                if left:
                    holders[w] = left
                else:
                    del holders[w]
        state.total_words -= len(old) - 1
    else:
        holders[word] = holders.get(word, 0) + 1
        state.total_words += 1
        if len(new) > state.max_inventory[agent]:
            state.max_inventory[agent] = len(new)
    state.inventories[agent] = new


def _speak(state: SimState, agent: int) -> Word:
    old = state.inventories[agent]
    word, new = speaker_select(old, agent, state.counters, state.rngs[agent])
    if new is not old:
        state.holders[word] = state.holders.get(word, 0) + 1
        state.total_words += 1
        state.max_inventory[agent] = max(state.max_inventory[agent], len(new))
        state.inventories[agent] = new
    return word


def _move(state: SimState, config: SimConfig) -> None:
    n_t = state.n_t
    if config.model == "point":
        pos, state.headings = point_step(state.positions, state.headings, config.motion,
                                         n_t, state.motion_rng)
        state.positions = wrap(pos, config.L)
    else:
        state.targets = random_walk_controller(state.targets, n_t, config.n_m, state.motion_rng)
        pos, state.headings, _ = embodied_step(state.positions, state.headings, state.targets,
                                               config.motion, state.motion_rng)
        arena = config.arena
        pos = advance_blocked(state.positions, pos - state.positions, config.body_radius, arena)
        state.positions, _ = resolve_collisions(pos, config.body_radius, arena)
    if state.log is not None and n_t % config.n_m == 0:
        for a in range(state.N):
            _emit(state, "turn", a)


def _deliver(state: SimState, config: SimConfig) -> None:
    deliveries, state.in_flight = state.in_flight, []
    keep = loss_mask(len(deliveries), config.loss_policy, config.loss_p, state.channel_rng)
    inbox: dict[int, list[Word]] = {}
    for (receiver, msg), ok in zip(deliveries, keep):
        if ok:
            inbox.setdefault(receiver, []).append(msg.word)
        elif state.log is not None:
            _emit(state, "drop", f"{receiver},{msg.sender}", msg.word)
    for receiver in sorted(inbox):
        words = inbox[receiver]
        if len(words) > 1:
            state.rngs[receiver].shuffle(words)
        for w in words:
            if state.log is not None:
                _emit(state, "deliver", receiver, w)
            _hear(state, receiver, w)


def neighbourhoods(positions: np.ndarray, agents, config: SimConfig) -> dict[int, np.ndarray]:
    """Agents within ``d_i`` of each listed agent on the current snapshot."""
    periodic = config.boundary == "periodic"
    if len(agents) > BATCH_QUERY:
        adj = build_graph(positions, config.d_i, config.L, periodic).adjacency
        return {int(a): adj[a] for a in agents}
    grid = SpatialHash(positions, config.d_i, config.L, periodic)
    return {int(a): grid.query(int(a), config.d_i) for a in agents}


def step(state: SimState, config: SimConfig) -> SimState:
    """Advance the world by one step of ``dt`` (mutates and returns ``state``)."""
    state.n_t += 1
    _move(state, config)
    if state.in_flight:
        _deliver(state, config)
    speakers = state.speakers_by_phase[state.n_t % config.n_s]
    if len(speakers):
        nbrs = neighbourhoods(state.positions, speakers, config)
        n_t = state.n_t
        for a in speakers.tolist():
            word = _speak(state, a)
            if state.log is not None:
                _emit(state, "broadcast", a, word)
            msg = Message(word, a, n_t)
            state.in_flight.extend((b, msg) for b in nbrs[a].tolist())
    if state.total_words > state.peak_total:
        state.peak_total = state.total_words
    return state


def check_convergence(state: SimState) -> bool:
    """All agents hold the same single word and nothing else is in flight."""
    if state.total_words != state.N or len(state.holders) != 1:
        return False
    (word,) = state.holders
    return all(msg.word == word for _, msg in state.in_flight)


def _sample(state: SimState, config: SimConfig) -> SeriesSample:
    singles = sum(1 for inv in state.inventories if len(inv) == 1)
    return SeriesSample(state.n_t * config.dt, len(state.holders), state.total_words,
                        singles / state.N)


def run(config: SimConfig, log: Optional[TextIO] = None, trajectory_every: int = 0) -> RunResult:
    """Simulate until consensus or ``max_steps``; bit-reproducible for a given config."""
    state = init_state(config, log)
    every = config.series_every
    series = [_sample(state, config)] if every else None
    frames = [state.positions.copy()] if trajectory_every else None
    converged = False
    while state.n_t < config.max_steps:
        step(state, config)
        converged = check_convergence(state)
        if converged:
            break
        if every and state.n_t % every == 0:
            series.append(_sample(state, config))
        if trajectory_every and state.n_t % trajectory_every == 0:
            frames.append(state.positions.copy())
    final_word = None
    if converged:
        (final_word,) = state.holders
        if every:
            series.append(_sample(state, config))
        if log is not None:
            _emit(state, "converge", "-", final_word)
    return RunResult(
        converged=converged,
        t_c=state.n_t * config.dt if converged else None,
        M=memory_metric(state.max_inventory),
        M_alt=state.peak_total / state.N,
        steps=state.n_t,
        distinct_final=len(state.holders),
        words_created=sum(state.counters),
        final_word=final_word,
        max_inventory=list(state.max_inventory),
        series=series,
        trajectories=np.stack(frames, axis=1) if frames else None,
    )
