"""Concurrent broadcast naming game on mobile point agents and embodied disk robots."""
from .arena import Arena, CollisionError, grid_place, resolve_collisions, uniform_place, wrap
from .engine import (ConfigError, Message, SimConfig, SimState, apply_loss, check_convergence,
                     init_state, run, step)
from .experiments import ExperimentSpec, parse_spec, preset, run_sweep, summarize
from .metrics import (RunResult, estimate_diffusion, fit_power_law, memory_metric,
                      rescaled_broadcasts)
from .mobility import MotionParams, simulate_walkers
from .network import (InteractionGraph, build_graph, components, critical_sizes,
                      expected_avg_degree)
from .words import Word, hearer_update, invent_word, speaker_select

__version__ = "0.1.0"
