"""Engine harnesses shared by several test modules."""
import numpy as np

from namegame.engine import SimConfig, init_state, step


def static_config(N, seed=0, **kw):
    """Motionless agents that all speak every step in the same phase."""
    base = dict(N=N, v=0.0, n_s=1, speak_phase="shared", seed=seed, series_every=0)
    base.update(kw)
    return SimConfig(**base)


def static_state(config, positions):
    state = init_state(config)
    state.positions = np.asarray(positions, dtype=float).copy()
    return state


def inventories_after_rounds(N, rounds, seed, positions=None):
    """Joint inventory (as creator-id frozensets) after ``rounds`` hearing rounds.

    Words spoken in step k are heard in step k+1, so round k is complete
    once step k+1 has run.
    """
    if positions is None:
        positions = 0.5 + 0.01 * np.arange(N)[:, None] * np.array([[1.0, 0.0]])
    config = static_config(N, seed)
    state = static_state(config, positions)
    for _ in range(rounds + 1):
        step(state, config)
    return tuple(frozenset(w.creator for w in inv) for inv in state.inventories)
