"""Naming-game state machine: words, inventories, speaker and hearer rules.

Only the hearer updates its inventory; the speaker broadcasts a word picked
uniformly from its own inventory, inventing one if the inventory is empty.
"""
from __future__ import annotations

from typing import MutableSequence, NamedTuple

import numpy as np


class Word(NamedTuple):
    """Opaque word token. ``(creator, serial)`` is unique across a run."""

    creator: int
    serial: int

    def __str__(self) -> str:
        return f"{self.creator}:{self.serial}"

    @classmethod
    def parse(cls, text: str) -> "Word":
        creator, serial = text.split(":")
        return cls(int(creator), int(serial))


Inventory = list  # ordered, duplicate-free list of Word


def invent_word(agent_id: int, counters: MutableSequence[int]) -> Word:
    """Return a fresh word for ``agent_id`` and bump its serial counter."""
    word = Word(agent_id, int(counters[agent_id]))
    counters[agent_id] += 1
    return word


def speaker_select(inv: list[Word], agent_id: int, counters: MutableSequence[int],
                   rng: np.random.Generator) -> tuple[Word, list[Word]]:
    if not inv:
        word = invent_word(agent_id, counters)
        return word, [word]
    if len(inv) == 1:
        return inv[0], inv
    return inv[int(rng.integers(len(inv)))], inv


def hearer_update(inv: list[Word], word: Word) -> tuple[list[Word], bool]:
    """Collapse to ``[word]`` if it is known, otherwise append it."""
    if word in inv:
        return [word], True
    return inv + [word], False
