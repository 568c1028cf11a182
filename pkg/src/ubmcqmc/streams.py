"""Reproducible random-number streams keyed by (seed, chain, role).

Every chain draws from counter-based Philox generators spawned off a single
master seed, so results never depend on scheduling or parallelism degree and
streams for different chains/roles never collide.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np


class Role(IntEnum):
    """Stream roles within one coupled chain."""

    INIT_X = 0      # X_0 draw from pi_0
    INIT_Y = 1      # Y_0 draw from pi_0
    BURNIN = 2      # iid driving rows t = 1..k-1
    OVERFLOW = 3    # iid driving rows t > m
    X_CONTINUE = 4  # iid continuation randomness inside X updates (PG rejections)
    Y_CHAIN = 5     # residual redraws for the Y chain
    COUPLING = 6    # acceptance uniforms w, w' in maximal coupling
    RANDOMIZE = 7   # per-chain matrix randomization (shift z, Liao permutation)


def stream(seed: int, chain: int, role: Role) -> np.random.Generator:
    """Generator for one (chain, role) pair under a master seed."""
    ss = np.random.SeedSequence(seed, spawn_key=(int(chain), int(role)))
    return np.random.Generator(np.random.Philox(ss))


@dataclass
class ChainStreams:
    """The full set of per-chain generators used by a coupled run."""

    init_x: np.random.Generator
    init_y: np.random.Generator
    burnin: np.random.Generator
    overflow: np.random.Generator
    x_continue: np.random.Generator
    y_chain: np.random.Generator
    coupling: np.random.Generator
    randomize: np.random.Generator

    @classmethod
    def for_chain(cls, seed: int, chain: int) -> "ChainStreams":
        return cls(*(stream(seed, chain, role) for role in Role))
