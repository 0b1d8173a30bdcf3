"""Shared test helpers: coin-pattern enumeration and sequence builders."""

from __future__ import annotations

import itertools

import numpy as np
import pytest

from adaptive_design import OutcomeSequence, run_design


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def constant_sequence(y1: float, y0: float, rounds: int) -> OutcomeSequence:
    return OutcomeSequence(np.full(rounds, float(y1)), np.full(rounds, float(y0)))


def enumerate_coin_patterns(design_factory, seq):
    """Yield (probability, trajectory) over all 2^T coin patterns.

    The probability weights each pattern by the propensities the design
    actually emitted along that path, so expectations computed this way are
    exact (no Monte Carlo error).
    """
    rounds = len(seq)
    for pattern in itertools.product((0, 1), repeat=rounds):
        traj = run_design(design_factory(), seq, coins=pattern)
        prob = 1.0
        for p, z in zip(traj.propensities, pattern):
            prob *= p if z == 1 else 1.0 - p
        yield prob, traj
