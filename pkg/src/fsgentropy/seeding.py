"""Deterministic RNG stream derivation.

Every stochastic task derives its own generator from (master seed, path),
where the path encodes what the stream is for (which trajectory word,
which omega sample, ...).  Results are therefore independent of
evaluation order and of any parallel scheduling, and two runs with the
same seed are bit-identical.
"""

from __future__ import annotations

import numpy as np

# Stream-kind tags used as the first path component.
MU = 0        # drawing sample points from the reference measure
UPSILON = 1   # trajectory-driving words in correlation sums
OMEGA = 2     # words for the outer symbol-space average
POINT = 3     # auxiliary single-point draws (e.g. a starting point)


def substream(seed: int, *path: int) -> np.random.Generator:
    """Return the generator for (seed, path).

    The pair is fed to numpy's SeedSequence as an entropy tuple, so
    distinct paths give statistically independent streams.
    """
    return np.random.default_rng([int(seed)] + [int(p) for p in path])
