"""Deterministic random-stream construction for studies.

Every random draw in the simulation code comes from a stream identified by
an integer seed plus a path of non-negative integers (replicate index,
stage, ...).  The same (seed, path) always produces the same PCG64 stream,
so replicate-level work can run in any order, or in parallel, without
changing results.
"""

import numpy as np


def substream(seed, *path):
    """Return a ``numpy.random.Generator`` for the given seed and path."""
    return np.random.default_rng([int(seed)] + [int(p) for p in path])
