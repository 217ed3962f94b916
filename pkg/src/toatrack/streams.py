"""Deterministic random-stream derivation for parallel Monte Carlo work.

Every random draw in the simulator comes from a generator derived from a
single root seed plus an integer key path (e.g. ``(run, STREAM_FRAME, t)``).
Streams are independent of execution order, so results are identical whether
runs execute serially or on a thread pool.
"""

from __future__ import annotations

import numpy as np

# Key-path tags for the per-run sub-streams used by the harness.
STREAM_TRAJECTORY = 0
STREAM_FRAME = 1


def substream(root_seed: int, *key: int) -> np.random.Generator:
    """Return the generator for the stream identified by (root_seed, *key).

    Uses SeedSequence spawn keys, so distinct key paths give statistically
    independent streams and the same path always gives the same stream.
    """
    return np.random.default_rng(np.random.SeedSequence(root_seed, spawn_key=tuple(key)))
