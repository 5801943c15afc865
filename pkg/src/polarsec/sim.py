"""Reproducible per-trial random streams and block sampling."""

from __future__ import annotations

import numpy as np

from .channel import Dmc


def trial_rng(seed: int, trial: int, stream: int = 0) -> np.random.Generator:
    """Generator for one trial; depends only on (seed, stream, trial)."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream), int(trial)))
    return np.random.Generator(np.random.PCG64(ss))


def sample_uniform_blocks(w: Dmc, spec, seed: int, start: int, stop: int, stream: int = 0):
    """Uniform input blocks u and outputs y of ``w`` for trials ``start..stop-1``."""
    from .transform import encode_transform

    N, q = spec.N, spec.q
    us = np.empty((stop - start, N), dtype=np.int64)
    ys = np.empty((stop - start, N), dtype=np.int64)
    for row, t in enumerate(range(start, stop)):
        rng = trial_rng(seed, t, stream)
        us[row] = rng.integers(q, size=N)
        ys[row] = w.sample(encode_transform(us[row], spec), rng)
    return us, ys
