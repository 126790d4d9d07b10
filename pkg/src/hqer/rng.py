"""Seeded random streams.

All randomness goes through :func:`make_rng`, which builds a numpy
``Generator`` on the Philox counter-based bit generator.  Substreams are
addressed by a tuple of non-negative integers (replicate index, split
index, ...) so results do not depend on execution order.
"""
import numpy as np


def make_rng(seed, *stream):
    """Return a Philox-backed generator for ``seed`` and substream ``stream``.

    Examples
    --------
    >>> a = make_rng(7, 3).standard_normal(2)
    >>> b = make_rng(7, 3).standard_normal(2)
    >>> bool((a == b).all())
    True
    """
    if seed is None:
        raise ValueError("an explicit integer seed is required")
    seed = int(seed)
    if seed < 0:
        raise ValueError("seed must be non-negative")
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(ss))
