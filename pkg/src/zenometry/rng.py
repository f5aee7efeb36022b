"""Counter-based random streams for reproducible, order-independent sampling."""

from __future__ import annotations

import numpy as np

# Domain tags keep streams for different purposes disjoint under one seed.
FRINGE_SETTINGS = 1
MONTE_CARLO_TRIALS = 2

_INDEX_BITS = 48


def substream(seed: int, domain: int, index: int) -> np.random.Generator:
    """Independent generator keyed by ``(seed, domain, index)``.

    Streams are Philox counter-based: draws from ``substream(s, d, i)`` are
    unaffected by draws from any other ``(domain, index)`` pair, so work items
    may run in any order (or concurrently) and still reproduce the sequential
    results bit for bit.
    """
    seed = int(seed)
    domain = int(domain)
    index = int(index)
    if not 0 <= seed < 2**64:
        raise ValueError("seed must fit in an unsigned 64-bit integer")
    if domain < 0 or index < 0 or index >= 2**_INDEX_BITS:
        raise ValueError("stream index out of range")
    key = np.array([seed, (domain << _INDEX_BITS) | index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
