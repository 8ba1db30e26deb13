"""Counter-based random streams.

Replicate ``i`` of a run seeded with ``seed`` always reads the same block of
Philox output, located at counter ``i * blocks_per_replicate``.  Any split of
the replicate range across workers therefore reproduces the serial draws bit
for bit.
"""

import numpy as np
from numpy.random import Generator, Philox

from .errors import ArgumentError

_MASK64 = (1 << 64) - 1
_WORDS_PER_BLOCK = 4  # Philox4x64 emits four 64-bit words per counter step
_STREAM_SHIFT = 192  # top counter word selects an auxiliary stream


def _check_seed(seed):
    if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool):
        raise ArgumentError(f"seed must be an integer, got {seed!r}")
    seed = int(seed)
    if seed < 0 or seed > _MASK64:
        raise ArgumentError(f"seed must fit in 64 unsigned bits, got {seed}")
    return seed


def uniforms(seed, start, count, width):
    """Open-interval uniforms for replicates ``start .. start+count-1``.

    Returns an array of shape ``(count, width)``; row ``j`` depends only on
    ``(seed, start + j)``.
    """
    seed = _check_seed(seed)
    if start < 0 or count < 0 or width < 1:
        raise ArgumentError("start, count must be >= 0 and width >= 1")
    blocks = -(-width // _WORDS_PER_BLOCK)
    bitgen = Philox(key=seed, counter=int(start) * blocks)
    raw = bitgen.random_raw(int(count) * blocks * _WORDS_PER_BLOCK)
    raw = raw.reshape(int(count), blocks * _WORDS_PER_BLOCK)[:, :width]
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def stream_generator(seed, stream):
    """A ``numpy.random.Generator`` for auxiliary draws (probes, nesting
    samples) that never overlaps the replicate streams of the same seed."""
    seed = _check_seed(seed)
    if not 1 <= stream < (1 << 62):
        raise ArgumentError("stream id must be a positive integer")
    return Generator(Philox(key=seed, counter=int(stream) << _STREAM_SHIFT))
