"""Splittable random streams.

A stream is a :class:`numpy.random.SeedSequence`. Child streams are derived
purely from ``(parent, label, index)`` so the same request always yields the
same child, regardless of call order or which process asks.
"""
from __future__ import annotations

import zlib

import numpy as np

Stream = np.random.SeedSequence


def as_stream(seed) -> Stream:
    """Coerce an int, a SeedSequence, or None into a stream."""
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if seed is None:
        return np.random.SeedSequence()
    if isinstance(seed, (int, np.integer)):
        if seed < 0:
            raise ValueError(f"seed must be non-negative, got {seed}")
        return np.random.SeedSequence(int(seed))
    raise TypeError(f"cannot build a random stream from {type(seed).__name__}")


def substream(stream, label: str, index: int = 0) -> Stream:
    """Child stream keyed by a purpose label and an integer index."""
    parent = as_stream(stream)
    key = (zlib.crc32(label.encode("utf-8")), int(index))
    return np.random.SeedSequence(parent.entropy, spawn_key=tuple(parent.spawn_key) + key)


def generator(stream) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(as_stream(stream)))
