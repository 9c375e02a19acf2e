"""Seeded, purpose-split random streams.

Every stochastic consumer asks for its own stream keyed by ``(seed, purpose,
*extra)``.  Streams are Philox (counter-based) generators whose key is a
stable hash of that tuple, so two jobs never share a stream and results do not
depend on call order between purposes.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["stream", "stream_key"]


def stream_key(seed: int, purpose: str, *extra: object) -> int:
    text = "|".join([str(int(seed)), purpose, *(str(e) for e in extra)])
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:16], "little")


def stream(seed: int, purpose: str, *extra: object) -> np.random.Generator:
    """Return an independent generator for ``purpose`` under ``seed``."""
    return np.random.Generator(np.random.Philox(key=stream_key(seed, purpose, *extra)))
