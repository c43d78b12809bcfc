"""Deterministic, counter-based randomness.

Every stochastic component keys its stream off a hash of (seed, purpose,
context) rather than off shared mutable RNG state. Tournaments over
different prompts, trials, and individual matches therefore produce
identical results regardless of execution order or thread count.
"""

from __future__ import annotations

import hashlib

import numpy as np

_SEP = b"\x1f"


def _encode(parts: tuple) -> bytes:
    chunks = []
    for part in parts:
        if isinstance(part, bytes):
            chunks.append(part)
        elif isinstance(part, (str, int, float)):
            chunks.append(str(part).encode("utf-8"))
        else:
            raise TypeError(f"unhashable seed part: {part!r}")
    return _SEP.join(chunks)


def derive_seed(*parts: str | int | float | bytes) -> int:
    """Collapse arbitrary context into a stable 64-bit seed."""
    digest = hashlib.blake2b(_encode(parts), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def rng_from(*parts: str | int | float | bytes) -> np.random.Generator:
    """A fresh PCG64 generator keyed by the given context."""
    return np.random.Generator(np.random.PCG64(derive_seed(*parts)))


def unit_uniform(*parts: str | int | float | bytes) -> float:
    """One uniform draw in [0, 1) keyed by the given context.

    Cheaper than constructing a generator; used for per-match outcome
    draws where exactly one variate is needed.
    """
    # Top 53 bits of the digest give a full-precision float mantissa.
    return (derive_seed(*parts) >> 11) / float(1 << 53)
