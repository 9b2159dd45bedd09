"""Deterministic seed derivation for multi-stage randomized runs.

A single master seed must reproduce an entire run, including every retry
of every stage, on any platform. Python's hash() is salted per process,
so stage seeds are derived by hashing a label tuple with sha256 instead.
"""

from __future__ import annotations

import hashlib


def derive_seed(master: int, *labels: object) -> int:
    """Return a 64-bit seed determined by ``master`` and the label path.

    Labels are joined by '|' after str() conversion, so distinct label
    tuples that stringify identically would collide; callers use fixed
    literal strings and small ints, which cannot.
    """
    text = "|".join(str(part) for part in (master, *labels))
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")
