"""Seed derivation.

Every random stream in an experiment is seeded by

    derive_seed(base, *parts) = first 8 bytes (little endian) of
        BLAKE2b(digest_size=8) over the parts, each encoded as
        ``repr(part)`` and joined by 0x1f

so a stream depends only on its own coordinates (e.g. ``"run", graph_id,
run_id, algorithm``) and never on how many other streams exist.
"""

from __future__ import annotations

import hashlib

MASK64 = (1 << 64) - 1


def derive_seed(base: int, *parts) -> int:
    h = hashlib.blake2b(digest_size=8)
    h.update(repr(int(base) & MASK64).encode())
    for p in parts:
        h.update(b"\x1f")
        h.update(repr(p).encode())
    return int.from_bytes(h.digest(), "little")
