"""Deterministic fan-out of one master seed into independent substreams.

Every random draw in the package flows from a single integer seed. Distinct
purposes (dataset synthesis, network init, per-epoch noise, Monte Carlo rows)
get their own derived seed so adding a consumer never shifts the stream seen
by another. Derivation hashes the decimal seed and the purpose tags with
SHA-256, which is stable across platforms and interpreter runs, unlike the
built-in ``hash``.
"""

from __future__ import annotations

import hashlib

__all__ = ["derive_seed"]


def derive_seed(base_seed: int, *tags: object) -> int:
    """Derive a 64-bit child seed from ``base_seed`` and a tag path.

    Tags are joined with ``/`` after ``str()`` conversion, so
    ``derive_seed(7, "train-toy", "epoch", 3)`` hashes ``"7/train-toy/epoch/3"``.
    """
    digest = hashlib.sha256()
    digest.update(str(int(base_seed)).encode("ascii"))
    for tag in tags:
        digest.update(b"/")
        digest.update(str(tag).encode("utf-8"))
    return int.from_bytes(digest.digest()[:8], "little")
