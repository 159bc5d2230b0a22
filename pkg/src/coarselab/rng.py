"""Named random streams derived from a single experiment seed.

Every stage draws from its own substream keyed by (stage name, member
index), so adding a stage or member never perturbs the randomness seen
by earlier ones.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _stream_key(name: str) -> int:
    digest = hashlib.sha256(name.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def substream(seed: int, stage: str, member: int = 0) -> np.random.Generator:
    """Generator for one (stage, member) slot of the master seed."""
    ss = np.random.SeedSequence([int(seed), _stream_key(stage), int(member)])
    return np.random.default_rng(ss)
