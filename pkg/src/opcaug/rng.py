"""Deterministic random substreams.

Every source of randomness in the project flows from one integer seed.
Child streams are derived by hashing a path of labels, e.g.
``substream(seed, "augment", epoch, sample_id)``, so results do not
depend on iteration order and independent runs with the same seed are
bit-identical.
"""

import hashlib

import numpy as np


def derive_seed(*parts) -> int:
    """Hash a path of labels into a stable 64-bit seed."""
    text = "/".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def substream(*parts) -> np.random.Generator:
    """A fresh PCG64 generator seeded from the label path."""
    return np.random.default_rng(derive_seed(*parts))
