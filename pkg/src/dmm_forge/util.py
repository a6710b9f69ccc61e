"""Small shared helpers: seed derivation and integer apportionment."""

from __future__ import annotations

import numpy as np


def derive_seed(*parts: int) -> int:
    """Mix non-negative integer parts into one reproducible RNG seed."""
    seq = np.random.SeedSequence([int(p) for p in parts])
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def spawn_rng(*parts: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(p) for p in parts]))


def largest_remainder(weights, total: int) -> list[int]:
    """Split ``total`` units proportionally to integer ``weights``.

    Floor-then-largest-remainder: exact integer arithmetic, so results are
    stable under permutation-invariant ties. Remainder units go to the largest
    fractional parts; exact ties are broken toward the lower index. The
    returned list always sums to ``total``.
    """
    weights = [int(w) for w in weights]
    if total < 0:
        raise ValueError("total must be non-negative")
    if any(w < 0 for w in weights):
        raise ValueError("weights must be non-negative")
    wsum = sum(weights)
    if wsum <= 0:
        raise ValueError("weights must sum to a positive value")
    base = [total * w // wsum for w in weights]
    frac = [total * w % wsum for w in weights]
    leftover = total - sum(base)
    order = sorted(range(len(weights)), key=lambda i: (-frac[i], i))
    for i in order[:leftover]:
        base[i] += 1
    return base
