"""Deterministic seed derivation for replicated experiments.

Child seeds come from a splitmix64 finalizer applied to (base, index), so
replicate i always gets the same seed no matter how many replicates run,
and nested derivations (per length, per replicate) stay independent.
"""

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def derive_seed(base: int, index: int) -> int:
    """Derive the 64-bit child seed for a given replicate index."""
    z = (int(base) + (int(index) + 1) * _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)
