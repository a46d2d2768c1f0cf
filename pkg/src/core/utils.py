import hashlib
from typing import Sequence, Tuple, Union

import numpy as np

from src.core.errors import ValidationError

SeedKey = Union[int, str]


def _key_to_int(key: SeedKey) -> int:
    if isinstance(key, (int, np.integer)):
        if key < 0:
            raise ValidationError(f"Seed keys must be non-negative, got {key}")
        return int(key)
    digest = hashlib.sha256(str(key).encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "little")


def derive_seed(base: int, *keys: SeedKey) -> int:
    """
    Derive a child seed from a base seed and a path of keys.

    The same (base, keys) always gives the same seed, and a child never
    depends on how many siblings were derived before it.

    Args:
        base (int): Root seed of the experiment.
        *keys: Integers or strings naming the child, e.g. ("eval", 3).

    Returns:
        int: A 32-bit seed.
    """
    entropy = [_key_to_int(base)] + [_key_to_int(k) for k in keys]
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


def make_rng(base: int, *keys: SeedKey) -> np.random.Generator:
    """Return a numpy Generator seeded with derive_seed(base, *keys)."""
    return np.random.default_rng(derive_seed(base, *keys))


def mean_and_stderr(values: Sequence[float]) -> Tuple[float, float]:
    """
    Sample mean and standard error (sample std / sqrt(n)).

    A single value has standard error 0.
    """
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValidationError("mean_and_stderr needs at least one value")
    if arr.size == 1:
        return float(arr[0]), 0.0
    return float(arr.mean()), float(arr.std(ddof=1) / np.sqrt(arr.size))


def as_index_tuple(indices: Sequence[int], p: int) -> Tuple[int, ...]:
    """Validate an index set against dimension p and return it sorted."""
    out = tuple(sorted(int(i) for i in indices))
    if len(set(out)) != len(out):
        raise ValidationError(f"Duplicate indices in {list(indices)}")
    for i in out:
        if i < 0 or i >= p:
            raise ValidationError(f"Index {i} out of range for p={p}")
    return out
