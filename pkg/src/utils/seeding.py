import hashlib
from typing import Union

import numpy as np

SeedKey = Union[int, str]


def _key_to_int(key: SeedKey) -> int:
    if isinstance(key, str):
        return int.from_bytes(hashlib.sha256(key.encode("utf-8")).digest()[:8], "little")
    return int(key) & 0xFFFFFFFFFFFFFFFF


def derive_seed(seed: int, *keys: SeedKey) -> int:
    """Derive a 64-bit child seed from a master seed and a path of keys.

    The mapping is portable across platforms and Python processes (no use of
    the builtin hash()).
    """
    entropy = [_key_to_int(seed)] + [_key_to_int(k) for k in keys]
    state = np.random.SeedSequence(entropy).generate_state(2, dtype=np.uint32)
    return int(state[0]) | (int(state[1]) << 32)


def make_rng(seed: int, *keys: SeedKey) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_seed(seed, *keys) if keys else seed))
