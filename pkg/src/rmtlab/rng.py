"""Counter-based uniform stream.

Every variate is a pure function of ``(seed, index)``, so any slice of a
stream can be regenerated independently and in any order. The mixing
function is the SplitMix64 finalizer::

    mix64(z):
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9   (mod 2**64)
        z = (z ^ (z >> 27)) * 0x94D049BB133111EB   (mod 2**64)
        return z ^ (z >> 31)

For a stream keyed by ``seed`` the 64-bit word at position ``index`` is::

    key  = mix64(seed ^ 0x5851F42D4C957F2D)
    word = mix64(key + (index + 1) * 0x9E3779B97F4A7C15)   (mod 2**64)

and the uniform variate is ``((word >> 11) + 0.5) * 2**-53``, which lies
strictly inside (0, 1).
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidParams

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
KEY_SALT = 0x5851F42D4C957F2D
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= MASK64:
        raise InvalidParams(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    # uint64 array arithmetic wraps modulo 2**64
    z = z ^ (z >> np.uint64(30))
    z = z * np.uint64(_M1)
    z = z ^ (z >> np.uint64(27))
    z = z * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def derive_seed(seed: int, *components: int) -> int:
    """Fold integer components into ``seed``; used for per-trial seeds."""
    h = mix64(check_seed(seed) ^ KEY_SALT)
    for c in components:
        h = mix64(h ^ mix64((int(c) + GOLDEN) & MASK64))
    return h


def stream_words(seed: int, count: int, start: int = 0) -> np.ndarray:
    key = mix64(check_seed(seed) ^ KEY_SALT)
    if count < 0 or start < 0:
        raise ValueError("count and start must be nonnegative")
    idx = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    return _mix64_array(np.uint64(key) + idx * np.uint64(GOLDEN))


def uniforms(seed: int, count: int, start: int = 0) -> np.ndarray:
    """Uniform (0, 1) variates at stream positions ``start .. start+count-1``."""
    words = stream_words(seed, count, start)
    return ((words >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
