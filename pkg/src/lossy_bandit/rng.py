"""Counter-based keyed random numbers.

Every uniform is a pure function of ``(key, counter, index)``, built from the
SplitMix64 finalizer. Encoder and decoder derive the same key from
``(seed, round, action)`` and therefore regenerate identical codebooks
without exchanging any state. The scalar and numpy paths are bit-identical.
"""
from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_INDEX_STEP = 0xD1B54A32D192ED03
_TWO_M53 = 2.0 ** -53

# domain tags keep source draws and codebook draws disjoint
DOMAIN_SOURCE = 1
DOMAIN_CODEBOOK = 2
DOMAIN_AUX = 3


def mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_key(*parts: int) -> int:
    """Fold integer parts into one 64-bit key (order sensitive)."""
    h = 0x6A09E667F3BCC909
    for p in parts:
        h = mix64((h ^ (int(p) & MASK64)) + GOLDEN & MASK64)
    return h


def _counter_base(key: int, counter: int) -> int:
    return mix64((key + (counter & MASK64) * GOLDEN) & MASK64)


def uniform(key: int, counter: int, index: int) -> float:
    """The ``index``-th uniform in [0, 1) of slot ``counter`` under ``key``."""
    base = _counter_base(key, counter)
    return (mix64((base + (index + 1) * _INDEX_STEP) & MASK64) >> 11) * _TWO_M53


class RandomStream:
    """Sequential view of one counter slot: ``random()`` yields index 0, 1, ...

    Duck-compatible with :class:`random.Random` for the ``random()`` method,
    which is all the samplers need.
    """

    __slots__ = ("key", "counter", "_base", "_i")

    def __init__(self, key: int, counter: int = 0):
        self.key = key
        self.counter = counter
        self._base = _counter_base(key, counter)
        self._i = 0

    def random(self) -> float:
        self._i += 1
        return (mix64((self._base + self._i * _INDEX_STEP) & MASK64) >> 11) * _TWO_M53


# ---------------------------------------------------------------- numpy path

_U = np.uint64


def _mix64_np(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _U(30))) * _U(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> _U(27))) * _U(0x94D049BB133111EB)
    return z ^ (z >> _U(31))


def uniform_block(key: int, counter_start: int, n_counters: int, n_index: int) -> np.ndarray:
    """Uniforms for counters ``counter_start .. +n_counters`` and indices ``0..n_index``.

    Row ``r`` column ``i`` equals ``uniform(key, counter_start + r, i)``.
    """
    with np.errstate(over="ignore"):
        counters = np.arange(counter_start, counter_start + n_counters, dtype=np.uint64)
        base = _mix64_np(_U(key) + counters * _U(GOLDEN))
        steps = np.arange(1, n_index + 1, dtype=np.uint64) * _U(_INDEX_STEP)
        h = _mix64_np(base[:, None] + steps[None, :])
    return (h >> _U(11)).astype(np.float64) * _TWO_M53


def derive_keys(prefix: tuple, varying: np.ndarray, suffix: tuple = ()) -> np.ndarray:
    """``derive_key(*prefix, v, *suffix)`` for every ``v`` in ``varying`` (uint64 array)."""
    h = 0x6A09E667F3BCC909
    for p in prefix:
        h = mix64((h ^ (int(p) & MASK64)) + GOLDEN & MASK64)
    with np.errstate(over="ignore"):
        hs = _mix64_np((_U(h) ^ np.asarray(varying, dtype=np.uint64)) + _U(GOLDEN))
        for p in suffix:
            hs = _mix64_np((hs ^ _U(int(p) & MASK64)) + _U(GOLDEN))
    return hs


def uniform_keyed(keys: np.ndarray, counter_start: int, n_counters: int, index: int = 0) -> np.ndarray:
    """Row ``r`` column ``c`` equals ``uniform(keys[r], counter_start + c, index)``."""
    with np.errstate(over="ignore"):
        counters = np.arange(counter_start, counter_start + n_counters, dtype=np.uint64)
        base = _mix64_np(np.asarray(keys, dtype=np.uint64)[:, None] + counters[None, :] * _U(GOLDEN))
        h = _mix64_np(base + _U((index + 1) * _INDEX_STEP & MASK64))
    return (h >> _U(11)).astype(np.float64) * _TWO_M53
