"""Method-of-types machinery for length-``l`` vectors over a finite alphabet.

A type is stored as its count vector. Enumeration order is lexicographic on
the counts, so action indices derived from it are identical at the encoder
and the decoder.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

ENUMERATION_GUARD = 10_000_000


@dataclass(frozen=True)
class TypeVector:
    counts: tuple[int, ...]

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if not counts:
            raise ValueError("type over an empty alphabet")
        if any(c < 0 for c in counts):
            raise ValueError(f"negative count in type {counts}")
        if sum(counts) == 0:
            raise ValueError("type of an empty vector")
        object.__setattr__(self, "counts", counts)

    @property
    def length(self) -> int:
        return sum(self.counts)

    @property
    def v_size(self) -> int:
        return len(self.counts)

    @property
    def distribution(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=float) / self.length

    def __iter__(self):
        return iter(self.counts)


def num_types(length: int, v_size: int) -> int:
    return math.comb(length + v_size - 1, v_size - 1)


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    # lexicographic on the tuple
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def compositions(total: int, parts: int, caps: Sequence[int] | None = None) -> Iterator[tuple[int, ...]]:
    """All nonnegative integer vectors of ``parts`` entries summing to ``total``.

    ``caps`` bounds each entry from above.
    """
    if caps is None:
        yield from _compositions(total, parts)
        return
    caps = list(caps)

    def rec(remaining: int, i: int):
        if i == parts - 1:
            if remaining <= caps[i]:
                yield (remaining,)
            return
        for first in range(min(remaining, caps[i]) + 1):
            for rest in rec(remaining - first, i + 1):
                yield (first,) + rest

    yield from rec(total, 0)


@dataclass(frozen=True)
class TypeEnumeration:
    length: int
    v_size: int
    types: tuple[TypeVector, ...]

    @property
    def count(self) -> int:
        return len(self.types)

    def __len__(self) -> int:
        return len(self.types)

    def __iter__(self):
        return iter(self.types)

    def __getitem__(self, i: int) -> TypeVector:
        return self.types[i]

    @cached_property
    def _index(self) -> dict[tuple[int, ...], int]:
        return {t.counts: i for i, t in enumerate(self.types)}

    def index_of(self, t: TypeVector | Sequence[int]) -> int:
        counts = t.counts if isinstance(t, TypeVector) else tuple(int(c) for c in t)
        try:
            return self._index[counts]
        except KeyError:
            raise ValueError(f"{counts} is not an {self.length}-type over {self.v_size} symbols") from None

    @cached_property
    def log_class_sizes(self) -> np.ndarray:
        return np.array([log_type_class_size(t) for t in self.types])


def enumerate_types(length: int, v_size: int) -> TypeEnumeration:
    if length < 1 or v_size < 1:
        raise ValueError("length and alphabet size must be positive")
    n = num_types(length, v_size)
    if n > ENUMERATION_GUARD:
        raise ValueError(f"{n} types exceed the enumeration guard {ENUMERATION_GUARD}")
    types = tuple(TypeVector(c) for c in _compositions(length, v_size))
    return TypeEnumeration(length, v_size, types)


def type_class_size(t: TypeVector) -> int:
    """Exact multinomial coefficient ``l! / prod(counts!)`` (Python big int)."""
    size = 1
    remaining = t.length
    for c in t.counts:
        size *= math.comb(remaining, c)
        remaining -= c
    return size


def log_type_class_size(t: TypeVector) -> float:
    return math.lgamma(t.length + 1) - sum(math.lgamma(c + 1) for c in t.counts)


def empirical_type(y: Sequence[int], v_size: int) -> TypeVector:
    counts = [0] * v_size
    for s in y:
        s = int(s)
        if not 0 <= s < v_size:
            raise ValueError(f"symbol {s} outside alphabet of size {v_size}")
        counts[s] += 1
    return TypeVector(tuple(counts))


def sample_uniform_in_type(t: TypeVector, rng) -> tuple[int, ...]:
    """Uniform member of the type class: a Fisher-Yates shuffle of the multiset.

    ``rng`` only needs a ``random()`` method returning floats in [0, 1).
    """
    seq = [v for v, c in enumerate(t.counts) for _ in range(c)]
    for i in range(len(seq) - 1, 0, -1):
        r = int(rng.random() * (i + 1))
        seq[i], seq[r] = seq[r], seq[i]
    return tuple(seq)


def log_iid_type_weight(pmf: Sequence[float], t: TypeVector) -> float:
    """Natural log of P[an IID ``pmf`` vector has type ``t``]; ``-inf`` if impossible."""
    if len(pmf) != t.v_size:
        raise ValueError("pmf and type have different alphabet sizes")
    out = log_type_class_size(t)
    for p, c in zip(pmf, t.counts):
        if c == 0:
            continue
        if p <= 0.0:
            return -math.inf
        out += c * math.log(p)
    return out


def iid_type_weight(pmf: Sequence[float], t: TypeVector) -> float:
    return math.exp(log_iid_type_weight(pmf, t))
