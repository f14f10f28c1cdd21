"""Alphabets, sources, distortion measures and reconstruction distributions.

Symbols are integer indices. A length-``l`` vector over an alphabet of size
``k`` is the base-``k`` integer whose most significant digit is the first
coordinate, so ``"0001"`` is symbol 1 and ``"1000"`` is symbol 8.
"""
from __future__ import annotations

import bisect
import logging
import math
from abc import ABC, abstractmethod
from collections import defaultdict
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

from . import typespace as ts
from .rng import RandomStream, uniform_block

logger = logging.getLogger(__name__)

ENUMERABLE_LIMIT = 1 << 20
# slack for comparing accumulated float distortions against the level d
DISTORTION_SLACK = 1e-9


# ---------------------------------------------------------------- symbols

def index_to_vector(index: int, base: int, length: int) -> tuple[int, ...]:
    digits = [0] * length
    for i in range(length - 1, -1, -1):
        index, digits[i] = divmod(index, base)
    if index:
        raise ValueError(f"index does not fit in {length} base-{base} digits")
    return tuple(digits)


def vector_to_index(vec: Sequence[int], base: int) -> int:
    idx = 0
    for s in vec:
        s = int(s)
        if not 0 <= s < base:
            raise ValueError(f"symbol {s} outside alphabet of size {base}")
        idx = idx * base + s
    return idx


def parse_symbol(text: str | int | Sequence[int], base: int = 2) -> int:
    """Accept an int index, a digit string such as ``"0110"``, or a digit sequence."""
    if isinstance(text, (int, np.integer)):
        return int(text)
    if isinstance(text, str):
        return vector_to_index([int(c, base) for c in text], base)
    return vector_to_index(text, base)


def _cumulative(pmf: np.ndarray) -> np.ndarray:
    cum = np.cumsum(pmf)
    last = int(np.flatnonzero(pmf > 0)[-1])
    cum[last:] = 1.0
    return cum


def _check_pmf(pmf, what: str, tol: float = 1e-9) -> np.ndarray:
    p = np.asarray(pmf, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValueError(f"{what} must be a nonempty vector")
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise ValueError(f"{what} has negative or non-finite entries")
    if abs(p.sum() - 1.0) > tol:
        raise ValueError(f"{what} sums to {p.sum()!r}, not 1")
    return p / p.sum()


# ---------------------------------------------------------------- source

@dataclass(frozen=True, eq=False)
class SourceModel:
    """Memoryless source over ``X``; optionally the ``l``-fold product of ``P_U``."""

    alphabet_size: int
    per_symbol_pmf: np.ndarray
    length: int = 1

    @classmethod
    def categorical(cls, pmf) -> "SourceModel":
        p = _check_pmf(pmf, "source pmf", tol=1e-12)
        return cls(p.size, p, 1)

    @classmethod
    def product(cls, per_symbol_pmf, length: int) -> "SourceModel":
        p = _check_pmf(per_symbol_pmf, "per-symbol source pmf", tol=1e-12)
        if length < 1:
            raise ValueError("length must be positive")
        return cls(p.size ** length, p, int(length))

    @property
    def is_product(self) -> bool:
        return self.length > 1

    @property
    def symbol_size(self) -> int:
        return self.per_symbol_pmf.size

    @property
    def enumerable(self) -> bool:
        return self.alphabet_size <= ENUMERABLE_LIMIT

    @cached_property
    def pmf(self) -> np.ndarray:
        if not self.enumerable:
            raise ValueError("source alphabet too large to tabulate")
        out = np.ones(1)
        for _ in range(self.length):
            out = np.outer(out, self.per_symbol_pmf).ravel()
        return out

    def prob(self, x: int) -> float:
        digits = index_to_vector(int(x), self.symbol_size, self.length)
        return float(np.prod([self.per_symbol_pmf[d] for d in digits]))

    @cached_property
    def _cum(self) -> list[float]:
        return _cumulative(self.per_symbol_pmf).tolist()

    def sample(self, rng) -> int:
        k = self.symbol_size
        idx = 0
        for _ in range(self.length):
            idx = idx * k + min(bisect.bisect_right(self._cum, rng.random()), k - 1)
        return idx

    def atoms(self) -> Iterator[tuple[int, float]]:
        """``(x, P_X(x))`` for every symbol, in index order."""
        for x, p in enumerate(self.pmf):
            yield x, float(p)

    def type_atoms(self) -> Iterator[tuple[tuple[int, ...], float]]:
        """``(representative vector, P[type class])`` per source type."""
        for t in ts.enumerate_types(self.length, self.symbol_size):
            rep = tuple(v for v, c in enumerate(t.counts) for _ in range(c))
            yield rep, ts.iid_type_weight(self.per_symbol_pmf, t)


# ---------------------------------------------------------------- distortion

@dataclass(frozen=True, eq=False)
class DistortionSpec:
    """Distortion ``rho`` with level ``d``: a full table, or additive per-symbol form."""

    level: float
    table: np.ndarray | None = None
    per_symbol: np.ndarray | None = None
    length: int = 1

    def __post_init__(self):
        if self.level < 0:
            raise ValueError("distortion level must be nonnegative")
        if (self.table is None) == (self.per_symbol is None):
            raise ValueError("give exactly one of table or per_symbol")
        m = self.table if self.table is not None else self.per_symbol
        m = np.asarray(m, dtype=float)
        if m.ndim != 2 or np.any(m < 0):
            raise ValueError("distortion matrix must be 2-D and nonnegative")
        object.__setattr__(self, "table" if self.table is not None else "per_symbol", m)
        # every source symbol must have a d-match somewhere
        worst = m.min(axis=1).max() * (self.length if self.per_symbol is not None else 1)
        if worst > self.level + DISTORTION_SLACK:
            raise ValueError(f"some source symbol has no reconstruction within d={self.level}")

    @classmethod
    def from_table(cls, table, level: float) -> "DistortionSpec":
        return cls(float(level), table=np.asarray(table, dtype=float))

    @classmethod
    def additive(cls, per_symbol, length: int, level: float) -> "DistortionSpec":
        return cls(float(level), per_symbol=np.asarray(per_symbol, dtype=float), length=int(length))

    @classmethod
    def hamming(cls, size: int, level: float, length: int = 1) -> "DistortionSpec":
        m = 1.0 - np.eye(size)
        if length == 1:
            return cls.from_table(m, level)
        return cls.additive(m, length, level)

    def with_level(self, level: float) -> "DistortionSpec":
        return DistortionSpec(float(level), self.table, self.per_symbol, self.length)

    @property
    def is_additive(self) -> bool:
        return self.per_symbol is not None

    @property
    def u_size(self) -> int:
        return self.per_symbol.shape[0] if self.is_additive else self.table.shape[0]

    @property
    def v_size(self) -> int:
        return self.per_symbol.shape[1] if self.is_additive else self.table.shape[1]

    @property
    def x_size(self) -> int:
        return self.u_size ** self.length if self.is_additive else self.table.shape[0]

    @property
    def y_size(self) -> int:
        return self.v_size ** self.length if self.is_additive else self.table.shape[1]

    @property
    def y_enumerable(self) -> bool:
        return self.y_size <= ENUMERABLE_LIMIT

    def x_digits(self, x) -> tuple[int, ...]:
        if isinstance(x, (int, np.integer)):
            if not 0 <= int(x) < self.x_size:
                raise ValueError(f"source symbol {x} outside X")
            return index_to_vector(int(x), self.u_size, self.length)
        vec = tuple(int(s) for s in x)
        if len(vec) != self.length or any(not 0 <= s < self.u_size for s in vec):
            raise ValueError(f"source vector {vec} does not match the distortion spec")
        return vec

    def y_digits(self, y) -> tuple[int, ...]:
        if isinstance(y, (int, np.integer)):
            if not 0 <= int(y) < self.y_size:
                raise ValueError(f"reconstruction symbol {y} outside Y")
            return index_to_vector(int(y), self.v_size, self.length)
        vec = tuple(int(s) for s in y)
        if len(vec) != self.length or any(not 0 <= s < self.v_size for s in vec):
            raise ValueError(f"reconstruction vector {vec} does not match the distortion spec")
        return vec

    @cached_property
    def y_digit_matrix(self) -> np.ndarray:
        """``(|Y|, l)`` digits of every reconstruction symbol."""
        if not self.y_enumerable:
            raise ValueError("reconstruction alphabet too large to tabulate")
        idx = np.arange(self.y_size)
        out = np.empty((self.y_size, self.length), dtype=np.int64)
        for i in range(self.length - 1, -1, -1):
            idx, out[:, i] = np.divmod(idx, self.v_size)
        return out

    def row(self, x) -> np.ndarray:
        """``rho(x, y)`` for every ``y`` in ``Y``."""
        if not self.is_additive:
            return self.table[int(x)]
        xd = np.asarray(self.x_digits(x))
        return self.per_symbol[xd[None, :], self.y_digit_matrix].sum(axis=1)

    @cached_property
    def _match_cache(self) -> dict:
        return {}

    def match_vector(self, x) -> np.ndarray:
        """The 0/1 indicator ``v_{d,x}`` over ``Y``."""
        key = int(x) if isinstance(x, (int, np.integer)) else self.x_digits(x)
        hit = self._match_cache.get(key)
        if hit is None:
            hit = self.row(x) <= self.level + DISTORTION_SLACK
            hit.flags.writeable = False
            self._match_cache[key] = hit
        return hit

    def max_matches(self) -> int:
        """``max_x |{y : rho(x, y) <= d}|``."""
        if not self.is_additive:
            return int((self.table <= self.level + DISTORTION_SLACK).sum(axis=1).max())
        best = 0
        for t in ts.enumerate_types(self.length, self.u_size):
            rep = tuple(u for u, c in enumerate(t.counts) for _ in range(c))
            best = max(best, _count_matches_additive(rep, self))
        return best


def distortion_total(spec: DistortionSpec, x, y) -> float:
    if spec.is_additive:
        xd, yd = spec.x_digits(x), spec.y_digits(y)
        return float(sum(spec.per_symbol[a, b] for a, b in zip(xd, yd)))
    if not (isinstance(x, (int, np.integer)) and isinstance(y, (int, np.integer))):
        raise ValueError("a tabulated distortion takes integer symbols")
    if not (0 <= x < spec.x_size and 0 <= y < spec.y_size):
        raise ValueError(f"symbol pair ({x}, {y}) outside the distortion table")
    return float(spec.table[x, y])


def _distortion_key(v: float) -> float:
    return round(v, 9)


def _count_matches_additive(x_digits: Sequence[int], spec: DistortionSpec) -> int:
    # number of y in V^l with rho(x, y) <= d, by convolution of per-position counts
    counts: dict[float, int] = {0.0: 1}
    for u in x_digits:
        nxt: dict[float, int] = defaultdict(int)
        for total, c in counts.items():
            for v in range(spec.v_size):
                nxt[_distortion_key(total + spec.per_symbol[u, v])] += c
        counts = nxt
    return sum(c for total, c in counts.items() if total <= spec.level + DISTORTION_SLACK)


# ---------------------------------------------------------------- reconstruction

class ReconDistribution(ABC):
    """A distribution over ``Y`` from which codewords are drawn IID."""

    #: vector variants produce digit blocks; the categorical one produces indices
    vector_valued = True

    @property
    @abstractmethod
    def y_size(self) -> int: ...

    @abstractmethod
    def pmf(self, y: int) -> float: ...

    @abstractmethod
    def sample(self, rng) -> int: ...

    @abstractmethod
    def block(self, key: int, j0: int, n: int) -> np.ndarray:
        """Codewords ``j0 .. j0+n-1`` under ``key`` (indices, or an ``(n, l)`` digit array)."""

    @property
    def permutation_invariant(self) -> bool:
        return False

    def pmf_vector(self) -> np.ndarray:
        return np.array([self.pmf(y) for y in range(self.y_size)])

    def codeword(self, key: int, j: int) -> int:
        return self.sample(RandomStream(key, j))

    def describe(self) -> dict:
        raise NotImplementedError


class Categorical(ReconDistribution):
    vector_valued = False

    def __init__(self, q):
        self.q = _check_pmf(q, "reconstruction pmf")
        self.q.flags.writeable = False
        self._cum_arr = _cumulative(self.q)
        self._cum = self._cum_arr.tolist()

    def __repr__(self):
        return f"Categorical({np.array2string(self.q, precision=4, separator=', ')})"

    @property
    def y_size(self) -> int:
        return self.q.size

    def pmf(self, y: int) -> float:
        return float(self.q[int(y)])

    def pmf_vector(self) -> np.ndarray:
        return self.q.copy()

    def sample(self, rng) -> int:
        return min(bisect.bisect_right(self._cum, rng.random()), self.q.size - 1)

    def block(self, key, j0, n):
        u = uniform_block(key, j0, n, 1)[:, 0]
        return np.minimum(np.searchsorted(self._cum_arr, u, side="right"), self.q.size - 1)

    def describe(self) -> dict:
        return {"categorical": self.q.tolist()}


class Memoryless(ReconDistribution):
    """``P_V`` applied IID to each of ``length`` coordinates."""

    def __init__(self, per_symbol, length: int):
        self.per_symbol = _check_pmf(per_symbol, "per-symbol reconstruction pmf")
        self.per_symbol.flags.writeable = False
        self.length = int(length)
        self._cum_arr = _cumulative(self.per_symbol)
        self._cum = self._cum_arr.tolist()

    def __repr__(self):
        return f"Memoryless({np.array2string(self.per_symbol, precision=4, separator=', ')}, {self.length})"

    @property
    def v_size(self) -> int:
        return self.per_symbol.size

    @property
    def y_size(self) -> int:
        return self.v_size ** self.length

    @property
    def permutation_invariant(self) -> bool:
        return True

    def pmf(self, y) -> float:
        digits = index_to_vector(int(y), self.v_size, self.length)
        return float(np.prod([self.per_symbol[d] for d in digits]))

    def pmf_vector(self) -> np.ndarray:
        out = np.ones(1)
        for _ in range(self.length):
            out = np.outer(out, self.per_symbol).ravel()
        return out

    def sample(self, rng) -> int:
        k = self.v_size
        idx = 0
        for _ in range(self.length):
            idx = idx * k + min(bisect.bisect_right(self._cum, rng.random()), k - 1)
        return idx

    def block(self, key, j0, n):
        u = uniform_block(key, j0, n, self.length)
        return np.minimum(np.searchsorted(self._cum_arr, u, side="right"), self.v_size - 1)

    def describe(self) -> dict:
        return {"memoryless": self.per_symbol.tolist(), "length": self.length}


class UniformOnType(ReconDistribution):
    """Uniform over one type class: a constant-composition codebook."""

    def __init__(self, t: ts.TypeVector | Sequence[int]):
        self.type = t if isinstance(t, ts.TypeVector) else ts.TypeVector(tuple(t))
        self.length = self.type.length
        self._base = np.array([v for v, c in enumerate(self.type.counts) for _ in range(c)], dtype=np.int64)
        self._log_size = ts.log_type_class_size(self.type)

    def __repr__(self):
        return f"UniformOnType({self.type.counts})"

    @property
    def v_size(self) -> int:
        return self.type.v_size

    @property
    def y_size(self) -> int:
        return self.v_size ** self.length

    @property
    def permutation_invariant(self) -> bool:
        return True

    def pmf(self, y) -> float:
        digits = index_to_vector(int(y), self.v_size, self.length)
        if ts.empirical_type(digits, self.v_size) != self.type:
            return 0.0
        return math.exp(-self._log_size)

    def sample(self, rng) -> int:
        return vector_to_index(ts.sample_uniform_in_type(self.type, rng), self.v_size)

    def block(self, key, j0, n):
        u = uniform_block(key, j0, n, max(self.length - 1, 1))
        seq = np.tile(self._base, (n, 1))
        _shuffle_rows(seq, u, 0)
        return seq

    def describe(self) -> dict:
        return {"type": list(self.type.counts)}


def _shuffle_rows(seq: np.ndarray, u: np.ndarray, offset: int) -> None:
    # row-wise Fisher-Yates matching typespace.sample_uniform_in_type draw order
    n, length = seq.shape
    rows = np.arange(n)
    for k, i in enumerate(range(length - 1, 0, -1)):
        r = (u[:, offset + k] * (i + 1)).astype(np.int64)
        tmp = seq[rows, r].copy()
        seq[rows, r] = seq[:, i]
        seq[:, i] = tmp


class TypeMixture(ReconDistribution):
    """Mixture of uniform type-class distributions; weights are held as logs."""

    def __init__(self, enumeration: ts.TypeEnumeration, log_weights):
        lw = np.asarray(log_weights, dtype=float)
        if lw.shape != (len(enumeration),):
            raise ValueError("one weight per type is required")
        total = np.logaddexp.reduce(lw)
        if not np.isfinite(total) or abs(total) > 1e-9:
            raise ValueError(f"mixture weights sum to {math.exp(total)!r}, not 1")
        self.enumeration = enumeration
        self.log_weights = lw - total
        self.log_weights.flags.writeable = False
        self.length = enumeration.length
        w = np.exp(self.log_weights)
        self._cum_arr = _cumulative(w / w.sum())
        self._cum = self._cum_arr.tolist()
        self._bases = np.array(
            [[v for v, c in enumerate(t.counts) for _ in range(c)] for t in enumeration], dtype=np.int64
        )

    @classmethod
    def from_weights(cls, length: int, v_size: int, weights) -> "TypeMixture":
        w = np.asarray(weights, dtype=float)
        if np.any(w < 0):
            raise ValueError("mixture weights must be nonnegative")
        with np.errstate(divide="ignore"):
            return cls(ts.enumerate_types(length, v_size), np.log(w))

    @classmethod
    def from_memoryless(cls, per_symbol, length: int) -> "TypeMixture":
        en = ts.enumerate_types(length, len(per_symbol))
        return cls(en, [ts.log_iid_type_weight(per_symbol, t) for t in en])

    def __repr__(self):
        return f"TypeMixture(l={self.length}, |V|={self.v_size})"

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights)

    @property
    def v_size(self) -> int:
        return self.enumeration.v_size

    @property
    def y_size(self) -> int:
        return self.v_size ** self.length

    @property
    def permutation_invariant(self) -> bool:
        return True

    def pmf(self, y) -> float:
        digits = index_to_vector(int(y), self.v_size, self.length)
        j = self.enumeration.index_of(ts.empirical_type(digits, self.v_size))
        return math.exp(self.log_weights[j] - self.enumeration.log_class_sizes[j])

    def sample(self, rng) -> int:
        j = min(bisect.bisect_right(self._cum, rng.random()), len(self._cum) - 1)
        return vector_to_index(ts.sample_uniform_in_type(self.enumeration[j], rng), self.v_size)

    def block(self, key, j0, n):
        u = uniform_block(key, j0, n, self.length)
        which = np.minimum(np.searchsorted(self._cum_arr, u[:, 0], side="right"), len(self._cum) - 1)
        seq = self._bases[which].copy()
        _shuffle_rows(seq, u, 1)
        return seq

    def describe(self) -> dict:
        return {"mixture": self.weights.tolist(), "length": self.length, "v_size": self.v_size}


def recon_pmf(Q: ReconDistribution, y) -> float:
    return Q.pmf(y)


def sample_recon(Q: ReconDistribution, rng) -> int:
    return Q.sample(rng)


# ---------------------------------------------------------------- match probabilities

def _memoryless_match(per_symbol: np.ndarray, x_digits, spec: DistortionSpec) -> float:
    dist: dict[float, float] = {0.0: 1.0}
    for u in x_digits:
        nxt: dict[float, float] = defaultdict(float)
        for total, p in dist.items():
            for v, pv in enumerate(per_symbol):
                if pv > 0:
                    nxt[_distortion_key(total + spec.per_symbol[u, v])] += p * pv
        dist = nxt
    return float(sum(p for total, p in dist.items() if total <= spec.level + DISTORTION_SLACK))


def type_class_match_count(x_digits: Sequence[int], t: ts.TypeVector, spec: DistortionSpec) -> int:
    """``|{y in T(t) : rho(x, y) <= d}|`` for an additive distortion, counted exactly.

    Positions of ``x`` holding source letter ``u`` receive a sub-composition
    of ``t``; the count is a sum of products of multinomials.
    """
    n_u = [0] * spec.u_size
    for u in x_digits:
        n_u[u] += 1
    states: dict[tuple[tuple[int, ...], float], int] = {(t.counts, 0.0): 1}
    for u, n in enumerate(n_u):
        if n == 0:
            continue
        nxt: dict[tuple[tuple[int, ...], float], int] = defaultdict(int)
        for (remaining, total), c in states.items():
            for m in ts.compositions(n, spec.v_size, caps=remaining):
                ways = ts.type_class_size(ts.TypeVector(m))
                add = float(np.dot(m, spec.per_symbol[u]))
                key = (tuple(r - k for r, k in zip(remaining, m)), _distortion_key(total + add))
                nxt[key] += c * ways
        states = nxt
    return sum(c for (_, total), c in states.items() if total <= spec.level + DISTORTION_SLACK)


def _type_match_fraction(x_digits, t: ts.TypeVector, spec: DistortionSpec) -> float:
    count = type_class_match_count(x_digits, t, spec)
    return math.exp(math.log(count) - ts.log_type_class_size(t)) if count else 0.0


def match_probability(Q: ReconDistribution, x, spec: DistortionSpec) -> float:
    """Exact ``p(x, Q) = P_{Y~Q}[rho(x, Y) <= d]``."""
    if Q.y_size != spec.y_size:
        raise ValueError("reconstruction distribution and distortion spec disagree on |Y|")
    if spec.is_additive and isinstance(Q, Memoryless):
        return _memoryless_match(Q.per_symbol, spec.x_digits(x), spec)
    if spec.is_additive and isinstance(Q, UniformOnType):
        return _type_match_fraction(spec.x_digits(x), Q.type, spec)
    if spec.is_additive and isinstance(Q, TypeMixture):
        xd = spec.x_digits(x)
        total = 0.0
        for lw, t in zip(Q.log_weights, Q.enumeration):
            if lw == -math.inf:
                continue
            count = type_class_match_count(xd, t, spec)
            if count:
                total += math.exp(lw + math.log(count) - ts.log_type_class_size(t))
        return min(total, 1.0)
    return float(np.dot(Q.pmf_vector(), spec.match_vector(x)))


def match_probability_bruteforce(Q: ReconDistribution, x, spec: DistortionSpec) -> float:
    """Reference route: explicit summation of ``Q(y)`` over all of ``Y``."""
    hit = spec.match_vector(x)
    return float(sum(Q.pmf(y) for y in np.flatnonzero(hit)))


def source_atoms_for(Q: ReconDistribution, spec: DistortionSpec, source: SourceModel | None = None):
    """``(x, weight)`` pairs covering ``X``; ``p(x, Q)`` is constant within each atom.

    With an additive spec and a permutation-invariant ``Q`` only one
    representative per source type is needed. Without a source the weights
    are ``None``.
    """
    if spec.is_additive and Q.permutation_invariant:
        for t in ts.enumerate_types(spec.length, spec.u_size):
            rep = tuple(u for u, c in enumerate(t.counts) for _ in range(c))
            w = None if source is None else ts.iid_type_weight(source.per_symbol_pmf, t)
            yield rep, w
        return
    if source is None:
        for x in range(spec.x_size):
            yield x, None
        return
    yield from source.atoms()


def min_match_probability(Q: ReconDistribution, spec: DistortionSpec) -> float:
    """``eta = min_x p(x, Q)``; zero is returned (and logged) when some ``x`` has no match."""
    eta = min(match_probability(Q, x, spec) for x, _ in source_atoms_for(Q, spec))
    if eta <= 0.0:
        logger.warning("%r has zero match probability for some source symbol", Q)
        return 0.0
    return eta


def has_zero_match(Q: ReconDistribution, spec: DistortionSpec) -> bool:
    return any(match_probability(Q, x, spec) <= 0.0 for x, _ in source_atoms_for(Q, spec))


def recon_from_description(desc: dict, spec: DistortionSpec | None = None) -> ReconDistribution:
    """Build a distribution from its JSON description (inverse of ``describe``)."""
    if "categorical" in desc:
        return Categorical(desc["categorical"])
    if "memoryless" in desc:
        length = desc.get("length", spec.length if spec is not None else 1)
        return Memoryless(desc["memoryless"], length)
    if "type" in desc:
        return UniformOnType(desc["type"])
    if "mixture" in desc:
        length = desc.get("length", spec.length if spec is not None else None)
        v_size = desc.get("v_size", spec.v_size if spec is not None else None)
        if length is None or v_size is None:
            raise ValueError("a mixture needs its length and alphabet size")
        return TypeMixture.from_weights(length, v_size, desc["mixture"])
    raise ValueError(f"unknown reconstruction description {sorted(desc)}")
