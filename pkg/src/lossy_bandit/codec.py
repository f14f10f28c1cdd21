"""Shared-randomness codebooks, first d-match search and the round bitstream.

Frame layout (most significant bit first)::

    0 | EliasDelta(J)              a d-match was found at index J
    1 | ceil(log2 |X|) raw bits    escape: no match up to j_max, x sent verbatim

Frames are padded with zero bits to a byte boundary by :func:`pack_frame`;
the decoder accepts and ignores trailing zero padding.

Bandit statistics use the idealized cost ``log2 J``; the emitted frame length
is reported next to it and never feeds back into the policies.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    DISTORTION_SLACK,
    Categorical,
    DistortionSpec,
    ReconDistribution,
    SourceModel,
    index_to_vector,
    vector_to_index,
)
from .rng import DOMAIN_CODEBOOK, DOMAIN_SOURCE, RandomStream, derive_key, derive_keys, uniform_block, uniform_keyed

DEFAULT_J_MAX = 1 << 20
_SCALAR_PREFIX = 8
_FIRST_BLOCK = 32
_MAX_BLOCK = 8192


# ---------------------------------------------------------------- Elias delta

def elias_gamma_encode(n: int) -> str:
    if n < 1:
        raise ValueError("Elias codes are defined for positive integers")
    b = bin(n)[2:]
    return "0" * (len(b) - 1) + b


def elias_delta_encode(n: int) -> str:
    if n < 1:
        raise ValueError("Elias codes are defined for positive integers")
    b = bin(n)[2:]
    return elias_gamma_encode(len(b)) + b[1:]


def elias_delta_decode(bits: str, pos: int = 0) -> tuple[int, int]:
    """Decode one codeword starting at ``pos``; return ``(value, next position)``."""
    zeros = 0
    while pos + zeros < len(bits) and bits[pos + zeros] == "0":
        zeros += 1
    end = pos + 2 * zeros + 1
    if end > len(bits):
        raise ValueError("truncated Elias-delta length prefix")
    n_len = int(bits[pos + zeros:end], 2)
    tail_end = end + n_len - 1
    if tail_end > len(bits):
        raise ValueError("truncated Elias-delta payload")
    return int("1" + bits[end:tail_end], 2), tail_end


def pack_frame(bits: str) -> bytes:
    """Pad ``bits`` with zeros to a whole number of bytes."""
    if not bits:
        return b""
    padded = bits + "0" * (-len(bits) % 8)
    return int(padded, 2).to_bytes(len(padded) // 8, "big")


def unpack_frame(data: bytes) -> str:
    return "".join(f"{b:08b}" for b in data)


def raw_bits(x_size: int) -> int:
    return (x_size - 1).bit_length()


def escape_cost(j_max: int, x_size: int) -> float:
    """Idealized cost charged for an escaped round: index budget, raw x, one flag bit."""
    return math.log2(j_max) + raw_bits(x_size) + 1


# ---------------------------------------------------------------- codebooks

@dataclass(frozen=True)
class SeedKey:
    seed: int
    t: int
    action: int

    @property
    def key(self) -> int:
        return derive_key(self.seed, DOMAIN_CODEBOOK, self.t, self.action)


class CodebookStream:
    """Lazily generated IID codebook; codeword ``j`` depends only on ``(seed_key, j)``."""

    def __init__(self, recon: ReconDistribution, seed_key: SeedKey):
        self.recon = recon
        self.seed_key = seed_key
        self.key = seed_key.key
        self.cursor = 1

    def codeword(self, j: int) -> int:
        if j < 1:
            raise ValueError("codeword indices start at 1")
        return self.recon.codeword(self.key, j)

    def __iter__(self):
        return self

    def __next__(self) -> int:
        y = self.codeword(self.cursor)
        self.cursor += 1
        return y

    def block(self, j0: int, n: int) -> np.ndarray:
        return self.recon.block(self.key, j0, n)


class _Matcher:
    # decides rho(x, y) <= d for scalar codewords and for generated blocks
    def __init__(self, x, spec: DistortionSpec, recon: ReconDistribution):
        self.spec = spec
        if spec.y_enumerable:
            self.mask = spec.match_vector(x)
            self.xd = None
        else:
            self.mask = None
            self.xd = np.asarray(spec.x_digits(x))
        self.recon = recon
        self.base = getattr(recon, "v_size", None)
        if recon.vector_valued and spec.y_enumerable:
            self.powers = self.base ** np.arange(recon.length - 1, -1, -1, dtype=np.int64)

    def first_block_size(self) -> int:
        # only affects speed: codeword j is the same whichever block produces it
        if self.recon.vector_valued or self.mask is None:
            return _FIRST_BLOCK
        p = float(self.recon.pmf_vector() @ self.mask)
        if p <= 0:
            return _FIRST_BLOCK
        return int(min(max(_FIRST_BLOCK, 1 << math.ceil(math.log2(2.0 / p))), _MAX_BLOCK))

    def hit(self, y: int) -> bool:
        if self.mask is not None:
            return bool(self.mask[y])
        yd = index_to_vector(y, self.spec.v_size, self.spec.length)
        return float(self.spec.per_symbol[self.xd, list(yd)].sum()) <= self.spec.level + DISTORTION_SLACK

    def first(self, block: np.ndarray) -> int:
        if block.ndim == 1:
            hits = self.mask[block]
        elif self.mask is not None:
            hits = self.mask[block @ self.powers]
        else:
            dist = self.spec.per_symbol[self.xd[None, :], block].sum(axis=1)
            hits = dist <= self.spec.level + DISTORTION_SLACK
        nz = np.flatnonzero(hits)
        return int(nz[0]) if nz.size else -1

    def block_to_symbol(self, block: np.ndarray, offset: int) -> int:
        row = block[offset]
        if block.ndim == 1:
            return int(row)
        return vector_to_index(row, self.base)


@dataclass(frozen=True)
class MatchResult:
    index: int | None  # None when escaped
    bits: float
    reconstruction: int
    escaped: bool = False


def first_match(x, stream: CodebookStream, spec: DistortionSpec, j_max: int = DEFAULT_J_MAX) -> MatchResult:
    """Smallest ``j <= j_max`` with ``rho(x, y(j)) <= d``; escapes otherwise."""
    if j_max < 1:
        raise ValueError("j_max must be at least 1")
    m = _Matcher(x, spec, stream.recon)
    prefix = min(_SCALAR_PREFIX, j_max)
    for j in range(1, prefix + 1):
        y = stream.codeword(j)
        if m.hit(y):
            return MatchResult(j, math.log2(j), y)
    j0, size = prefix + 1, m.first_block_size()
    while j0 <= j_max:
        n = min(size, j_max - j0 + 1)
        block = stream.block(j0, n)
        off = m.first(block)
        if off >= 0:
            j = j0 + off
            return MatchResult(j, math.log2(j), m.block_to_symbol(block, off))
        j0 += n
        size = min(2 * size, _MAX_BLOCK)
    x_index = int(x) if isinstance(x, (int, np.integer)) else vector_to_index(x, spec.u_size)
    return MatchResult(None, escape_cost(j_max, spec.x_size), x_index, escaped=True)


# ---------------------------------------------------------------- rounds

@dataclass
class CodecConfig:
    """Material shared by encoder and decoder before any round is coded."""

    seed: int
    spec: DistortionSpec
    arms: Sequence[ReconDistribution] = ()
    j_max: int = DEFAULT_J_MAX

    def recon(self, a: int, override: ReconDistribution | None = None) -> ReconDistribution:
        if override is not None:
            return override
        try:
            return self.arms[a]
        except IndexError:
            raise ValueError(f"action {a} has no registered reconstruction distribution") from None

    def stream(self, a: int, t: int, recon: ReconDistribution | None = None) -> CodebookStream:
        return CodebookStream(self.recon(a, recon), SeedKey(self.seed, t, a))


def encode_round(x, a: int, t: int, cfg: CodecConfig, recon: ReconDistribution | None = None
                 ) -> tuple[MatchResult, str]:
    """Encode source symbol ``x`` in round ``t`` under action ``a``.

    ``recon`` overrides the registered arm (used by policies whose action is
    a distribution rather than an index).
    """
    res = first_match(x, cfg.stream(a, t, recon), cfg.spec, cfg.j_max)
    if res.escaped:
        n = raw_bits(cfg.spec.x_size)
        payload = format(res.reconstruction, f"0{n}b") if n else ""
        return res, "1" + payload
    return res, "0" + elias_delta_encode(res.index)


def decode_round(bits: str | bytes, a: int, t: int, cfg: CodecConfig,
                 recon: ReconDistribution | None = None) -> int:
    """Regenerate the codebook and return the reconstruction carried by ``bits``."""
    if isinstance(bits, (bytes, bytearray)):
        bits = unpack_frame(bytes(bits))
    if not bits or any(c not in "01" for c in bits):
        raise ValueError("malformed frame")
    if bits[0] == "1":
        n = raw_bits(cfg.spec.x_size)
        if len(bits) < 1 + n or "1" in bits[1 + n:]:
            raise ValueError("malformed escape frame")
        return int(bits[1:1 + n], 2) if n else 0
    try:
        j, end = elias_delta_decode(bits, 1)
    except ValueError as exc:
        raise ValueError(f"malformed frame: {exc}") from None
    if "1" in bits[end:]:
        raise ValueError("malformed frame: nonzero bits after the index")
    return cfg.stream(a, t, recon).codeword(j)


# ---------------------------------------------------------------- sampling helpers

def source_stream(seed: int, t: int) -> RandomStream:
    return RandomStream(derive_key(seed, DOMAIN_SOURCE), t)


def _batchable(Q: ReconDistribution, spec: DistortionSpec) -> bool:
    return isinstance(Q, Categorical) and spec.y_enumerable and spec.x_size <= 4096


def source_samples(source: SourceModel, seed: int, n: int) -> np.ndarray:
    """``source.sample(source_stream(seed, t))`` for ``t = 1..n`` in one pass."""
    u = uniform_block(derive_key(seed, DOMAIN_SOURCE), 1, n, source.length)
    cum = np.asarray(source._cum)
    k = source.symbol_size
    digits = np.minimum(np.searchsorted(cum, u, side="right"), k - 1)
    idx = np.zeros(n, dtype=np.int64)
    for i in range(source.length):
        idx = idx * k + digits[:, i]
    return idx


def first_match_batch(xs: np.ndarray, keys: np.ndarray, Q: Categorical, spec: DistortionSpec,
                      j_max: int = DEFAULT_J_MAX) -> np.ndarray:
    """First-match index for each ``(x, key)`` row at once; 0 marks an escape.

    Row ``r`` agrees with ``first_match(xs[r], stream keyed by keys[r], ...)``.
    """
    n = len(xs)
    match = np.array([spec.match_vector(x) for x in range(spec.x_size)])
    cum = Q._cum_arr
    last = Q.q.size - 1
    out = np.zeros(n, dtype=np.int64)
    pending = np.arange(n)
    j0, size = 1, _SCALAR_PREFIX
    while pending.size and j0 <= j_max:
        m = min(size, j_max - j0 + 1)
        u = uniform_keyed(keys[pending], j0, m, 0)
        y = np.minimum(np.searchsorted(cum, u, side="right"), last)
        hits = match[xs[pending][:, None], y]
        found = hits.any(axis=1)
        out[pending[found]] = j0 + np.argmax(hits[found], axis=1)
        pending = pending[~found]
        j0 += m
        size = min(2 * size, _MAX_BLOCK)
    return out


def sample_costs(source: SourceModel, Q: ReconDistribution, spec: DistortionSpec, n: int, seed: int,
                 j_max: int = DEFAULT_J_MAX) -> np.ndarray:
    """``n`` independent rounds of ``log2 J`` under a fixed action (idealized bits).

    Round ``t`` uses the source draw and codebook of round ``t`` under seed
    ``seed`` and action 0, so the result equals a loop over
    :func:`first_match`; categorical actions take a vectorized path.
    """
    if _batchable(Q, spec):
        xs = source_samples(source, seed, n)
        keys = derive_keys((seed, DOMAIN_CODEBOOK), np.arange(1, n + 1), (0,))
        j = first_match_batch(xs, keys, Q, spec, j_max)
        esc = escape_cost(j_max, spec.x_size)
        # math.log2 keeps the values bit-identical to the scalar path
        return np.array([math.log2(v) if v else esc for v in j.tolist()])
    return sample_costs_loop(source, Q, spec, n, seed, j_max)


def sample_costs_loop(source: SourceModel, Q: ReconDistribution, spec: DistortionSpec, n: int, seed: int,
                      j_max: int = DEFAULT_J_MAX) -> np.ndarray:
    out = np.empty(n)
    for t in range(1, n + 1):
        x = source.sample(source_stream(seed, t))
        res = first_match(x, CodebookStream(Q, SeedKey(seed, t, 0)), spec, j_max)
        out[t - 1] = res.bits
    return out


def sample_indices(x, Q: ReconDistribution, spec: DistortionSpec, n: int, seed: int,
                   j_max: int = DEFAULT_J_MAX) -> np.ndarray:
    """First-match indices ``J`` for a fixed ``x`` over ``n`` independent codebooks (0 = escaped)."""
    if _batchable(Q, spec):
        keys = derive_keys((seed, DOMAIN_CODEBOOK), np.arange(1, n + 1), (0,))
        return first_match_batch(np.full(n, int(x)), keys, Q, spec, j_max)
    return sample_indices_loop(x, Q, spec, n, seed, j_max)


def sample_indices_loop(x, Q: ReconDistribution, spec: DistortionSpec, n: int, seed: int,
                        j_max: int = DEFAULT_J_MAX) -> np.ndarray:
    out = np.empty(n, dtype=np.int64)
    for t in range(1, n + 1):
        res = first_match(x, CodebookStream(Q, SeedKey(seed, t, 0)), spec, j_max)
        out[t - 1] = 0 if res.escaped else res.index
    return out
