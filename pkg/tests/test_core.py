from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from lossy_bandit import typespace as ts
from lossy_bandit.core import (
    Categorical,
    DistortionSpec,
    Memoryless,
    SourceModel,
    TypeMixture,
    UniformOnType,
    distortion_total,
    has_zero_match,
    index_to_vector,
    match_probability,
    match_probability_bruteforce,
    min_match_probability,
    parse_symbol,
    recon_from_description,
    recon_pmf,
    sample_recon,
    vector_to_index,
)
from lossy_bandit.rng import RandomStream, derive_key


def test_symbol_encoding():
    assert parse_symbol("0001") == 1
    assert parse_symbol("1000") == 8
    assert index_to_vector(6, 2, 4) == (0, 1, 1, 0)
    assert vector_to_index((0, 1, 1, 0), 2) == 6
    with pytest.raises(ValueError):
        vector_to_index((0, 2), 2)


def test_source_invariants():
    with pytest.raises(ValueError):
        SourceModel.categorical([0.5, 0.4])
    with pytest.raises(ValueError):
        SourceModel.categorical([1.2, -0.2])
    src = SourceModel.product([0.7, 0.3], 4)
    assert src.alphabet_size == 16
    assert src.pmf.sum() == pytest.approx(1.0, abs=1e-12)
    assert src.prob(parse_symbol("0001")) == pytest.approx(0.7 ** 3 * 0.3, abs=1e-15)
    assert np.allclose(src.pmf, [src.prob(x) for x in range(16)])


def test_distortion_examples(s0, s1):
    _, spec0 = s0
    _, spec1 = s1
    assert distortion_total(spec0, 0, 0) == 0.0
    assert distortion_total(spec1, parse_symbol("0110"), parse_symbol("0111")) == 1.0
    assert distortion_total(spec1, "0000", "1111") == 4.0
    with pytest.raises(ValueError):
        distortion_total(spec1, (0, 1), (0, 1, 1, 1))


def test_distortion_rejects_unmatched_symbols():
    with pytest.raises(ValueError, match="no reconstruction"):
        DistortionSpec.from_table([[1.0, 2.0], [0.0, 1.0]], 0.5)


def test_additive_expands_to_sum():
    per = np.array([[0.0, 1.0, 3.0], [2.0, 0.0, 1.0]])
    spec = DistortionSpec.additive(per, 3, 4.0)
    for x in range(spec.x_size):
        for y in range(spec.y_size):
            xd, yd = index_to_vector(x, 2, 3), index_to_vector(y, 3, 3)
            assert distortion_total(spec, x, y) == sum(per[a, b] for a, b in zip(xd, yd))


def test_match_probability_examples(s0, s1):
    _, spec0 = s0
    _, spec1 = s1
    assert match_probability(Categorical([0.5, 0.5]), 0, spec0) == 0.5
    assert match_probability(Categorical([0.25, 0.75]), 1, spec0) == 0.75
    assert match_probability(Memoryless([0.5, 0.5], 4), parse_symbol("0000"), spec1) == pytest.approx(5 / 16, abs=1e-15)


def test_min_match_probability(s0, s1):
    _, spec0 = s0
    _, spec1 = s1
    assert min_match_probability(Categorical([0.5, 0.5]), spec0) == 0.5
    assert min_match_probability(Categorical([0.9, 0.1]), spec0) == pytest.approx(0.1)
    assert min_match_probability(Memoryless([0.5, 0.5], 4), spec1) == pytest.approx(5 / 16, abs=1e-15)
    assert min_match_probability(Categorical([1.0, 0.0]), spec0) == 0.0
    assert has_zero_match(Categorical([1.0, 0.0]), spec0)


def test_recon_pmf_examples():
    y = parse_symbol("0101")
    assert recon_pmf(UniformOnType((2, 2)), y) == pytest.approx(1 / 6, abs=1e-15)
    mix = TypeMixture.from_weights(4, 2, np.full(5, 0.2))
    assert recon_pmf(mix, parse_symbol("0000")) == pytest.approx(0.2, abs=1e-15)
    assert recon_pmf(Memoryless([0.7, 0.3], 4), parse_symbol("0001")) == pytest.approx(0.1029, abs=1e-15)


def _variants():
    en = ts.enumerate_types(4, 2)
    return [
        Categorical([0.1, 0.2, 0.3, 0.4]),
        Memoryless([0.7, 0.3], 4),
        UniformOnType((1, 3)),
        TypeMixture.from_weights(4, 2, np.full(len(en), 1 / len(en))),
        TypeMixture.from_weights(4, 2, [0.0, 0.5, 0.0, 0.5, 0.0]),
        Memoryless([0.2, 0.5, 0.3], 3),
    ]


@pytest.mark.parametrize("Q", _variants(), ids=repr)
def test_pmf_sums_to_one(Q):
    assert math.fsum(recon_pmf(Q, y) for y in range(Q.y_size)) == pytest.approx(1.0, abs=1e-9)


def test_type_mixture_rejects_bad_weights():
    with pytest.raises(ValueError):
        TypeMixture.from_weights(4, 2, [0.5, 0.5, 0.5, 0.0, 0.0])
    with pytest.raises(ValueError):
        TypeMixture.from_weights(4, 2, [-0.5, 1.5, 0.0, 0.0, 0.0])


def test_memoryless_equals_its_type_mixture_exhaustively():
    for pv in ([0.7, 0.3], [0.5, 0.5], [0.9, 0.1]):
        mem = Memoryless(pv, 4)
        mix = TypeMixture.from_memoryless(pv, 4)
        for y in range(16):
            assert abs(mem.pmf(y) - mix.pmf(y)) <= 1e-9


@pytest.mark.parametrize("Q", _variants()[1:5], ids=repr)
def test_match_probability_routes_agree(Q, s1):
    _, spec = s1
    for x in range(16):
        assert match_probability(Q, x, spec) == pytest.approx(match_probability_bruteforce(Q, x, spec), abs=1e-12)


def test_memoryless_match_via_type_weights(s1):
    # aggregate P[type] * (matching fraction of the class) over type classes
    _, spec = s1
    pv = [0.7, 0.3]
    for x in range(16):
        xd = index_to_vector(x, 2, 4)
        total = 0.0
        for t in ts.enumerate_types(4, 2):
            members = [y for y in itertools.product(range(2), repeat=4) if ts.empirical_type(y, 2) == t]
            hits = sum(sum(a != b for a, b in zip(xd, y)) <= 1 for y in members)
            total += ts.iid_type_weight(pv, t) * hits / len(members)
        assert match_probability(Memoryless(pv, 4), x, spec) == pytest.approx(total, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.01, 1.0), min_size=2, max_size=2), st.integers(0, 15),
       st.floats(0.0, 4.0), st.floats(0.0, 4.0))
def test_match_probability_monotone_in_level(w, x, d1, d2):
    lo, hi = sorted((d1, d2))
    pv = np.array(w) / sum(w)
    Q = Memoryless(pv, 4)
    base = DistortionSpec.hamming(2, 0.0, length=4)
    assert match_probability(Q, x, base.with_level(lo)) <= match_probability(Q, x, base.with_level(hi)) + 1e-12


def test_point_mass_sampling():
    Q = Categorical([1.0, 0.0])
    assert all(sample_recon(Q, RandomStream(derive_key(3), i)) == 0 for i in range(100))


def test_constant_composition_samples():
    Q = UniformOnType((1, 3))
    for i in range(100):
        y = sample_recon(Q, RandomStream(derive_key(4), i))
        assert ts.empirical_type(index_to_vector(y, 2, 4), 2).counts == (1, 3)


def test_fair_coin_frequency():
    Q = Categorical([0.5, 0.5])
    key = derive_key(9)
    f = np.mean([sample_recon(Q, RandomStream(key, i)) == 0 for i in range(100_000)])
    assert abs(f - 0.5) < 0.01


@pytest.mark.parametrize("Q", _variants(), ids=repr)
def test_sampler_goodness_of_fit(Q):
    n = 100_000
    key = derive_key(21)
    ys = np.concatenate([Q.block(key, 1 + i, 10_000) for i in range(0, n, 10_000)])
    if ys.ndim == 2:
        k = Q.v_size
        ys = np.array([vector_to_index(r, k) for r in ys])
    counts = np.bincount(ys, minlength=Q.y_size)
    expected = n * Q.pmf_vector()
    mask = expected > 0
    assert counts[~mask].sum() == 0
    assert stats.chisquare(counts[mask], expected[mask]).pvalue > 0.01


@pytest.mark.parametrize("Q", _variants(), ids=repr)
def test_block_matches_scalar_codewords(Q):
    key = derive_key(17)
    block = Q.block(key, 3, 50)
    for r in range(50):
        y = Q.codeword(key, 3 + r)
        if block.ndim == 2:
            assert vector_to_index(block[r], Q.v_size) == y
        else:
            assert block[r] == y


@pytest.mark.parametrize("Q", _variants(), ids=repr)
def test_description_round_trip(Q):
    R = recon_from_description(Q.describe())
    assert np.allclose(R.pmf_vector(), Q.pmf_vector())
