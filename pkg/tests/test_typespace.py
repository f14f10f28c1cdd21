from __future__ import annotations

import itertools
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lossy_bandit import typespace as ts
from lossy_bandit.rng import RandomStream, derive_key


@pytest.mark.parametrize("length,v,count", [(4, 2, 5), (2, 3, 6), (1, 7, 7)])
def test_enumeration_counts(length, v, count):
    en = ts.enumerate_types(length, v)
    assert len(en) == count == ts.num_types(length, v)


def test_enumeration_is_lexicographic_and_unique():
    en = ts.enumerate_types(5, 3)
    counts = [t.counts for t in en]
    assert counts == sorted(counts)
    assert len(set(counts)) == len(counts)
    assert all(sum(c) == 5 for c in counts)


def test_enumeration_guard():
    with pytest.raises(ValueError, match="guard"):
        ts.enumerate_types(200, 8)


@pytest.mark.parametrize("counts,size", [((2, 2), 6), ((4, 0), 1), ((1, 1, 2), 12)])
def test_class_size(counts, size):
    assert ts.type_class_size(ts.TypeVector(counts)) == size


def test_class_size_is_exact_beyond_64_bits():
    t = ts.TypeVector((60, 60))
    assert ts.type_class_size(t) == math.comb(120, 60)
    assert ts.log_type_class_size(t) == pytest.approx(math.log(math.comb(120, 60)), rel=1e-12)


@pytest.mark.parametrize("length", range(1, 13))
@pytest.mark.parametrize("v", range(1, 5))
def test_class_sizes_partition_the_space(length, v):
    en = ts.enumerate_types(length, v)
    assert sum(ts.type_class_size(t) for t in en) == v ** length


@pytest.mark.parametrize("length", [1, 4, 12])
@pytest.mark.parametrize("pmf", [(0.7, 0.3), (0.2, 0.5, 0.3), (0.1, 0.2, 0.3, 0.4), (1.0, 0.0)])
def test_iid_weights_sum_to_one(length, pmf):
    en = ts.enumerate_types(length, len(pmf))
    assert math.fsum(ts.iid_type_weight(pmf, t) for t in en) == pytest.approx(1.0, abs=1e-9)


def test_iid_weight_examples():
    assert ts.iid_type_weight((0.5, 0.5), ts.TypeVector((1, 1))) == pytest.approx(0.5, abs=1e-15)
    assert ts.iid_type_weight((0.7, 0.3), ts.TypeVector((2, 2))) == pytest.approx(6 * 0.49 * 0.09, abs=1e-15)
    assert ts.iid_type_weight((1.0, 0.0), ts.TypeVector((3, 1))) == 0.0


def test_empirical_type():
    assert ts.empirical_type((0, 1, 0, 1), 2).counts == (2, 2)
    assert ts.empirical_type((0, 0, 0, 0), 2).counts == (4, 0)
    with pytest.raises(ValueError):
        ts.empirical_type((0, 2), 2)


def test_type_class_round_trip():
    t = ts.TypeVector((2, 1, 1))
    members = {p for p in itertools.permutations((0, 0, 1, 2))}
    assert len(members) == ts.type_class_size(t)
    assert all(ts.empirical_type(y, 3) == t for y in members)


def test_singleton_class_sampling():
    rng = RandomStream(derive_key(1), 0)
    assert all(ts.sample_uniform_in_type(ts.TypeVector((4, 0)), rng) == (0, 0, 0, 0) for _ in range(20))


def test_uniform_within_type():
    t = ts.TypeVector((2, 2))
    key = derive_key(5)
    n = 60_000
    freq = Counter(ts.sample_uniform_in_type(t, RandomStream(key, i)) for i in range(n))
    assert len(freq) == 6
    for y, c in freq.items():
        assert ts.empirical_type(y, 2) == t
        assert abs(c / n - 1 / 6) < 0.01


@settings(max_examples=50)
@given(st.lists(st.integers(0, 3), min_size=1, max_size=10), st.integers(0, 2**32))
def test_sampling_preserves_composition(y, seed):
    t = ts.empirical_type(y, 4)
    out = ts.sample_uniform_in_type(t, RandomStream(derive_key(seed), 0))
    assert ts.empirical_type(out, 4) == t


@settings(max_examples=50)
@given(st.integers(1, 8), st.integers(1, 4), st.data())
def test_log_weight_matches_direct_product(length, v, data):
    raw = data.draw(st.lists(st.floats(0.05, 1.0), min_size=v, max_size=v))
    pmf = np.array(raw) / sum(raw)
    t = data.draw(st.sampled_from(ts.enumerate_types(length, v).types))
    direct = ts.type_class_size(t) * np.prod([p ** c for p, c in zip(pmf, t.counts)])
    assert ts.iid_type_weight(pmf, t) == pytest.approx(direct, rel=1e-10)


def test_distribution_lies_on_the_lattice():
    t = ts.TypeVector((1, 3))
    assert np.allclose(t.distribution * t.length, t.counts)
