from __future__ import annotations

import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lossy_bandit import nts, oracle
from lossy_bandit import typespace as ts
from lossy_bandit.core import Memoryless, parse_symbol, recon_pmf
from lossy_bandit.episode import ReconstructionFeedback


def test_uniform_type_mixture():
    mix = nts.uniform_type_mixture(4, 2)
    assert np.allclose(mix.weights, 0.2)
    assert math.fsum(recon_pmf(mix, y) for y in range(16)) == pytest.approx(1.0, abs=1e-12)


def test_uniform_mixture_redundancy(s1):
    src, spec = s1
    mix_cost = oracle.average_cost(nts.uniform_type_mixture(4, 2), src, spec)
    _, best = oracle.best_memoryless(src, spec)
    assert mix_cost - best <= (2 - 1) * math.log2(4 + 1)


def test_smoothing():
    assert np.allclose(nts.smooth([1.0, 0.0], 1e-3), [0.999, 0.001])
    assert nts.smooth([0.3, 0.7]).sum() == pytest.approx(1.0)
    with pytest.raises(ValueError):
        nts.smooth([0.5, 0.5], 0.6)


def _state(variant="V2", floor=nts.SMOOTHING_FLOOR, k=1, length=4):
    return nts.NtsState(variant, length, 2, Memoryless([0.5, 0.5], length), k=k, floor=floor)


def test_myopic_step():
    st_ = _state(floor=0.0)
    Q = nts.nts_myopic_step(st_, parse_symbol("0101"))
    assert isinstance(Q, Memoryless) and np.allclose(Q.per_symbol, [0.5, 0.5]) and Q.length == 4
    st_ = _state()
    Q = nts.nts_myopic_step(st_, (0, 0, 0, 0))
    assert np.allclose(st_.raw, [1.0, 0.0])
    assert np.all(Q.per_symbol > 0)


@given(st.integers(0, 15))
def test_myopic_actions_are_types(y):
    st_ = _state()
    nts.nts_myopic_step(st_, y)
    assert np.allclose(st_.raw * 4, np.round(st_.raw * 4))


def test_averaged_step():
    st_ = _state("V3", floor=0.0, k=2, length=1)
    Q = nts.nts_averaged_step(st_, [0, 1])
    assert np.allclose(Q.per_symbol, [0.5, 0.5]) and Q.length == 1
    a, b = _state("V3", k=1), _state("V2")
    assert np.array_equal(nts.nts_averaged_step(a, [6]).per_symbol, nts.nts_myopic_step(b, 6).per_symbol)
    with pytest.raises(ValueError):
        nts.nts_averaged_step(a, [])


def test_state_validation():
    with pytest.raises(ValueError):
        _state("V4")
    with pytest.raises(ValueError):
        _state("V3", k=0)


def test_policy_names():
    assert nts.parse_policy_name("nts-v1") == ("V1", 1)
    assert nts.parse_policy_name("nts-v2") == ("V2", 1)
    assert nts.parse_policy_name("nts-v3:k=25") == ("V3", 25)
    for bad in ("nts-v3", "nts-v3:k=0", "nts-v3:j=2", "nts-v9"):
        with pytest.raises(ValueError):
            nts.parse_policy_name(bad)


def test_kl_bound():
    assert nts.nts_regret_bound([0.3, 0.7], [0.3, 0.7]) == 0.0
    assert nts.nts_regret_bound([0.25, 0.75], [0.5, 0.5]) == pytest.approx(0.20751874963942185, abs=1e-12)
    assert nts.nts_regret_bound([1.0, 0.0], [0.5, 0.5]) == math.inf
    with pytest.raises(ValueError):
        nts.nts_regret_bound([0.5, 0.5], [0.2, 0.3, 0.5])


@given(st.lists(st.floats(0.01, 1), min_size=3, max_size=3), st.lists(st.floats(0.0, 1), min_size=3, max_size=3))
def test_kl_nonnegative(q, p):
    if sum(p) == 0:
        return
    assert nts.nts_regret_bound(np.array(q) / sum(q), np.array(p) / sum(p)) >= -1e-12


# ---------------------------------------------------------------- episodes

def test_v3_with_unit_blocks_is_v2(s1):
    src, spec = s1
    a, _ = nts.run_nts_episode(src, spec, "V2", 400, seed=3)
    b, _ = nts.run_nts_episode(src, spec, "V3", 400, seed=3, k=1)
    assert a.actions == b.actions and a.costs == b.costs and a.reconstructions == b.reconstructions
    assert [Q.describe() for Q in a.recons] == [Q.describe() for Q in b.recons]


def test_v3_holds_actions_within_blocks(s1):
    src, spec = s1
    tr, pol = nts.run_nts_episode(src, spec, "V3", 60, seed=1, k=20)
    d = [Q.describe()["memoryless"] for Q in tr.recons]
    for start in (0, 20, 40):
        assert all(x == d[start] for x in d[start:start + 20])
    assert len(pol.state.history) == 3


def test_v1_never_moves(s1):
    src, spec = s1
    tr, _ = nts.run_nts_episode(src, spec, "V1", 50, seed=0)
    assert all(Q is tr.recons[0] for Q in tr.recons)


def test_v1_regret_against_type_mixtures(s1):
    src, spec = s1
    tr, _ = nts.run_nts_episode(src, spec, "V1", 200, seed=2)
    _, ref = oracle.best_type_mixture(src, spec)
    curve, used = nts.nts_regret_curve(tr, nts.ActionCostCache(src, spec), ref)
    step = oracle.average_cost(nts.uniform_type_mixture(4, 2), src, spec) - ref
    assert used == ref and step > 0
    assert np.allclose(np.diff(curve), step, atol=1e-12)


def test_policy_sees_no_cost_channel(s1):
    src, spec = s1
    fields = {f.name for f in dataclasses.fields(ReconstructionFeedback)}
    assert fields == {"reconstruction", "escaped"}

    class Spy(nts.NtsPolicy):
        seen = []

        def update(self, fb):
            self.seen.append(fb)
            super().update(fb)

    pol = Spy("V2", 4, 2)
    from lossy_bandit.episode import run_episode
    run_episode(src, spec, pol, 100, seed=5)
    assert len(Spy.seen) == 100 and all(type(fb) is ReconstructionFeedback for fb in Spy.seen)


@pytest.mark.parametrize("variant,k", [("V2", 1), ("V3", 7)])
def test_actions_depend_on_reconstructions_only(variant, k, s1):
    # replaying the decoder-side sequence alone reproduces every action
    src, spec = s1
    tr, _ = nts.run_nts_episode(src, spec, variant, 300, seed=8, k=k)
    replay = nts.NtsPolicy(variant, 4, 2, k=k)
    for t, (y, esc) in enumerate(zip(tr.reconstructions, tr.escaped), start=1):
        assert replay.act(t)[1].describe() == tr.recons[t - 1].describe()
        replay.update(ReconstructionFeedback(y, esc))


def test_point_mass_start_is_smoothed(s1):
    src, spec = s1
    tr, pol = nts.run_nts_episode(src, spec, "V2", 100, seed=0, q1=[1.0, 0.0], j_max=1 << 12)
    assert len(tr) == 100
    assert all(np.all(Q.per_symbol >= nts.SMOOTHING_FLOOR - 1e-15) for Q in tr.recons[1:])


def test_regret_reference_tightens(s1):
    src, spec = s1
    tr, _ = nts.run_nts_episode(src, spec, "V2", 200, seed=4)
    cache = nts.ActionCostCache(src, spec)
    curve, used = nts.nts_regret_curve(tr, cache, math.inf)
    assert used == min(cache(Q) for Q in tr.recons)
    assert np.all(np.diff(curve) >= -1e-12)


def test_nts_needs_additive_spec(s0):
    src, spec = s0
    with pytest.raises(ValueError):
        nts.run_nts_episode(src, spec, "V2", 10, seed=0)


def test_type_enumeration_consistent_with_actions(s1):
    src, spec = s1
    tr, pol = nts.run_nts_episode(src, spec, "V2", 100, seed=6)
    en = ts.enumerate_types(4, 2)
    for raw in pol.state.history:
        en.index_of(np.round(raw * 4).astype(int))
