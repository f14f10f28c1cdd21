"""Natural type selection baselines.

V1 draws every codebook from the uniform mixture over type classes. V2 sets
the next memoryless distribution to the type of the last reconstruction. V3
averages the types of ``k`` reconstructions and holds the result for ``k``
rounds. V2 and V3 see reconstructions only; they never receive costs.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import typespace as ts
from .core import DistortionSpec, Memoryless, ReconDistribution, SourceModel, TypeMixture, index_to_vector
from .episode import PolicyTrace, ReconstructionFeedback, run_episode
from .oracle import average_cost

logger = logging.getLogger(__name__)

SMOOTHING_FLOOR = 1e-3
VARIANTS = ("V1", "V2", "V3")


def uniform_type_mixture(length: int, v_size: int) -> TypeMixture:
    n = ts.num_types(length, v_size)
    return TypeMixture.from_weights(length, v_size, np.full(n, 1.0 / n))


def smooth(pmf, floor: float = SMOOTHING_FLOOR) -> np.ndarray:
    """Mix with the uniform law so every letter has probability at least ``floor``."""
    p = np.asarray(pmf, dtype=float)
    if floor * p.size > 1:
        raise ValueError("smoothing floor too large for the alphabet")
    return (1.0 - p.size * floor) * p + floor


@dataclass
class NtsState:
    variant: str
    length: int
    v_size: int
    current: ReconDistribution
    raw: np.ndarray | None = None  # unsmoothed per-symbol pmf behind ``current``
    k: int = 1
    floor: float = SMOOTHING_FLOOR
    acc: np.ndarray = None
    block_pos: int = 0
    history: list = field(default_factory=list)  # unsmoothed actions, one per update

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown NTS variant {self.variant!r}")
        if self.k < 1:
            raise ValueError("block length k must be positive")
        if self.acc is None:
            self.acc = np.zeros(self.v_size)

    def _set(self, pmf: np.ndarray) -> Memoryless:
        self.raw = pmf
        self.history.append(pmf)
        self.current = Memoryless(smooth(pmf, self.floor) if self.floor > 0 else pmf, self.length)
        return self.current


def _type_of(y: int, length: int, v_size: int) -> np.ndarray:
    return ts.empirical_type(index_to_vector(int(y), v_size, length), v_size).distribution


def nts_myopic_step(state: NtsState, y_prev) -> Memoryless:
    """Next action from the last reconstruction alone."""
    if isinstance(y_prev, (int, np.integer)):
        p = _type_of(y_prev, state.length, state.v_size)
    else:
        p = ts.empirical_type(y_prev, state.v_size).distribution
    return state._set(p)


def nts_averaged_step(state: NtsState, block: Sequence) -> Memoryless:
    """Average the types of a block of reconstructions into the next action."""
    if not block:
        raise ValueError("empty block")
    types = [
        _type_of(y, state.length, state.v_size) if isinstance(y, (int, np.integer))
        else ts.empirical_type(y, state.v_size).distribution
        for y in block
    ]
    return state._set(np.mean(types, axis=0))


class NtsPolicy:
    feedback = "reconstruction"

    def __init__(self, variant: str, length: int, v_size: int, q1=None, k: int = 1,
                 floor: float = SMOOTHING_FLOOR, x_matches_y: bool = True):
        if variant == "V1":
            current: ReconDistribution = uniform_type_mixture(length, v_size)
            raw = None
        else:
            raw = np.full(v_size, 1.0 / v_size) if q1 is None else np.asarray(q1, dtype=float)
            current = Memoryless(raw, length)
        self.state = NtsState(variant, length, v_size, current, raw, k=k, floor=floor)
        # an escaped frame carries x, whose type is meaningful only over the same alphabet
        self.x_matches_y = x_matches_y
        self._block: list[int] = []

    def act(self, t: int):
        return 0, self.state.current

    def update(self, fb: ReconstructionFeedback) -> None:
        if self.state.variant == "V1":
            return
        if fb.escaped and not self.x_matches_y:
            return
        if self.state.variant == "V2":
            nts_myopic_step(self.state, fb.reconstruction)
            return
        self._block.append(fb.reconstruction)
        self.state.block_pos = len(self._block)
        self.state.acc = self.state.acc + _type_of(fb.reconstruction, self.state.length, self.state.v_size)
        if len(self._block) == self.state.k:
            nts_averaged_step(self.state, self._block)
            self._block = []
            self.state.block_pos = 0
            self.state.acc = np.zeros(self.state.v_size)


def parse_policy_name(name: str) -> tuple[str, int]:
    """``"nts-v1"``, ``"nts-v2"`` or ``"nts-v3:k=<int>"`` to ``(variant, k)``."""
    if name == "nts-v1":
        return "V1", 1
    if name == "nts-v2":
        return "V2", 1
    if name.startswith("nts-v3"):
        _, _, arg = name.partition(":")
        key, _, val = arg.partition("=")
        if key != "k" or not val.isdigit() or int(val) < 1:
            raise ValueError(f"expected nts-v3:k=<positive int>, got {name!r}")
        return "V3", int(val)
    raise ValueError(f"unknown NTS policy {name!r}")


def run_nts_episode(source: SourceModel, spec: DistortionSpec, variant: str, horizon: int, seed: int,
                    k: int = 1, q1=None, floor: float = SMOOTHING_FLOOR, j_max: int | None = None
                    ) -> tuple[PolicyTrace, NtsPolicy]:
    if not spec.is_additive:
        raise ValueError("NTS needs an additive distortion over length-l vectors")
    policy = NtsPolicy(variant, spec.length, spec.v_size, q1=q1, k=k, floor=floor,
                       x_matches_y=spec.u_size == spec.v_size)
    kw = {} if j_max is None else {"j_max": j_max}
    trace = run_episode(source, spec, policy, horizon, seed, **kw)
    return trace, policy


def nts_regret_bound(q1, qstar) -> float:
    """``D(Q*_V || Q_1)`` in bits; ``inf`` when ``Q_1`` misses part of the support of ``Q*_V``."""
    p = np.asarray(qstar, dtype=float)
    q = np.asarray(q1, dtype=float)
    if p.shape != q.shape:
        raise ValueError("distributions over different alphabets")
    mask = p > 0
    if np.any(q[mask] <= 0):
        logger.warning("support violation: the bound is infinite")
        return math.inf
    return float(np.sum(p[mask] * np.log2(p[mask] / q[mask])))


class ActionCostCache:
    """Exact expected cost of the distributions an NTS run visits, memoized by description."""

    def __init__(self, source: SourceModel, spec: DistortionSpec):
        self.source = source
        self.spec = spec
        self._cache: dict = {}

    def __call__(self, Q: ReconDistribution) -> float:
        key = repr(sorted(Q.describe().items()))
        if key not in self._cache:
            self._cache[key] = average_cost(Q, self.source, self.spec)
        return self._cache[key]


def nts_regret_curve(trace: PolicyTrace, costs: ActionCostCache, reference: float) -> tuple[np.ndarray, float]:
    """Cumulative ``sum_t (b~(Q_t) - R_ref)``.

    The reference is the optimum of the policy's action class; an action seen
    in the run that does better tightens it, since it belongs to the class.
    """
    per_round = np.array([costs(Q) for Q in trace.recons])
    ref = min(reference, float(per_round.min()))
    return np.cumsum(per_round - ref), ref
