"""Lower-confidence-bound selection over a finite set of reconstruction distributions."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .codec import DEFAULT_J_MAX
from .core import DistortionSpec, ReconDistribution, SourceModel, min_match_probability
from .episode import CostFeedback, PolicyTrace, run_episode


@dataclass(frozen=True)
class LcbConfig:
    alpha: float = 3.0
    c: float = 1.0
    eta: float = 0.5
    k: int = 1
    j_max: int = DEFAULT_J_MAX
    escape: bool = True

    def __post_init__(self):
        if not self.alpha > 2:
            raise ValueError("alpha must exceed 2")
        if not self.c > 0:
            raise ValueError("c must be positive")
        if not 0 < self.eta <= 1:
            raise ValueError("eta must lie in (0, 1]")
        if self.k < 1:
            raise ValueError("at least one arm is required")

    def delta(self, t: int) -> float:
        return float(t) ** -self.alpha


@dataclass
class ArmState:
    n: int = 0
    costs: list = field(default_factory=list)
    total: float = 0.0

    def add(self, cost: float) -> None:
        if cost < 0:
            raise ValueError("costs are nonnegative")
        self.costs.append(cost)
        self.n += 1
        self.total += cost

    @property
    def mean(self) -> float:
        return self.total / self.n


def _radius(n: int, delta: float, cfg: LcbConfig) -> float:
    return (cfg.c / cfg.eta) * math.sqrt(math.log(1.0 / delta) / n)


def lcb_value(costs: Sequence[float], n: int, delta: float, cfg: LcbConfig) -> float:
    if n == 0:
        return -math.inf
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    return math.fsum(costs) / n - _radius(n, delta, cfg)


def select_action(states: Sequence[ArmState], t: int, cfg: LcbConfig) -> int:
    """Arm with the smallest lower confidence bound; the first one wins ties."""
    if t < 1:
        raise ValueError("rounds start at 1")
    delta = cfg.delta(t)
    best, best_val = 0, math.inf
    for a, s in enumerate(states):
        v = -math.inf if s.n == 0 else s.mean - _radius(s.n, delta, cfg)
        if v < best_val:
            best, best_val = a, v
            if v == -math.inf:
                break
    return best


class LcbPolicy:
    feedback = "cost"

    def __init__(self, cfg: LcbConfig):
        self.cfg = cfg
        self.states = [ArmState() for _ in range(cfg.k)]

    def act(self, t: int):
        return select_action(self.states, t, self.cfg), None

    def update(self, fb: CostFeedback) -> None:
        self.states[fb.action].add(fb.cost)


def validate_arms(arms: Sequence[ReconDistribution], spec: DistortionSpec, cfg: LcbConfig) -> None:
    if len(arms) != cfg.k:
        raise ValueError(f"config declares {cfg.k} arms but {len(arms)} were given")
    for a, Q in enumerate(arms):
        eta_a = min_match_probability(Q, spec)
        if eta_a <= 0 and not cfg.escape:
            raise ValueError(f"arm {a} never matches some source symbol and escape is disabled")
        if eta_a + 1e-12 < cfg.eta and not cfg.escape:
            raise ValueError(f"eta={cfg.eta} exceeds the minimum match probability {eta_a} of arm {a}")


def run_lcb_episode(source: SourceModel, arms: Sequence[ReconDistribution], spec: DistortionSpec,
                    cfg: LcbConfig, horizon: int, seed: int) -> PolicyTrace:
    validate_arms(arms, spec, cfg)
    return run_episode(source, spec, LcbPolicy(cfg), horizon, seed, arms=arms, j_max=cfg.j_max,
                       n_arms=len(arms))


def regret_bound_thm1(gaps: Sequence[float], t: float, cfg: LcbConfig) -> float:
    """Gap-dependent pseudo-regret bound after ``t`` rounds (bits)."""
    a = cfg.alpha
    if not a > 2:
        raise ValueError("alpha must exceed 2")
    lead = 4.0 * cfg.c ** 2 * a / cfg.eta ** 2
    tail = 2.0 * (a - 1.0) / (a - 2.0)
    return math.fsum(lead / g * math.log(t) + tail * g for g in gaps if g > 0)


def regret_envelope_cor1(k: int, t: float, cfg: LcbConfig, lam: float) -> float:
    """Worst-case envelope over gap configurations with ratio ``lam`` (constants made explicit)."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    return math.sqrt(4.0 * cfg.c ** 2 * cfg.alpha * k * t * math.log(t) / (lam * cfg.eta ** 2))
