"""Covering nets over the reconstruction simplex and the net-based bandit.

Costs are Lipschitz in the metric ``mu(Q1, Q2) = max_x |ln p(x,Q1) - ln p(x,Q2)|``
(natural log), so an ``eps``-net in ``mu`` turns the continuum of categorical
reconstruction distributions with ``Q(y) >= eta`` into a finite arm set whose
best member is ``eps`` nats from the continuum optimum.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import optimize

from .core import Categorical, DistortionSpec, ReconDistribution, SourceModel, match_probability
from .episode import PolicyTrace
from .lcb import LcbConfig, run_lcb_episode
from .oracle import LN2, average_cost

logger = logging.getLogger(__name__)

NET_GUARD = 200_000
_COVER_SAMPLES = 1000
_MAX_REFINEMENTS = 6


# ---------------------------------------------------------------- metric

def _match_table(spec: DistortionSpec) -> np.ndarray:
    return np.array([spec.match_vector(x) for x in range(spec.x_size)], dtype=float)


def match_probabilities(Q: ReconDistribution, spec: DistortionSpec) -> np.ndarray:
    """``p(x, Q)`` for every ``x`` in index order."""
    if isinstance(Q, Categorical):
        return _match_table(spec) @ Q.q
    return np.array([match_probability(Q, x, spec) for x in range(spec.x_size)])


def metric_mu(Q1: ReconDistribution, Q2: ReconDistribution, spec: DistortionSpec) -> float:
    """``max_x |ln(p(x,Q1) / p(x,Q2))|`` in nats; ``inf`` when exactly one side has a zero."""
    p1, p2 = match_probabilities(Q1, spec), match_probabilities(Q2, spec)
    both = (p1 > 0) & (p2 > 0)
    if np.any((p1 > 0) != (p2 > 0)):
        logger.warning("metric between distributions with different match supports is infinite")
        return math.inf
    if not both.any():
        return 0.0
    return float(np.max(np.abs(np.log(p1[both]) - np.log(p2[both]))))


def _mu_rows(P: np.ndarray, p: np.ndarray) -> np.ndarray:
    # metric from one match-probability vector p to each row of P (all entries positive)
    return np.max(np.abs(np.log(P) - np.log(p)[None, :]), axis=1)


def random_member(rng: np.random.Generator, y_size: int, eta: float, n: int | None = None) -> np.ndarray:
    """Uniform (Dirichlet(1)) draws from ``{Q : Q(y) >= eta}``."""
    free = 1.0 - y_size * eta
    if free < 0:
        raise ValueError("eta * |Y| must not exceed 1")
    return eta + free * rng.dirichlet(np.ones(y_size), size=n)


# ---------------------------------------------------------------- net

def k_star(epsilon: float, eta: float, spec: DistortionSpec) -> float:
    """Net cardinality from the covering lemma."""
    return (math.sqrt(spec.max_matches()) / (eta * epsilon)) ** (spec.y_size - 1)


@dataclass
class CoveringNet:
    points: np.ndarray  # one categorical pmf per row
    epsilon: float
    eta: float
    beta: float
    clamped: np.ndarray = field(default=None)

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        if self.clamped is None:
            self.clamped = np.zeros(len(self.points), dtype=bool)
        self.clamped = np.asarray(self.clamped, dtype=bool)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def arms(self) -> list[Categorical]:
        return [Categorical(p) for p in self.points]

    def nearest(self, q, spec: DistortionSpec) -> tuple[int, float]:
        """Index of the closest point in ``mu`` and its distance."""
        M = _match_table(spec)
        d = _mu_rows(self.points @ M.T, M @ np.asarray(q, dtype=float))
        i = int(np.argmin(d))
        return i, float(d[i])

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "eta": self.eta,
            "beta": self.beta,
            "points": self.points.tolist(),
            "clamped": self.clamped.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CoveringNet":
        clamped = d.get("clamped")
        return cls(np.array(d["points"]), d["epsilon"], d["eta"], d["beta"],
                   None if clamped is None else np.array(clamped, dtype=bool))

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "CoveringNet":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _grid_points(y_size: int, eta: float, beta: float) -> tuple[np.ndarray, np.ndarray]:
    # cell centres of a beta-grid on the first |Y|-1 coordinates of the eta-slice
    span = 1.0 - y_size * eta
    n_cells = max(1, math.ceil(span / beta - 1e-12))
    h = span / n_cells
    dims = y_size - 1
    if dims == 0:
        return np.ones((1, 1)), np.zeros(1, dtype=bool)
    cells: list[tuple[int, ...]] = []

    def rec(prefix: tuple[int, ...], used: int):
        # a cell holds a member only if its lower corner leaves room for the rest
        if len(prefix) == dims:
            cells.append(prefix)
            return
        for c in range(n_cells):
            if (used + c) * h > span + 1e-12:
                break
            rec(prefix + (c,), used + c)
            if len(cells) > NET_GUARD:
                raise ValueError(f"net exceeds {NET_GUARD} points; increase epsilon or eta")

    rec((), 0)
    C = np.array(cells, dtype=float)
    head = eta + (C + 0.5) * h
    last = 1.0 - head.sum(axis=1)
    clamped = last < eta
    if clamped.any():
        # pull the free mass of the head back so the last coordinate sits at eta
        excess = (eta - last[clamped])
        free = head[clamped] - eta
        head[clamped] -= free * (excess / free.sum(axis=1))[:, None]
        last[clamped] = eta
    pts, first = np.unique(np.round(np.column_stack([head, last]), 15), axis=0, return_index=True)
    return pts / pts.sum(axis=1, keepdims=True), clamped[first]


def verify_cover(net: CoveringNet, spec: DistortionSpec, samples: np.ndarray) -> tuple[bool, float]:
    """Largest nearest-point distance over ``samples`` and whether it is within ``epsilon``."""
    M = _match_table(spec)
    net_p = net.points @ M.T
    worst = 0.0
    for q in samples:
        worst = max(worst, float(_mu_rows(net_p, M @ q).min()))
    return worst <= net.epsilon + 1e-12, worst


def build_net(eta: float, epsilon: float, spec: DistortionSpec, seed: int = 0,
              n_check: int = _COVER_SAMPLES) -> CoveringNet:
    if not 0 < eta < 1:
        raise ValueError("eta must lie in (0, 1)")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if eta * spec.y_size >= 1:
        raise ValueError(f"infeasible: eta * |Y| = {eta * spec.y_size} must be below 1")
    beta = eta * epsilon / math.sqrt(spec.max_matches())
    rng = np.random.default_rng(seed)
    samples = random_member(rng, spec.y_size, eta, n_check)
    for _ in range(_MAX_REFINEMENTS + 1):
        pts, clamped = _grid_points(spec.y_size, eta, beta)
        net = CoveringNet(pts, epsilon, eta, beta, clamped)
        ok, worst = verify_cover(net, spec, samples)
        if ok:
            return net
        logger.info("net at beta=%g misses by %g; halving beta", beta, worst - epsilon)
        beta /= 2.0
    raise RuntimeError("could not verify the cover after refining the grid")


# ---------------------------------------------------------------- complexity and tuning

@dataclass
class GammaReport:
    max_matches: int
    gamma: float
    epsilon_star: float
    lam: float
    eta: float
    horizon: int
    y_size: int

    @property
    def k_star(self) -> float:
        return (math.sqrt(self.max_matches) / (self.eta * self.epsilon_star)) ** (self.y_size - 1)

    def to_dict(self) -> dict:
        return {
            "max_matches": self.max_matches,
            "gamma": self.gamma,
            "epsilon_star": self.epsilon_star,
            "k_star": self.k_star,
            "lambda": self.lam,
            "eta": self.eta,
            "horizon": self.horizon,
        }


def gamma_value(max_matches: int, y_size: int, eta: float, lam: float) -> float:
    if lam <= 0:
        raise ValueError("lambda must be positive")
    return max_matches ** ((y_size - 1) / 2.0) / (lam * eta ** (y_size + 1))


def epsilon_star(gamma: float, horizon: float, y_size: int) -> float:
    if horizon < 2:
        raise ValueError("horizon must be at least 2")
    return (gamma * math.log(horizon) / horizon) ** (1.0 / (y_size + 1))


def gamma_and_epsilon(spec: DistortionSpec, eta: float, lam: float, horizon: int) -> GammaReport:
    m = spec.max_matches()
    g = gamma_value(m, spec.y_size, eta, lam)
    return GammaReport(m, g, epsilon_star(g, horizon, spec.y_size), lam, eta, horizon, spec.y_size)


def thm2_envelope(report: GammaReport, c: float, alpha: float) -> float:
    """``(1 + 2 c sqrt(alpha)) (Gamma T^|Y| ln T)^(1/(|Y|+1))``, bits."""
    T, k = report.horizon, report.y_size
    core = (report.gamma * T ** k * math.log(T)) ** (1.0 / (k + 1))
    return (1.0 + 2.0 * c * math.sqrt(alpha)) * core


# ---------------------------------------------------------------- continuum oracle

@dataclass
class ContinuumOptimum:
    q: np.ndarray
    cost: float
    on_boundary: bool


def continuum_optimum(source: SourceModel, spec: DistortionSpec, eta: float, resolution: float = 1e-4,
                      starts: Sequence[np.ndarray] = ()) -> ContinuumOptimum:
    """Minimum of the expected cost over ``{Q : Q(y) >= eta}``.

    Two outputs use a fine grid on ``Q(0)`` refined by bounded Brent; larger
    alphabets use SLSQP from the supplied starts and the uniform point.
    """
    k = spec.y_size
    if k == 2:
        grid = np.arange(eta, 1.0 - eta + resolution / 2, resolution)
        grid = grid[grid <= 1.0 - eta]
        vals = np.array([average_cost(Categorical([q, 1 - q]), source, spec) for q in grid])
        i = int(np.argmin(vals))
        lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
        best_q, best = float(grid[i]), float(vals[i])
        if hi > lo:
            res = optimize.minimize_scalar(lambda q: average_cost(Categorical([q, 1 - q]), source, spec),
                                           bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
            if res.fun < best:
                best_q, best = float(res.x), float(res.fun)
        q = np.array([best_q, 1 - best_q])
    else:
        cons = [{"type": "eq", "fun": lambda v: v.sum() - 1.0}]
        best, q = math.inf, None
        for s in list(starts) + [np.full(k, 1.0 / k)]:
            res = optimize.minimize(lambda v: average_cost(Categorical(np.clip(v, eta, 1) / np.clip(v, eta, 1).sum()),
                                                           source, spec),
                                    np.asarray(s, dtype=float), method="SLSQP", bounds=[(eta, 1.0)] * k,
                                    constraints=cons, options={"ftol": 1e-13, "maxiter": 500})
            v = np.clip(res.x, eta, 1.0)
            v /= v.sum()
            val = average_cost(Categorical(v), source, spec)
            if val < best:
                best, q = val, v
    on_boundary = bool(np.any(q < eta + 1e-6))
    if on_boundary:
        logger.info("continuum optimum sits on the eta boundary: %s", q)
    return ContinuumOptimum(q, best, on_boundary)


# ---------------------------------------------------------------- bandit over the net

@dataclass
class LipschitzRun:
    trace: PolicyTrace
    net: CoveringNet
    gamma: GammaReport
    net_costs: np.ndarray
    continuum: ContinuumOptimum

    @property
    def net_best(self) -> int:
        return int(np.argmin(self.net_costs))

    def split(self) -> "RegretSplit":
        return regret_split(self.trace.actions, self.net_costs, self.continuum.cost)


@dataclass
class RegretSplit:
    bandit: float         # against the best net point
    approximation: float  # T (R_net - R_continuum)
    total: float          # against the continuum optimum, summed round by round
    approximation_bound: float = math.nan

    def to_dict(self) -> dict:
        return {"bandit": self.bandit, "approximation": self.approximation, "total": self.total,
                "approximation_bound": self.approximation_bound}


def regret_split(actions: Sequence[int], net_costs: np.ndarray, r_cont: float) -> RegretSplit:
    costs = np.asarray(net_costs, dtype=float)
    r_net = float(costs.min())
    per_round = costs[np.asarray(actions, dtype=np.int64)]
    bandit = math.fsum(per_round - r_net)
    approx = len(per_round) * (r_net - r_cont)
    total = math.fsum(per_round - r_cont)
    return RegretSplit(bandit, approx, total)


def continuum_regret_curve(actions: Sequence[int], net_costs: np.ndarray, r_cont: float) -> np.ndarray:
    return np.cumsum(np.asarray(net_costs, dtype=float)[np.asarray(actions, dtype=np.int64)] - r_cont)


def prepare_lipschitz(source: SourceModel, spec: DistortionSpec, eta: float, lam: float, horizon: int,
                      net_seed: int = 0, epsilon: float | None = None
                      ) -> tuple[CoveringNet, GammaReport, np.ndarray, ContinuumOptimum]:
    """Everything a run needs that does not depend on the episode seed.

    The net is built at ``epsilon`` (default: the tuned ``eps*``).
    """
    rep = gamma_and_epsilon(spec, eta, lam, horizon)
    net = build_net(eta, rep.epsilon_star if epsilon is None else epsilon, spec, seed=net_seed)
    costs = np.array([average_cost(Q, source, spec) for Q in net.arms])
    best = int(np.argmin(costs))
    cont = continuum_optimum(source, spec, eta, starts=[net.points[best]])
    if cont.cost > costs[best]:
        # the net point is itself a member of the continuum
        cont = ContinuumOptimum(net.points[best].copy(), float(costs[best]), cont.on_boundary)
    if net.clamped[best]:
        logger.info("best net point is a clamped boundary point")
    return net, rep, costs, cont


def run_lipschitz_bandit(source: SourceModel, spec: DistortionSpec, eta: float, lam: float, horizon: int,
                         seed: int, c: float = 1.0, alpha: float = 3.0, prepared=None) -> LipschitzRun:
    net, rep, costs, cont = prepared or prepare_lipschitz(source, spec, eta, lam, horizon)
    cfg = LcbConfig(alpha=alpha, c=c, eta=eta, k=len(net))
    trace = run_lcb_episode(source, net.arms, spec, cfg, horizon, seed)
    return LipschitzRun(trace, net, rep, costs, cont)


def approximation_bound_bits(epsilon: float, horizon: int) -> float:
    """``eps T`` converted from nats to bits."""
    return epsilon * horizon / LN2
