"""Exact ground truth for costs, gaps, regret and rate-distortion references.

The expected cost of an action is computed two unrelated ways: a truncated
series over the geometric law of the first-match index with a certified tail,
and a one-dimensional integral identity for ``E[ln J]`` evaluated by
quadrature. Everything downstream (gaps, regret, bound checks) uses the
series; the integral exists to catch bugs in it.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import integrate, optimize, special

from . import typespace as ts
from .codec import DEFAULT_J_MAX, sample_costs
from .core import (
    DistortionSpec,
    Memoryless,
    ReconDistribution,
    SourceModel,
    TypeMixture,
    match_probability,
    min_match_probability,
    source_atoms_for,
    type_class_match_count,
)
from .rng import DOMAIN_AUX, derive_key

logger = logging.getLogger(__name__)

LN2 = math.log(2.0)
DEFAULT_TOL = 1e-10
_DIRECT_TERMS = 1 << 22
_EM_SPLIT = 1024
_GAP_FLOOR = 1e-12


# ---------------------------------------------------------------- per-symbol cost

def _tail_majorant(p: float, n_terms: int) -> float:
    # J = n + K with K ~ Geometric(p) on {J > n}; Jensen gives
    # E[log2 J | J > n] <= log2(n + 1/p), so the tail is at most
    # (1-p)^n * log2(n + 1/p).
    return math.exp(n_terms * math.log1p(-p)) * math.log2(n_terms + 1.0 / p)


def _em_tail(p: float, a: int) -> tuple[float, float]:
    # sum_{j>=a} f(j) for f(x) = p (1-p)^(x-1) ln x (nats) by Euler-Maclaurin:
    #   int_a^inf f + f(a)/2 - f'(a)/12 + f^(3)(a)/720 + R,
    # where int_a^inf f = p e^lam (e^{-lam a} ln a + E1(lam a)) / lam, lam = -ln(1-p).
    # |R| <= int_a^inf |f^(5)|, which for small lam is dominated by the
    # 24 p / (x^5 ln x) and p lam^5 ln x e^{-lam x} parts of the derivative.
    lam = -math.log1p(-p)
    ea = math.exp(-lam * (a - 1))
    integral = p * math.exp(lam) * (math.exp(-lam * a) * math.log(a) + special.exp1(lam * a)) / lam
    h0, h1, h2, h3 = math.log(a), 1.0 / a, -1.0 / a ** 2, 2.0 / a ** 3
    f0 = p * ea * h0
    f1 = p * ea * (-lam * h0 + h1)
    f3 = p * ea * (-lam ** 3 * h0 + 3 * lam ** 2 * h1 - 3 * lam * h2 + h3)
    value = integral + f0 / 2 - f1 / 12 + f3 / 720
    remainder = p * (6.0 / (a ** 4 * math.log(a)) + 2.0 * lam ** 4 * (math.log(a) + math.log(1.0 / lam) + 1.0))
    return value, remainder


@lru_cache(maxsize=65536)
def _series(p: float, tol: float) -> tuple[float, int, float]:
    if p == 1.0:
        return 0.0, 1, 0.0
    n = 16
    while _tail_majorant(p, n) > tol:
        n *= 2
        if n > _DIRECT_TERMS:
            return _series_split(p)
    j = np.arange(1, n + 1, dtype=float)
    terms = np.exp((j - 1.0) * math.log1p(-p)) * p * np.log2(j)
    # positive terms: pairwise summation is accurate to a few ulps
    return float(np.sum(terms)), n, _tail_majorant(p, n)


def _series_split(p: float) -> tuple[float, int, float]:
    # small p: exact head j < a plus the closed-form tail
    a = _EM_SPLIT
    j = np.arange(1, a, dtype=float)
    head = float(np.sum(np.exp((j - 1.0) * math.log1p(-p)) * p * np.log2(j)))
    tail, rem = _em_tail(p, a)
    return head + tail / LN2, a, rem / LN2


def _search_cost(p: float, tol: float) -> float:
    # optimizer objective: exact series, or -log2 p - gamma/ln2 (error O(p)) when p is tiny
    if p < 1e-7:
        return -math.log2(p) - np.euler_gamma / LN2
    return expected_bits_series(p, tol)[0]


def expected_bits_given_x(p: float, tol: float = DEFAULT_TOL) -> float:
    """``E[log2 J]`` for ``J ~ Geometric(p)``, within ``tol`` of the exact value."""
    return expected_bits_series(p, tol)[0]


def expected_bits_series(p: float, tol: float = DEFAULT_TOL) -> tuple[float, int, float]:
    """``(value, truncation index, certified tail bound)`` of the series route."""
    p = float(p)
    if not 0.0 < p <= 1.0:
        raise ValueError(f"match probability must lie in (0, 1], got {p!r}")
    return _series(p, float(tol))


def expected_log_integral(p: float) -> float:
    """``E[ln J]`` from ``int_0^inf (e^-t - E[e^{-tJ}]) dt/t`` by quadrature (nats)."""
    p = float(p)
    if not 0.0 < p <= 1.0:
        raise ValueError(f"match probability must lie in (0, 1], got {p!r}")
    if p == 1.0:
        return 0.0
    q = 1.0 - p

    def integrand(t: float) -> float:
        if t == 0.0:
            return q / p
        e = math.exp(-t)
        return e * q * (-math.expm1(-t)) / (1.0 - q * e) / t

    # the integrand bends on the scale t ~ p
    brk = [0.0, p, 1.0, 50.0]
    total = 0.0
    for a, b in zip(brk[:-1], brk[1:]):
        total += integrate.quad(integrand, a, b, epsabs=1e-13, epsrel=1e-12, limit=400)[0]
    total += integrate.quad(integrand, 50.0, math.inf, epsabs=1e-14, limit=200)[0]
    return total


def geometric_mgf(p: float, t: float) -> float:
    """``E[exp(-t J)]`` for ``J ~ Geometric(p)``."""
    e = math.exp(-t)
    return p * e / (1.0 - (1.0 - p) * e)


def expected_log_mgf_sum(p: float, n_terms: int = 200_000) -> float:
    """``E[ln J]`` by direct summation (nats); used to check the MGF integrand."""
    j = np.arange(1, n_terms + 1, dtype=float)
    return float(math.fsum(np.exp((j - 1.0) * math.log1p(-p)) * p * np.log(j)))


# ---------------------------------------------------------------- action cost

@dataclass
class CostReport:
    per_x: dict
    average: float
    truncation_index: int
    tail_bound: float

    @property
    def average_nats(self) -> float:
        return self.average * LN2


def expected_bits(Q: ReconDistribution, source: SourceModel, spec: DistortionSpec,
                  tol: float = DEFAULT_TOL) -> CostReport:
    """``b~(Q) = sum_x P_X(x) E[log2 J(x)]`` with a certified truncation error."""
    per_x: dict = {}
    total, tail, n_max = 0.0, 0.0, 1
    for x, w in source_atoms_for(Q, spec, source):
        if w == 0.0:
            continue
        p = match_probability(Q, x, spec)
        if p <= 0.0:
            raise ValueError(f"expected cost undefined: p(x, Q) = 0 for x = {x!r}")
        value, n, tb = expected_bits_series(p, tol)
        per_x[x] = value
        total += w * value
        tail += w * tb
        n_max = max(n_max, n)
    return CostReport(per_x, total, n_max, tail)


def average_cost(Q: ReconDistribution, source: SourceModel, spec: DistortionSpec,
                 tol: float = DEFAULT_TOL) -> float:
    return expected_bits(Q, source, spec, tol).average


def expected_bits_integral_route(Q: ReconDistribution, source: SourceModel, spec: DistortionSpec) -> float:
    """``b~(Q)`` in bits through the integral identity (independent of the series)."""
    total = 0.0
    for x, w in source_atoms_for(Q, spec, source):
        if w:
            total += w * expected_log_integral(match_probability(Q, x, spec)) / LN2
    return total


def jensen_bound(Q: ReconDistribution, source: SourceModel, spec: DistortionSpec) -> float:
    """``E_X[log2 1/p(X, Q)]``, an upper bound on ``b~(Q)``."""
    total = 0.0
    for x, w in source_atoms_for(Q, spec, source):
        if w:
            total += w * -math.log2(match_probability(Q, x, spec))
    return total


# ---------------------------------------------------------------- gaps and regret

@dataclass
class GapReport:
    a_star: int
    R_star: float
    costs: np.ndarray
    gaps: np.ndarray
    delta_min: float
    delta_max: float
    lam: float

    def to_dict(self) -> dict:
        return {
            "a_star": self.a_star,
            "R_star": self.R_star,
            "costs": self.costs.tolist(),
            "gaps": self.gaps.tolist(),
            "delta_min": self.delta_min,
            "delta_max": self.delta_max,
            "lambda": self.lam,
        }


def gap_report_from_costs(costs: Sequence[float]) -> GapReport:
    costs = np.asarray(costs, dtype=float)
    a_star = int(np.argmin(costs))  # first minimizer
    gaps = costs - costs[a_star]
    gaps[gaps < _GAP_FLOOR] = 0.0
    pos = gaps[gaps > 0]
    if pos.size:
        dmin, dmax = float(pos.min()), float(pos.max())
        lam = dmax / dmin
    else:
        dmin = dmax = 0.0
        lam = 1.0
    return GapReport(a_star, float(costs[a_star]), costs, gaps, dmin, dmax, lam)


def optimal_action_and_gaps(arms: Sequence[ReconDistribution], source: SourceModel, spec: DistortionSpec,
                            tol: float = DEFAULT_TOL) -> GapReport:
    if not arms:
        raise ValueError("at least one arm is required")
    return gap_report_from_costs([average_cost(Q, source, spec, tol) for Q in arms])


def pseudo_regret_of_trace(trace, gaps: GapReport | Sequence[float]) -> np.ndarray:
    """Cumulative ``sum_a N_t(a) Delta(a)`` after every round."""
    g = gaps.gaps if isinstance(gaps, GapReport) else np.asarray(gaps, dtype=float)
    actions = np.asarray(trace.actions, dtype=np.int64)
    n_arms = getattr(trace, "n_arms", None)
    if (n_arms is not None and n_arms != g.size) or (actions.size and actions.max() >= g.size):
        raise ValueError("trace and gap report refer to different arm sets")
    return np.cumsum(g[actions]) if actions.size else np.zeros(0)


# ---------------------------------------------------------------- comparators for NTS

def best_memoryless(source: SourceModel, spec: DistortionSpec, tol: float = DEFAULT_TOL
                    ) -> tuple[np.ndarray, float]:
    """Minimize ``b~`` over memoryless distributions ``P_V^{(x) l}``."""
    k = spec.v_size

    def cost(pv) -> float:
        try:
            return average_cost(Memoryless(pv, spec.length), source, spec, tol)
        except ValueError:
            return math.inf

    if k == 2:
        grid = np.linspace(1e-4, 1 - 1e-4, 401)
        vals = [cost([1 - q, q]) for q in grid]
        i = int(np.argmin(vals))
        lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
        res = optimize.minimize_scalar(lambda q: cost([1 - q, q]), bounds=(lo, hi), method="bounded",
                                       options={"xatol": 1e-10})
        q = float(res.x) if res.fun <= vals[i] else float(grid[i])
        pv = np.array([1 - q, q])
        return pv, cost(pv)

    def softmax(z):
        e = np.exp(z - z.max())
        return e / e.sum()

    res = optimize.minimize(lambda z: cost(softmax(np.append(z, 0.0))), np.zeros(k - 1),
                            method="Nelder-Mead", options={"xatol": 1e-9, "fatol": 1e-12, "maxiter": 20000})
    pv = softmax(np.append(res.x, 0.0))
    return pv, cost(pv)


def best_type_mixture(source: SourceModel, spec: DistortionSpec, tol: float = DEFAULT_TOL
                      ) -> tuple[np.ndarray, float]:
    """Minimize ``b~`` over mixtures of uniform type-class distributions."""
    if not spec.is_additive:
        raise ValueError("type mixtures need an additive distortion")
    en = ts.enumerate_types(spec.length, spec.v_size)
    atoms = list(source_atoms_for(TypeMixture.from_weights(spec.length, spec.v_size, np.full(len(en), 1.0 / len(en))),
                                  spec, source))
    weights = np.array([w for _, w in atoms])
    frac = np.array([[type_class_match_count(x, t, spec) / ts.type_class_size(t) for t in en]
                     for x, _ in atoms])

    def cost(a) -> float:
        p = np.clip(frac @ a, 0.0, 1.0)
        if np.any(p <= 0):
            return math.inf
        return float(sum(w * _search_cost(float(pi), tol) for w, pi in zip(weights, p) if w))

    m = len(en)
    res = optimize.minimize(cost, np.full(m, 1.0 / m), method="SLSQP", bounds=[(1e-12, 1.0)] * m,
                            constraints=[{"type": "eq", "fun": lambda a: a.sum() - 1.0}],
                            options={"ftol": 1e-14, "maxiter": 500})
    a = np.clip(res.x, 0.0, None)
    a /= a.sum()
    p = frac @ a
    return a, float(sum(w * expected_bits_given_x(float(pi), tol) for w, pi in zip(weights, p) if w))


# ---------------------------------------------------------------- rate-distortion

@dataclass
class BlahutArimotoResult:
    q: np.ndarray
    rate: float
    distortion: float
    slope: float
    iterations: int
    objective_history: list = field(default_factory=list)


def _ba_fixed_slope(pu, rho, s, q, tol, max_iters):
    a = np.exp(-s * (rho - rho.min(axis=1, keepdims=True)))
    history = []
    prev = math.inf
    for it in range(1, max_iters + 1):
        denom = a @ q
        cond = a * q[None, :] / denom[:, None]
        q_new = pu @ cond
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(cond > 0, cond / q_new[None, :], 1.0)
        rate = float(np.sum(pu[:, None] * cond * np.log2(ratio)))
        dist = float(np.sum(pu[:, None] * cond * rho))
        history.append(rate + s * dist / LN2)
        done = abs(prev - rate) < tol and np.max(np.abs(q_new - q)) < tol
        q, prev = q_new, rate
        if done:
            return q, rate, dist, it, history
    raise RuntimeError(f"Blahut-Arimoto did not converge in {max_iters} iterations at slope {s}")


def blahut_arimoto_fixed_distortion(pu, rho, d: float, tol: float = 1e-10, max_iters: int = 100_000,
                                    distortion_tol: float = 1e-9) -> BlahutArimotoResult:
    """Rate-distortion point ``R(P_U, d)`` (bits) and its reproduction law ``Q*_V``.

    The slope of the standard alternating minimization is bisected until the
    output distortion equals ``d``.
    """
    pu = np.asarray(pu, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if d < 0:
        raise ValueError("distortion level must be nonnegative")
    d_min = float(pu @ rho.min(axis=1))
    col = pu @ rho
    d_max = float(col.min())
    if d < d_min - distortion_tol:
        raise ValueError(f"distortion {d} below the minimum achievable {d_min}")
    if d >= d_max:
        q = np.zeros(rho.shape[1])
        q[int(np.argmin(col))] = 1.0
        return BlahutArimotoResult(q, 0.0, d_max, 0.0, 0)
    if d <= d_min + distortion_tol:
        zero = rho <= rho.min(axis=1, keepdims=True)
        if np.all(zero.sum(axis=1) == 1):
            q = pu @ zero.astype(float)
            h = -float(np.sum(pu[pu > 0] * np.log2(pu[pu > 0])))
            return BlahutArimotoResult(q, h, d_min, math.inf, 0)
        raise ValueError("the minimum-distortion corner is not unique; choose d > d_min")

    q0 = np.full(rho.shape[1], 1.0 / rho.shape[1])

    def run(s):
        return _ba_fixed_slope(pu, rho, s, q0.copy(), tol, max_iters)

    lo, hi = 0.0, 1.0
    while run(hi)[2] > d:
        lo, hi = hi, hi * 2.0
        if hi > 1e6:
            raise RuntimeError("could not bracket the slope for the requested distortion")
    best = None
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        out = run(mid)
        best = (mid, out)
        if abs(out[2] - d) < distortion_tol:
            break
        if out[2] > d:
            lo = mid
        else:
            hi = mid
    s, (q, rate, dist, iters, hist) = best
    return BlahutArimotoResult(q, rate, dist, s, iters, hist)


def binary_entropy(p: float) -> float:
    if p in (0.0, 1.0):
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


# ---------------------------------------------------------------- calibration

DEFAULT_C_GRID = tuple(0.25 * i for i in range(1, 17))


@dataclass
class Calibration:
    c: float
    achieved: bool
    eta: float
    target: float
    coverage: dict
    required: dict

    def to_dict(self) -> dict:
        return {
            "c": self.c,
            "achieved": self.achieved,
            "eta": self.eta,
            "target_bits": self.target,
            "coverage": {f"delta={d},n={n}": v for (d, n), v in self.coverage.items()},
        }


def deviation_samples(source: SourceModel, Q: ReconDistribution, spec: DistortionSpec, ns: Sequence[int],
                      reps: int, seed: int, target: float, j_max: int = DEFAULT_J_MAX) -> dict:
    """``|mean of first n costs - b~|`` for each ``n`` over ``reps`` independent runs."""
    n_max = max(ns)
    devs = {n: np.empty(reps) for n in ns}
    for r in range(reps):
        costs = sample_costs(source, Q, spec, n_max, derive_key(seed, DOMAIN_AUX, r), j_max)
        csum = np.cumsum(costs)
        for n in ns:
            devs[n][r] = abs(csum[n - 1] / n - target)
    return devs


def coverage_at(devs: dict, c: float, eta: float, deltas: Sequence[float]) -> dict:
    out = {}
    for delta in deltas:
        for n, dev in devs.items():
            radius = (c / eta) * math.sqrt(math.log(1.0 / delta) / n)
            out[(delta, n)] = float(np.mean(dev <= radius))
    return out


def calibrate_confidence_constant(source: SourceModel, Q: ReconDistribution, spec: DistortionSpec,
                                  deltas: Sequence[float] = (0.1, 0.01), ns: Sequence[int] = (10, 100, 1000),
                                  reps: int = 1000, grid: Sequence[float] = DEFAULT_C_GRID, seed: int = 0,
                                  eta: float | None = None, j_max: int = DEFAULT_J_MAX,
                                  devs: dict | None = None) -> Calibration:
    """Smallest grid ``c`` whose radius ``(c/eta) sqrt(ln(1/delta)/n)`` covers at rate ``1-delta``.

    ``devs`` reuses deviations from :func:`deviation_samples` (keyed by ``n``).
    """
    if eta is None:
        eta = min_match_probability(Q, spec)
    if eta <= 0:
        raise ValueError("calibration needs a strictly positive minimum match probability")
    target = average_cost(Q, source, spec)
    if devs is None:
        devs = deviation_samples(source, Q, spec, ns, reps, seed, target, j_max)
    else:
        devs = {n: devs[n] for n in ns}
    required = {}
    for delta in deltas:
        for n, dev in devs.items():
            required[(delta, n)] = float(np.quantile(dev * eta / math.sqrt(math.log(1.0 / delta) / n), 1 - delta))
    grid = sorted(grid)
    for c in grid:
        cov = coverage_at(devs, c, eta, deltas)
        if all(cov[(delta, n)] >= 1 - delta for (delta, n) in cov):
            return Calibration(c, True, eta, target, cov, required)
    c = grid[-1]
    logger.warning("no grid value reached the target coverage; reporting c=%g", c)
    return Calibration(c, False, eta, target, coverage_at(devs, c, eta, deltas), required)


def calibrate_arms(source: SourceModel, arms: Sequence[ReconDistribution], spec: DistortionSpec,
                   eta: float, **kwargs) -> float:
    """One ``c`` valid for every arm at the common ``eta`` (the largest per-arm value)."""
    return max(calibrate_confidence_constant(source, Q, spec, eta=eta, **kwargs).c for Q in arms)
