"""Experiment runner: oracle preparation, seeded episodes and on-disk artifacts.

A run directory holds::

    trace_seed<s>.csv   t,action,cost_bits_idealized,emitted_bits,escaped,cum_pseudo_regret
    regret.csv          t,mean,stderr over seeds
    bounds.csv          bound envelopes of the policy, per t
    oracle.json         exact costs, gaps and the constants used
    summary.json        one row of the cross-policy report

Floats are written with 12 significant digits so identical runs give
byte-identical files.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import lcb as lcb_mod
from . import lipschitz as lip
from . import nts as nts_mod
from .config import ExperimentConfig, load_config
from .core import min_match_probability
from .oracle import (
    best_memoryless,
    best_type_mixture,
    blahut_arimoto_fixed_distortion,
    calibrate_arms,
    optimal_action_and_gaps,
    pseudo_regret_of_trace,
)

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ("t", "action", "cost_bits_idealized", "emitted_bits", "escaped", "cum_pseudo_regret")


def fmt(x: float) -> str:
    return format(float(x), ".11e")


def _canon(obj):
    # 12 significant digits for every float; non-finite values become strings
    if isinstance(obj, dict):
        return {str(k): _canon(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canon(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _canon(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not math.isfinite(v):
            return str(v)
        return float(fmt(v))
    return obj


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_canon(obj), indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    path.write_text(buf.getvalue())


# ---------------------------------------------------------------- preparation

@dataclass
class Prepared:
    kind: str
    oracle: dict
    bounds_header: tuple
    bounds: list
    summary: dict = field(default_factory=dict)
    lcb_cfg: lcb_mod.LcbConfig | None = None
    gaps: np.ndarray | None = None
    arms: list | None = None
    lipschitz: tuple | None = None
    nts: tuple | None = None


def _calibrate(cfg: ExperimentConfig, arms, eta: float) -> tuple[float, dict]:
    p = cfg.policy
    if p.c != "calibrate":
        return float(p.c), {"c": float(p.c), "calibrated": False}
    cal = cfg.calibration
    c = calibrate_arms(cfg.source, arms, cfg.spec, eta, deltas=cal.deltas, ns=cal.ns, reps=cal.reps,
                       grid=cal.grid, seed=cal.seed, j_max=cfg.j_max)
    return c, {"c": c, "calibrated": True, "reps": cal.reps, "deltas": list(cal.deltas), "ns": list(cal.ns),
               "grid": list(cal.grid), "seed": cal.seed}


def _prepare_lcb(cfg: ExperimentConfig) -> Prepared:
    p, T = cfg.policy, cfg.horizon
    gaps = optimal_action_and_gaps(cfg.arms, cfg.source, cfg.spec, cfg.tolerance)
    etas = [min_match_probability(Q, cfg.spec) for Q in cfg.arms]
    if p.eta == "auto":
        eta = min(etas)
        if eta <= 0:
            raise ValueError("eta='auto' needs every arm to match every source symbol; set eta explicitly")
    else:
        eta = float(p.eta)
    c, cal = _calibrate(cfg, cfg.arms, eta)
    lc = lcb_mod.LcbConfig(alpha=p.alpha, c=c, eta=eta, k=len(cfg.arms), j_max=cfg.j_max)
    bounds = [
        (t, fmt(lcb_mod.regret_bound_thm1(gaps.gaps, t, lc)), fmt(lcb_mod.regret_envelope_cor1(lc.k, t, lc, gaps.lam)))
        for t in range(1, T + 1)
    ]
    oracle = {"policy": p.name, "gaps": gaps.to_dict(), "eta": eta, "arm_min_match": etas, "alpha": p.alpha,
              "calibration": cal, "arms": [Q.describe() for Q in cfg.arms]}
    summary = {"oracle_reference": gaps.R_star,
               "thm1_bound": lcb_mod.regret_bound_thm1(gaps.gaps, T, lc),
               "cor1_envelope": lcb_mod.regret_envelope_cor1(lc.k, T, lc, gaps.lam)}
    return Prepared("lcb", oracle, ("t", "thm1_bound", "cor1_envelope"), bounds, summary,
                    lcb_cfg=lc, gaps=gaps.gaps, arms=list(cfg.arms))


def _prepare_lipschitz(cfg: ExperimentConfig) -> Prepared:
    p, T = cfg.policy, cfg.horizon
    eta = float(p.eta)
    net, rep, costs, cont = lip.prepare_lipschitz(cfg.source, cfg.spec, eta, p.lam, T, epsilon=p.epsilon)
    eps = net.epsilon
    best = int(np.argmin(costs))
    c, cal = _calibrate(cfg, net.arms, eta)
    lc = lcb_mod.LcbConfig(alpha=p.alpha, c=c, eta=eta, k=len(net), j_max=cfg.j_max)
    bounds = []
    for t in range(1, T + 1):
        env = 0.0 if t < 2 else lip.thm2_envelope(lip.GammaReport(rep.max_matches, rep.gamma, rep.epsilon_star,
                                                                  rep.lam, eta, t, rep.y_size), c, p.alpha)
        bounds.append((t, fmt(env), fmt(lip.approximation_bound_bits(eps, t))))
    oracle = {"policy": p.name, "gamma": rep.to_dict(), "epsilon": eps, "net": net.to_dict(),
              "net_costs": costs, "net_best": best, "net_best_clamped": bool(net.clamped[best]),
              "continuum_optimum": {"q": cont.q, "cost": cont.cost, "on_boundary": cont.on_boundary},
              "calibration": cal, "alpha": p.alpha}
    summary = {"oracle_reference": cont.cost, "thm2_envelope": lip.thm2_envelope(rep, c, p.alpha),
               "approximation_bound": lip.approximation_bound_bits(eps, T)}
    return Prepared("lipschitz", oracle, ("t", "thm2_envelope", "approximation_bound"), bounds, summary,
                    lcb_cfg=lc, lipschitz=(net, costs, cont))


def _prepare_nts(cfg: ExperimentConfig) -> Prepared:
    p, T = cfg.policy, cfg.horizon
    variant, k = nts_mod.parse_policy_name(p.name)
    if variant == "V1":
        weights, ref = best_type_mixture(cfg.source, cfg.spec, cfg.tolerance)
        comparator = {"class": "type mixtures", "weights": weights, "cost": ref}
    else:
        pv, ref = best_memoryless(cfg.source, cfg.spec, cfg.tolerance)
        comparator = {"class": "memoryless", "per_symbol": pv, "cost": ref}
    kl = None
    if variant != "V1" and cfg.spec.is_additive:
        q1 = np.full(cfg.spec.v_size, 1.0 / cfg.spec.v_size) if p.q1 is None else np.asarray(p.q1, dtype=float)
        try:
            ba = blahut_arimoto_fixed_distortion(cfg.source.per_symbol_pmf, cfg.spec.per_symbol,
                                                 cfg.spec.level / cfg.spec.length)
            kl = nts_mod.nts_regret_bound(q1, ba.q)
            comparator["rate_distortion"] = {"q_star": ba.q, "rate_bits_per_symbol": ba.rate}
        except (ValueError, RuntimeError) as exc:
            logger.warning("no rate-distortion reference: %s", exc)
    bounds = [(t, "" if kl is None else fmt(kl)) for t in range(1, T + 1)]
    oracle = {"policy": p.name, "variant": variant, "k": k, "comparator": comparator, "kl_bound_bits": kl,
              "smoothing_floor": p.floor}
    summary = {"oracle_reference": ref, "nts_kl_bound": kl}
    return Prepared("nts", oracle, ("t", "kl_bound_bits"), bounds, summary, nts=(variant, k, ref))


def prepare(cfg: ExperimentConfig) -> Prepared:
    if cfg.policy.name == "lcb":
        return _prepare_lcb(cfg)
    if cfg.policy.name == "lipschitz":
        return _prepare_lipschitz(cfg)
    return _prepare_nts(cfg)


# ---------------------------------------------------------------- one seed

def run_seed(cfg: ExperimentConfig, prep: Prepared, seed: int, out: Path) -> tuple[np.ndarray, dict]:
    extra: dict = {}
    if prep.kind == "lcb":
        trace = lcb_mod.run_lcb_episode(cfg.source, prep.arms, cfg.spec, prep.lcb_cfg, cfg.horizon, seed)
        curve = pseudo_regret_of_trace(trace, prep.gaps)
    elif prep.kind == "lipschitz":
        net, costs, cont = prep.lipschitz
        trace = lcb_mod.run_lcb_episode(cfg.source, net.arms, cfg.spec, prep.lcb_cfg, cfg.horizon, seed)
        curve = lip.continuum_regret_curve(trace.actions, costs, cont.cost)
        split = lip.regret_split(trace.actions, costs, cont.cost)
        extra["split"] = split.to_dict()
    else:
        variant, k, ref = prep.nts
        trace, policy = nts_mod.run_nts_episode(cfg.source, cfg.spec, variant, cfg.horizon, seed, k=k,
                                                q1=cfg.policy.q1, floor=cfg.policy.floor, j_max=cfg.j_max)
        curve, used_ref = nts_mod.nts_regret_curve(trace, nts_mod.ActionCostCache(cfg.source, cfg.spec), ref)
        if used_ref < ref:
            logger.warning("seed %d visited an action below the computed class optimum by %g", seed, ref - used_ref)
        extra["reference"] = used_ref
    rows = [
        (t, a, fmt(b), e, int(esc), fmt(r))
        for t, (a, b, e, esc, r) in enumerate(
            zip(trace.actions, trace.costs, trace.emitted_bits, trace.escaped, curve), start=1)
    ]
    _write_csv(out / f"trace_seed{seed}.csv", TRACE_COLUMNS, rows)
    extra.update({"seed": seed, "final_regret": float(curve[-1]), "escapes": int(sum(trace.escaped)),
                  "mean_cost_bits": float(np.mean(trace.costs)), "mean_emitted_bits": float(np.mean(trace.emitted_bits))})
    return np.asarray(curve, dtype=float), extra


def _run_seed_job(args):
    return run_seed(*args)


# ---------------------------------------------------------------- experiment

def run_experiment(config_path, seeds=None, out=None, workers: int | None = None) -> Path:
    cfg = load_config(config_path)
    return run_loaded(cfg, seeds=seeds, out=out, workers=workers)


def run_loaded(cfg: ExperimentConfig, seeds=None, out=None, workers: int | None = None) -> Path:
    seeds = list(cfg.seeds if seeds is None else seeds)
    out_dir = Path(out or cfg.output or Path("runs") / cfg.name)
    out_dir.mkdir(parents=True, exist_ok=True)
    prep = prepare(cfg)
    workers = workers or cfg.workers
    jobs = [(cfg, prep, s, out_dir) for s in seeds]
    if workers > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_seed_job, jobs))
    else:
        results = [_run_seed_job(j) for j in jobs]

    curves = np.array([r[0] for r in results])
    mean = curves.mean(axis=0)
    stderr = curves.std(axis=0, ddof=1) / math.sqrt(len(seeds)) if len(seeds) > 1 else np.zeros_like(mean)
    _write_csv(out_dir / "regret.csv", ("t", "mean", "stderr"),
               [(t, fmt(m), fmt(s)) for t, (m, s) in enumerate(zip(mean, stderr), start=1)])
    _write_csv(out_dir / "bounds.csv", prep.bounds_header, prep.bounds)
    oracle = dict(prep.oracle)
    oracle["per_seed"] = [r[1] for r in results]
    write_json(out_dir / "oracle.json", oracle)
    T = cfg.horizon
    summary = {
        "name": cfg.name,
        "policy": cfg.policy.name,
        "horizon": T,
        "seeds": seeds,
        "final_regret_mean": float(mean[-1]),
        "final_regret_stderr": float(stderr[-1]),
        "regret_over_log_T": float(mean[-1] / math.log(T)),
        "thm1_bound": None,
        "cor1_envelope": None,
        "thm2_envelope": None,
        "nts_kl_bound": None,
    }
    summary.update(prep.summary)
    write_json(out_dir / "summary.json", summary)
    logger.info("wrote %s", out_dir)
    return out_dir


# ---------------------------------------------------------------- reports

REPORT_COLUMNS = ("name", "policy", "horizon", "oracle_reference", "final_regret_mean", "final_regret_stderr",
                  "regret_over_log_T", "thm1_bound", "cor1_envelope", "thm2_envelope", "nts_kl_bound")


def emit_reports(run_dir) -> list[dict]:
    """Collect ``summary.json`` from ``run_dir`` and its subdirectories into one table."""
    root = Path(run_dir)
    if not root.is_dir():
        raise FileNotFoundError(f"{root} is not a directory")
    paths = sorted(set(root.glob("summary.json")) | set(root.glob("*/summary.json")))
    if not paths:
        raise FileNotFoundError(f"no completed runs under {root}")
    rows = [json.loads(p.read_text()) for p in paths]
    table = [{c: r.get(c) for c in REPORT_COLUMNS} for r in rows]
    _write_csv(root / "report.csv", REPORT_COLUMNS,
               [["" if r[c] is None else r[c] for c in REPORT_COLUMNS] for r in table])
    return table


def format_report(table: list[dict]) -> str:
    def cell(v):
        if v is None:
            return "-"
        if isinstance(v, float):
            return f"{v:.6g}"
        return str(v)

    cells = [[cell(r[c]) for c in REPORT_COLUMNS] for r in table]
    widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(REPORT_COLUMNS)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(REPORT_COLUMNS, widths))]
    lines += ["  ".join(v.ljust(w) for v, w in zip(row, widths)) for row in cells]
    return "\n".join(lines)


def oracle_report(cfg: ExperimentConfig) -> dict:
    """Oracle material only (no episodes)."""
    return _canon(prepare(cfg).oracle)
