"""Command line entry point: ``run``, ``report``, ``oracle`` and ``net``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from . import lipschitz as lip
from .config import ConfigError, load_config
from .harness import emit_reports, format_report, oracle_report, run_loaded

logger = logging.getLogger("lossy_bandit")


def _seeds(text: str) -> list[int]:
    try:
        seeds = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"seeds must be comma-separated integers, got {text!r}") from None
    if not seeds or any(s < 0 for s in seeds):
        raise argparse.ArgumentTypeError("seeds must be nonnegative integers")
    return seeds


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lossy-bandit", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment and write its artifacts")
    run.add_argument("--config", required=True)
    run.add_argument("--seeds", type=_seeds, help="override the config's seeds, e.g. 0,1,2")
    run.add_argument("--out", help="output directory (default: config 'output' or runs/<name>)")
    run.add_argument("--workers", type=int, help="seeds run in parallel processes")

    rep = sub.add_parser("report", help="cross-policy table over completed runs")
    rep.add_argument("--dir", required=True)

    orc = sub.add_parser("oracle", help="print the oracle report of a config without running episodes")
    orc.add_argument("--config", required=True)

    net = sub.add_parser("net", help="dump the covering net of a lipschitz config as JSON")
    net.add_argument("--config", required=True)
    net.add_argument("--out", help="write to a file instead of stdout")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            cfg = load_config(args.config)
            out = run_loaded(cfg, seeds=args.seeds, out=args.out, workers=args.workers)
            print(out)
        elif args.command == "report":
            print(format_report(emit_reports(args.dir)))
        elif args.command == "oracle":
            print(json.dumps(oracle_report(load_config(args.config)), indent=2, sort_keys=True))
        elif args.command == "net":
            cfg = load_config(args.config)
            p = cfg.policy
            if p.name != "lipschitz":
                raise ConfigError(f"{args.config}: the net command needs a lipschitz policy, got {p.name!r}")
            rep = lip.gamma_and_epsilon(cfg.spec, float(p.eta), p.lam, cfg.horizon)
            eps = float(p.epsilon) if p.epsilon is not None else rep.epsilon_star
            net = lip.build_net(float(p.eta), eps, cfg.spec)
            if args.out:
                net.dump(args.out)
                print(args.out)
            else:
                print(json.dumps(net.to_dict(), indent=2, sort_keys=True))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
