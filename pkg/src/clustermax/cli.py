"""Command line: ``clustermax run <config>`` and ``clustermax validate <config>``."""

import argparse
import logging
import sys

from .config import load_config
from .errors import ConfigurationError
from .harness import run_experiment, validate


def _u64(s):
    v = int(s, 0)
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def build_parser():
    p = argparse.ArgumentParser(prog="clustermax", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment")
    run.add_argument("config")
    run.add_argument("--seed", type=_u64, help="override master_seed")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--out", help="output directory (else $CLUSTERMAX_OUT, else config)")
    val = sub.add_parser("validate", help="check a config without simulating")
    val.add_argument("config")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        if args.command == "validate":
            validate(cfg)
            print(f"{args.config}: ok ({cfg.experiment})")
            return 0
        code, summary = run_experiment(cfg, out=args.out, seed=args.seed,
                                       workers=max(1, args.workers))
    except ConfigurationError as exc:
        print(f"{args.config}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"{args.config}: {exc}", file=sys.stderr)
        return 2
    if code == 3:
        print(f"capped realization: {summary['error']}", file=sys.stderr)
        return 3
    for check in summary["checks"]:
        flag = "PASS" if check["pass"] else "FAIL"
        if not check["asserted"]:
            flag += " (not asserted)"
        print(f"{flag:22s} {check['name']}")
    return code


if __name__ == "__main__":
    sys.exit(main())
