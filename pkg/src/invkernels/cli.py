"""Command-line entry point: ``invkernels <command> [--config PATH] [--seed N] [--out PATH] [--threads N]``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
import argparse
import json
import logging
import sys
import time

import numpy as np

from . import experiments
from ._errors import NumericalError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

log = logging.getLogger("invkernels")


def build_parser():
    p = argparse.ArgumentParser(prog="invkernels", description="Group-invariant kernel regression experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in experiments.RUNNERS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON config file; missing keys take defaults")
        s.add_argument("--seed", type=int, help="overrides the config seed")
        s.add_argument("--out", help="output file (default: stdout)")
        s.add_argument("--threads", type=int, default=1, help="worker threads")
        s.add_argument("-v", "--verbose", action="store_true")
    return p


def load_config(path):
    if path is None:
        return {}
    try:
        with open(path) as f:
            cfg = json.load(f)
    except OSError as e:
        raise experiments.ConfigError(f"cannot read config: {e}") from None
    except json.JSONDecodeError as e:
        raise experiments.ConfigError(f"{path}: invalid JSON ({e})") from None
    if not isinstance(cfg, dict):
        raise experiments.ConfigError(f"{path}: top level must be an object")
    return cfg


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    t0 = time.perf_counter()
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg["seed"] = args.seed
        if args.threads < 1:
            raise experiments.ConfigError("--threads must be positive")
        text, _ = experiments.run(args.command, cfg, threads=args.threads)
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (experiments.ConfigError, ValueError, KeyError, TypeError, FileNotFoundError, IndexError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    # wall time goes to stderr so output files stay byte-identical across reruns
    print(f"{args.command} finished in {time.perf_counter() - t0:.2f} s", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
