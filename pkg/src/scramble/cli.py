"""Command-line interface.

    scramble run <config-file> [--set key=value ...] [--out DIR]
    scramble run --set physics.N=200 ...      (defaults + overrides)
    scramble figure <name> [--out DIR]
    scramble verify [pytest args...]

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys

from .collective import NumericalFailure
from .config import ConfigError, ExperimentConfig, load_config
from .runner import FIGURES, run, thread_budget


def _apply_thread_budget(cfg=None):
    budget = thread_budget(cfg)
    try:
        import numba
        numba.set_num_threads(max(1, min(budget, numba.config.NUMBA_NUM_THREADS)))
    except ImportError:
        pass


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="scramble",
        description="Entanglement and scrambling dynamics in collective "
                    "and long-range spin chains")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment from a config")
    p_run.add_argument("config", nargs="?", help="config file (key = value)")
    p_run.add_argument("--set", action="append", default=[], metavar="K=V",
                       help="override a config key, e.g. physics.N=200")
    p_run.add_argument("--out", help="output directory override")

    p_fig = sub.add_parser("figure", help="emit a named figure dataset")
    p_fig.add_argument("name", choices=sorted(FIGURES))
    p_fig.add_argument("--out", default="out")

    p_ver = sub.add_parser("verify", help="run the acceptance test suite")
    p_ver.add_argument("pytest_args", nargs="*", default=[])

    args = parser.parse_args(argv)

    try:
        if args.command == "run":
            if args.config:
                cfg = load_config(args.config)
            else:
                cfg = ExperimentConfig()
            for item in args.set:
                if "=" not in item:
                    raise ConfigError(f"--set expects key=value, got {item!r}")
                key, _, raw = item.partition("=")
                cfg.set_key(key.strip(), raw.strip())
            _apply_thread_budget(cfg)
            manifest = run(cfg, out_dir=args.out)
            out = args.out or cfg.output.directory
            print(f"wrote {len(manifest.checksums)} files to {out}")
            return 0
        if args.command == "figure":
            cfg = ExperimentConfig(method=f"figure:{args.name}")
            cfg.output.directory = args.out
            _apply_thread_budget(cfg)
            manifest = run(cfg, out_dir=args.out)
            print(f"wrote {len(manifest.checksums)} files to {args.out}")
            return 0
        if args.command == "verify":
            return _verify(args.pytest_args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NumericalFailure, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return 0


def _verify(extra_args) -> int:
    """Run the acceptance suite with pytest."""
    import pytest

    candidates = [
        os.environ.get("SCRAMBLE_TESTS"),
        os.path.join(os.getcwd(), "tests", "test_acceptance.py"),
        os.path.normpath(os.path.join(os.path.dirname(__file__),
                                      "..", "..", "tests",
                                      "test_acceptance.py")),
    ]
    for path in candidates:
        if path and os.path.exists(path):
            code = pytest.main([path, "-v", "-s", *extra_args])
            return 0 if code == 0 else 1
    print("acceptance suite not found; set SCRAMBLE_TESTS", file=sys.stderr)
    return 2


if __name__ == "__main__":
    sys.exit(main())
