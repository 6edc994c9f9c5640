"""Command line interface.

    esn run <config.json> [--out DIR] [--seed N] [--threads N]
                          [--override key=value ...]
    esn validate <config.json> [--threads N]

Exit codes for run: 0 every criterion passed, 2 a criterion failed,
1 usage or configuration error. validate reports failures as data and
exits 0 unless the config itself is invalid.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .config import ConfigError, apply_overrides, load_config, validate_config
from .errors import ContractViolation
from .experiments import run_experiment, validation_suite, _jsonable
from .config import scenario_from_config

__all__ = ["main", "run", "validate"]


def _thread_count(arg) -> int:
    if arg is not None:
        return max(1, int(arg))
    env = os.environ.get("ESN_THREADS")
    return max(1, int(env)) if env else 1


def run(config_path, out_dir, overrides=(), seed=None, threads=None):
    """Load + validate the config, dispatch the experiment, write outputs.

    Returns the ExperimentResult; raises ConfigError on bad input.
    """
    cfg = load_config(config_path)
    cfg = apply_overrides(cfg, overrides or ())
    if seed is not None:
        cfg["seed"] = int(seed)
    validate_config(cfg)
    result = run_experiment(cfg, threads=_thread_count(threads))
    result.write(Path(out_dir))
    return result


def validate(config_path, threads=None):
    """Run the cross-module invariant suite on the config's scenario."""
    cfg = load_config(config_path)
    validate_config(cfg)
    scn = scenario_from_config(cfg)
    return validation_suite(scn)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="esn",
        description="Exact extremal shot noise simulation and verification",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment from a JSON config")
    p_run.add_argument("config", help="path to the experiment config")
    p_run.add_argument("--out", default="out", help="output directory (default: out)")
    p_run.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_run.add_argument("--threads", type=int, default=None, help="worker threads (or ESN_THREADS)")
    p_run.add_argument(
        "--override",
        nargs="*",
        default=[],
        metavar="K=V",
        help="dotted-path config overrides, e.g. reps=2000 scenario.lambda=10",
    )

    p_val = sub.add_parser("validate", help="run the cross-module invariant suite")
    p_val.add_argument("config", help="path to the experiment config")
    p_val.add_argument("--threads", type=int, default=None)

    args = parser.parse_args(argv)

    if args.command == "run":
        try:
            result = run(
                args.config,
                args.out,
                overrides=args.override,
                seed=args.seed,
                threads=args.threads,
            )
        except ConfigError as e:
            print(f"config error at {e.pointer}: {e}", file=sys.stderr)
            return 1
        except (ContractViolation, FileNotFoundError) as e:
            print(f"error: {e}", file=sys.stderr)
            return 1
        for name, crit in result.summary.get("criteria", {}).items():
            status = "PASS" if crit.get("pass", False) else "FAIL"
            print(f"{status} {result.experiment}.{name}")
        print(f"outputs written to {args.out} (digest {result.scenario_digest[:12]})")
        return 0 if result.passed else 2

    if args.command == "validate":
        try:
            checks = validate(args.config, threads=args.threads)
        except ConfigError as e:
            print(f"config error at {e.pointer}: {e}", file=sys.stderr)
            return 1
        except (ContractViolation, FileNotFoundError) as e:
            print(f"error: {e}", file=sys.stderr)
            return 1
        print(json.dumps(_jsonable(checks), indent=2))
        return 0

    return 1


if __name__ == "__main__":
    sys.exit(main())
