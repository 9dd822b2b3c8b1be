"""Command-line front end.

    heatpoint classify|obs-sweep|control|lemmas|all
              [--config PATH] [--out DIR] [--seed U64] [--bits LIST] [--jobs K]

Flags override the matching top-level config fields. Exit codes: 0 clean
run, 2 invalid config, 3 run finished with partial failures, 4 hard
failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import ConfigError
from .experiments import TASK_NAMES, ExperimentConfig, execute

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PARTIAL = 3
EXIT_HARD = 4


def _parse_bits(text: str) -> tuple:
    try:
        ladder = tuple(int(b) for b in text.split(",") if b.strip())
    except ValueError:
        raise ConfigError("--bits expects a comma-separated integer list")
    if not ladder:
        raise ConfigError("--bits expects at least one entry")
    return ladder


def _parse_seed(text: str) -> int:
    try:
        seed = int(text)
    except ValueError:
        raise ConfigError("--seed expects an integer")
    if not 0 <= seed < 2 ** 64:
        raise ConfigError("--seed must fit in an unsigned 64-bit integer")
    return seed


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="heatpoint",
        description="pointwise / shrinking-interval heat-control experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in TASK_NAMES + ("all",):
        p = sub.add_parser(name, help="run the %s task(s)" % name)
        p.add_argument("--config", metavar="PATH", help="JSON config file")
        p.add_argument("--out", metavar="DIR", help="output directory")
        p.add_argument("--seed", metavar="U64", help="RNG seed override")
        p.add_argument("--bits", metavar="LIST",
                       help="precision ladder, e.g. 128,256,512")
        p.add_argument("--jobs", metavar="K", type=int,
                       help="worker processes for sweeps")
    return parser


def load_config(args) -> ExperimentConfig:
    if args.config is not None:
        path = Path(args.config)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError("cannot read config %s: %s" % (path, exc))
        except json.JSONDecodeError as exc:
            raise ConfigError("config is not valid JSON: %s" % exc)
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        cfg = ExperimentConfig.from_json(raw)
    else:
        cfg = ExperimentConfig()
    overrides = {}
    if args.out is not None:
        overrides["out"] = args.out
    if args.seed is not None:
        overrides["seed"] = _parse_seed(args.seed)
    if args.bits is not None:
        overrides["bits"] = _parse_bits(args.bits)
    if args.jobs is not None:
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        overrides["jobs"] = args.jobs
    return cfg.override(**overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG
    tasks = TASK_NAMES if args.command == "all" else (args.command,)
    try:
        code, manifest = execute(cfg, tasks, Path(cfg.out))
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 -- contract: anything else is a hard failure
        print("hard failure: %s: %s" % (type(exc).__name__, exc), file=sys.stderr)
        return EXIT_HARD
    for name, outcome in manifest["tasks"].items():
        line = "%s: %s" % (name, outcome["status"])
        if outcome["failures"]:
            line += " (%d failure(s))" % len(outcome["failures"])
        print(line)
    print("wrote %d file(s) to %s" % (len(manifest["files"]) + 1, cfg.out))
    return EXIT_PARTIAL if code else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
