"""Command line entry point: ``accelopt run|run-all|check``."""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .config import ConfigError, parse_config
from .harness import EXIT_CONFIG, run_experiment


def _load(path: Path):
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError([f"{path}: {exc.strerror}"]) from exc
    return parse_config(text)


def _run_one(path: Path, prefix, quiet: bool) -> int:
    try:
        cfg = _load(path)
    except ConfigError as exc:
        print(f"{path}: config error\n{exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = prefix if prefix is not None else (cfg.output or path.with_suffix(""))
    result = run_experiment(cfg, out)
    if not quiet:
        status = "PASS" if result.exit_code == 0 else f"FAIL (exit {result.exit_code})"
        lines = [f"{path}: {cfg.mode} on {result.summary['objective']}: {status}"]
        for key, verdict in result.summary.items():
            if key.startswith("check."):
                lines.append(f"  {key[6:]}: {verdict}")
        if result.summary.get("warning.positive_lie_observed"):
            lines.append("  warning: positive Lie derivative observed (objective is not convex)")
        lines.append(f"  trace: {result.trace_path}")
        lines.append(f"  summary: {result.summary_path}")
        # one write per run so parallel runs do not interleave
        print("\n".join(lines), flush=True)
    return result.exit_code


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="accelopt", description=__doc__)
    parser.add_argument("--quiet", action="store_true", help="suppress the human-readable summary")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run one experiment config")
    p_run.add_argument("config", type=Path)
    p_run.add_argument("--output", help="output path prefix (default: config path without suffix)")
    p_all = sub.add_parser("run-all", help="run every *.cfg in a directory in parallel")
    p_all.add_argument("directory", type=Path)
    p_all.add_argument("--output", help="output directory (default: the config directory)")
    p_all.add_argument("--workers", type=int, default=4)
    p_check = sub.add_parser("check", help="parse and validate a config without running it")
    p_check.add_argument("config", type=Path)
    for p in (p_run, p_all, p_check):
        p.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING, format="%(levelname)s: %(message)s")

    if args.command == "check":
        try:
            _load(args.config)
        except ConfigError as exc:
            print(f"{args.config}: config error\n{exc}", file=sys.stderr)
            return EXIT_CONFIG
        if not args.quiet:
            print(f"{args.config}: ok")
        return 0

    if args.command == "run":
        return _run_one(args.config, args.output, args.quiet)

    configs = sorted(args.directory.glob("*.cfg"))
    if not configs:
        print(f"{args.directory}: no *.cfg files", file=sys.stderr)
        return EXIT_CONFIG
    outdir = Path(args.output) if args.output else None
    with ThreadPoolExecutor(max_workers=max(1, args.workers)) as pool:
        codes = list(
            pool.map(
                lambda p: _run_one(p, None if outdir is None else outdir / p.stem, args.quiet),
                configs,
            )
        )
    return max(codes)


if __name__ == "__main__":
    sys.exit(main())
