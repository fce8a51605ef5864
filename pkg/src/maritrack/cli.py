"""Command line entry point: ``run``, ``report`` and ``validate``.

Log verbosity comes from ``MARITRACK_LOG_LEVEL`` (default ``WARNING``).
Every file a command produces lands inside its ``--out`` directory; files are
staged in a hidden temporary directory there and moved into place only once
the command has succeeded.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import shutil
import sys
import tempfile
import time
from contextlib import contextmanager
from pathlib import Path

from .config import ConfigError, emit_config, parse_config
from .metrics import evaluate, write_series
from .runlog import RunLog, RunLogError
from .sim import run_scenario

LOG_ENV = "MARITRACK_LOG_LEVEL"
log = logging.getLogger("maritrack")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _setup_logging() -> None:
    level = os.environ.get(LOG_ENV, "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


@contextmanager
def _staged(out_dir: Path):
    """Yield a scratch directory inside ``out_dir``; commit its files on success."""
    created = not out_dir.exists()
    out_dir.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=".staging-", dir=out_dir))
    try:
        yield tmp
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        if created and not any(out_dir.iterdir()):
            out_dir.rmdir()
        raise
    for p in sorted(tmp.iterdir()):
        os.replace(p, out_dir / p.name)
    tmp.rmdir()


def _load(path: str, seed_override: int | None):
    cfg = parse_config(path)
    if seed_override is not None:
        if seed_override < 0:
            raise ConfigError([("seed", "seed override must be non-negative")])
        cfg = cfg.model_copy(update={"seed": seed_override})
    return cfg


def _report_errors(exc: ConfigError) -> None:
    for where, msg in exc.errors:
        print(f"config error: {where}: {msg}", file=sys.stderr)


def cmd_run(args) -> int:
    try:
        cfg = _load(args.config, args.seed_override)
    except ConfigError as exc:
        _report_errors(exc)
        return EXIT_USAGE
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_USAGE

    out = Path(args.out)
    try:
        with _staged(out) as tmp:
            t0 = time.perf_counter()
            runlog = run_scenario(cfg)
            wall = time.perf_counter() - t0
            log.info("simulated %.1f s in %.2f s wall", cfg.duration, wall)
            runlog.write(tmp / "runlog.jsonl")
            (tmp / "config.yaml").write_text(emit_config(cfg), encoding="utf-8")
            summary = {"digest": runlog.digest(), "seed": cfg.seed, "wall_clock_s": wall,
                       "metrics": evaluate(runlog).to_dict()}
            (tmp / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n",
                                              encoding="utf-8")
    except Exception as exc:  # noqa: BLE001 - any failure becomes a clean nonzero exit
        log.debug("run failed", exc_info=True)
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    print(out / "summary.json")
    return EXIT_OK


def cmd_report(args) -> int:
    src = Path(args.runlog)
    if src.is_dir():
        src = src / "runlog.jsonl"
    try:
        runlog = RunLog.read(src)
    except (OSError, RunLogError) as exc:
        print(f"cannot read run log {src}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    out = Path(args.out) if args.out else src.parent
    try:
        with _staged(out) as tmp:
            report = evaluate(runlog).to_dict()
            (tmp / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n",
                                             encoding="utf-8")
            write_series(runlog, tmp)
    except Exception as exc:  # noqa: BLE001
        log.debug("report failed", exc_info=True)
        print(f"report failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    print(out / "report.json")
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        cfg = _load(args.config, args.seed_override)
    except ConfigError as exc:
        _report_errors(exc)
        return EXIT_USAGE
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    sys.stdout.write(emit_config(cfg))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="maritrack", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate a scenario and write its RunLog")
    r.add_argument("--config", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--seed-override", type=int, default=None)
    r.set_defaults(func=cmd_run)

    rep = sub.add_parser("report", help="compute metrics and CSV series from a RunLog")
    rep.add_argument("runlog", help="runlog.jsonl, or a run output directory")
    rep.add_argument("--out", default=None, help="defaults to the log's directory")
    rep.set_defaults(func=cmd_report)

    v = sub.add_parser("validate", help="check a config and print it with defaults filled in")
    v.add_argument("--config", required=True)
    v.add_argument("--seed-override", type=int, default=None)
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
