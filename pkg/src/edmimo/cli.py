"""Command line entry point.

    edmimo run --preset fig3_ook_vs_M --out out/ [--trials N] [--seed S] [--threads T]
    edmimo run --config my.ini --out out/
    edmimo validate my.ini
    edmimo list-presets
    edmimo dump-preset fig9_sparse_nlos_aed > my.ini

``edmimo --preset ...`` without a subcommand means ``run``. Exit status is
0 on success, 2 for an unknown preset, unreadable file or invalid
scenario, and 1 when the run itself fails.
"""

import argparse
import json
import logging
import platform
import sys
import time
from pathlib import Path

from . import __version__, _accel
from .config import ConfigError, load_text, parse_text
from .experiments import apply_overrides, run_experiment
from .presets import PRESETS

log = logging.getLogger("edmimo")


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser():
    ap = argparse.ArgumentParser(prog="edmimo", description="Energy-detection SER experiments")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command")

    run = sub.add_parser("run", help="run a preset or scenario file")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", help="built-in scenario name")
    src.add_argument("--config", type=Path, help="scenario file (INI)")
    run.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    run.add_argument("--trials", type=_positive_int, help="override trials per point")
    run.add_argument("--seed", type=int, help="override the master seed")
    run.add_argument("--threads", type=_positive_int, help="worker threads (default: $ED_THREADS or 1)")
    run.add_argument("--shards", type=_positive_int, default=1, help=argparse.SUPPRESS)
    run.add_argument("--format", choices=["csv"], default="csv")

    val = sub.add_parser("validate", help="check a scenario file")
    val.add_argument("path", type=Path)

    sub.add_parser("list-presets", help="list built-in scenarios")

    dump = sub.add_parser("dump-preset", help="print a preset as a scenario file")
    dump.add_argument("name")
    return ap


def _read(path):
    try:
        return path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        print(f"edmimo: cannot read {path}: {exc}", file=sys.stderr)
        return None


def cmd_validate(args):
    text = _read(args.path)
    if text is None:
        return 2
    _, diags = parse_text(text, str(args.path))
    for d in diags:
        print(d)
    if diags:
        return 2
    print(f"{args.path}: ok")
    return 0


def cmd_list(args):
    for name, text in PRESETS.items():
        first = text.splitlines()[0].lstrip("# ").strip()
        print(f"{name:26s} {first}")
    return 0


def cmd_dump(args):
    if args.name not in PRESETS:
        print(f"edmimo: unknown preset {args.name!r}; try list-presets", file=sys.stderr)
        return 2
    sys.stdout.write(PRESETS[args.name])
    return 0


def cmd_run(args):
    if args.preset is not None:
        if args.preset not in PRESETS:
            print(f"edmimo: unknown preset {args.preset!r}; available: {', '.join(PRESETS)}", file=sys.stderr)
            return 2
        text, origin = PRESETS[args.preset], f"<preset {args.preset}>"
    else:
        text = _read(args.config)
        if text is None:
            return 2
        origin = str(args.config)
    try:
        spec = load_text(text, origin)
    except ConfigError as exc:
        for d in exc.diagnostics:
            print(d, file=sys.stderr)
        return 2
    spec = apply_overrides(spec, trials=args.trials, seed=args.seed)
    threads = _accel.resolve_threads(args.threads)
    overrides = {k: getattr(args, k) for k in ("trials", "seed", "threads") if getattr(args, k) is not None}

    t0 = time.perf_counter()
    started = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    try:
        files = run_experiment(spec, args.out, threads=threads, shard_count=args.shards,
                               progress=lambda msg: log.info(msg))
    except Exception as exc:  # anything past validation is a runtime failure
        log.debug("run failed", exc_info=True)
        print(f"edmimo: run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    manifest = {
        "name": spec.name,
        "kind": spec.kind,
        "source": origin,
        "seed": spec.seed,
        "trials": spec.trials,
        "overrides": overrides,
        "threads": threads,
        "backend": _accel.backend_name(),
        "version": __version__,
        "python": platform.python_version(),
        "started": started,
        "wall_clock_s": round(time.perf_counter() - t0, 3),
        "files": files,
        "scenario": text,
    }
    with open(args.out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    print(f"wrote {len(files)} csv file(s) and manifest.json to {args.out}")
    return 0


COMMANDS = {"run": cmd_run, "validate": cmd_validate, "list-presets": cmd_list, "dump-preset": cmd_dump}


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0].startswith("--") and argv[0] not in ("--help", "--verbose"):
        argv.insert(0, "run")
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s: %(message)s")
    if args.command is None:
        ap.print_help()
        return 2
    return COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
