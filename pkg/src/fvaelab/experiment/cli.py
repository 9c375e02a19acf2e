"""Command line: ``fvaelab <kind|recipe> [--config F] [--set k=v]... --out DIR``."""

from __future__ import annotations

import argparse
import sys

from .config import KINDS, ConfigError, coerce, parse_config
from .recipes import recipe, recipes
from .runner import RunError, run

EXIT_OK, EXIT_CONFIG, EXIT_RUN = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fvaelab", description="Run an experiment kind or a built-in recipe.")
    p.add_argument("target", help=f"experiment kind ({', '.join(KINDS)}), recipe name, or 'recipes'")
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override one key")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seeds", help="comma separated seeds (overrides run.seeds)")
    p.add_argument("--jobs", type=int, help="worker processes (overrides run.jobs)")
    p.add_argument("--echo", action="store_true", help="print the resolved config and exit")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.target == "recipes":
        print("\n".join(recipes()))
        return EXIT_OK
    try:
        if args.target in KINDS:
            base = {"kind": args.target}
        else:
            try:
                base = recipe(args.target)
            except KeyError as exc:
                raise ConfigError(str(exc.args[0])) from None
        overrides = list(args.set)
        if args.seeds is not None:
            coerce("run.seeds", args.seeds, "--seeds")
            overrides.append(f"run.seeds={args.seeds}")
        if args.jobs is not None:
            overrides.append(f"run.jobs={args.jobs}")
        cfg = parse_config(args.config, overrides, base)
        if args.target in KINDS and cfg.kind != args.target:
            raise ConfigError(f"config sets kind {cfg.kind!r} but {args.target!r} was requested", "kind")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.echo:
        sys.stdout.write(cfg.to_text())
        return EXIT_OK
    if not args.out:
        print("config error: --out is required", file=sys.stderr)
        return EXIT_CONFIG
    try:
        manifest = run(cfg, args.out)
    except RunError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_RUN
    print(f"wrote {len(manifest.artifacts)} artifacts to {args.out}")
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
