"""Command-line entry point ``ce-precode``.

    ce-precode <subcommand> [--preset FILE] [--seed U64] [--workers K]
               [--out PATH] [--full] [key=value ...]

Values are layered: schema defaults, then the preset, then ``key=value``
overrides, then ``--seed``. Progress goes to stderr; the data go to the
output file only. Exit status is 0 on success, 2 when the spec does not
validate and 3 when any search failed to bracket its target.
"""

import argparse
import logging
import sys

from .._parallel import WORKERS_ENV, resolve_workers
from ..exceptions import BracketError, SpecValidationError
from .io import emit_csv
from .runner import run_experiment
from .spec import ExperimentKind, build_spec, load_preset, preset_names

__all__ = ["main", "build_parser", "EXIT_OK", "EXIT_SPEC", "EXIT_BRACKET"]

EXIT_OK = 0
EXIT_SPEC = 2
EXIT_BRACKET = 3

log = logging.getLogger("ceprecode.harness")


def build_parser():
    parser = argparse.ArgumentParser(prog="ce-precode", description="Constant-envelope precoding experiments.")
    parser.add_argument("--list-presets", action="store_true", help="list shipped presets and exit")
    sub = parser.add_subparsers(dest="command", metavar="<subcommand>")
    for kind in ExperimentKind:
        p = sub.add_parser(kind.value, help=f"run a {kind.value} sweep")
        p.add_argument("--preset", help="preset file, or the name of a shipped preset")
        p.add_argument("--seed", help="master seed (unsigned 64-bit)")
        p.add_argument("--workers", type=int, help=f"worker threads (default: ${WORKERS_ENV} or 1)")
        p.add_argument("--out", help="output CSV path (default: <subcommand>.csv)")
        p.add_argument("--full", action="store_true", help="use the preset's full-scale Monte Carlo sizes")
        p.add_argument("-q", "--quiet", action="store_true", help="suppress progress messages")
        p.add_argument("overrides", nargs="*", metavar="key=value")
    return parser


def _parse_overrides(items):
    out = {}
    for item in items:
        if "=" not in item:
            raise SpecValidationError(f"override {item!r} is not of the form key=value")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.list_presets:
        print("\n".join(preset_names()))
        return EXIT_OK
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_SPEC
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, stream=sys.stderr,
                        format="%(asctime)s %(message)s", datefmt="%H:%M:%S")
    out = args.out or f"{args.command}.csv"
    try:
        try:
            workers = resolve_workers(args.workers)
        except ValueError as exc:
            raise SpecValidationError(f"worker count: {exc}") from None
        raw = load_preset(args.preset) if args.preset else {}
        raw.update(_parse_overrides(args.overrides))
        if args.seed is not None:
            raw["seed"] = args.seed
        spec = build_spec(args.command, raw, output_path=out, full=args.full)
    except SpecValidationError as exc:
        print(f"ce-precode: invalid spec: {exc}", file=sys.stderr)
        return EXIT_SPEC
    try:
        record = run_experiment(spec, workers=workers)
    except BracketError as exc:
        print(f"ce-precode: {exc}", file=sys.stderr)
        return EXIT_BRACKET
    emit_csv(record, out)
    log.info("wrote %d rows to %s in %.1f s", len(record.rows), out, record.wall_time_seconds)
    if record.failed_rows:
        for row in record.failed_rows:
            print(f"ce-precode: row failed: {row['status']}", file=sys.stderr)
        return EXIT_BRACKET
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
