"""Command-line interface.

Subcommands: ``simulate`` (replicated scenario family -> summary CSVs),
``analyze`` (CSV + column-mapping config -> tables and JSON report), and
``scenario-dump`` (print a family's exact config grid).  Exit codes:
0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from .cox import CoxError, TieMethod
from .data import ColumnMapping, DataError
from .harness import ScenarioUnusableError, run_analysis, run_family
from .mediation import MediationError
from .simulate import FAMILIES, CalibrationError, make_scenarios

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); we want exit 1
        raise UsageError(message)


def parse_mapping_file(path: str) -> ColumnMapping:
    """Flat key = value config mapping column roles to CSV header names.

    Keys: time, event, exposure, mediator (comma-separated lists for the
    last two), and optional entry.  '#' starts a comment.
    """
    values: dict[str, str] = {}
    try:
        with open(path) as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise DataError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
                key, _, value = line.partition("=")
                values[key.strip().lower()] = value.strip()
    except FileNotFoundError:
        raise DataError(f"no such config file: {path}") from None

    missing = [k for k in ("time", "event", "exposure", "mediator") if not values.get(k)]
    if missing:
        raise DataError(f"config {path} missing keys: {', '.join(missing)}")

    def split(key: str) -> tuple[str, ...]:
        return tuple(tok.strip() for tok in values[key].split(",") if tok.strip())

    return ColumnMapping(
        time=values["time"],
        event=values["event"],
        entry=values.get("entry") or None,
        exposures=split("exposure"),
        mediators=split("mediator"),
    )


def _build_parser() -> _Parser:
    parser = _Parser(prog="survmed", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a replicated scenario family")
    sim.add_argument("--family", required=True, choices=FAMILIES)
    sim.add_argument("--q", type=int, default=None, help="replications per scenario (default 1000)")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", default=".", help="output directory for summary CSVs")
    sim.add_argument("--parallel", type=int, default=1)
    sim.add_argument("--ties", choices=[t.value for t in TieMethod], default="efron")

    ana = sub.add_parser("analyze", help="mediation analysis of a CSV dataset")
    ana.add_argument("--data", required=True, help="input CSV path")
    ana.add_argument("--config", required=True, help="column-mapping config file")
    ana.add_argument("--bootstrap", type=int, default=0, help="bootstrap replicates (0 = no CIs)")
    ana.add_argument("--level", type=float, default=0.95)
    ana.add_argument("--random-control", action="store_true")
    ana.add_argument("--seed", type=int, default=0)
    ana.add_argument("--out", default=".", help="output directory for tables and report")
    ana.add_argument("--ties", choices=[t.value for t in TieMethod], default="efron")

    dump = sub.add_parser("scenario-dump", help="print a family's exact config grid")
    dump.add_argument("--family", required=True, choices=FAMILIES)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        if args.command == "simulate":
            summaries = run_family(
                args.family,
                q=args.q,
                seed=args.seed,
                out_dir=args.out,
                parallelism=args.parallel,
                ties=TieMethod(args.ties),
            )
            print(f"{args.family}: {len(summaries)} scenarios -> {args.out}")
        elif args.command == "analyze":
            mapping = parse_mapping_file(args.config)
            result = run_analysis(
                args.data,
                mapping,
                out_dir=args.out,
                n_boot=args.bootstrap,
                level=args.level,
                random_control=args.random_control,
                seed=args.seed,
                ties=TieMethod(args.ties),
            )
            print(
                f"analyzed n={result.n} (events={result.n_events}, "
                f"censor rate={result.censor_rate:.3f}, dropped={result.dropped_rows}) -> {args.out}"
            )
        else:  # scenario-dump
            for cfg in make_scenarios(args.family):
                print(json.dumps(dataclasses.asdict(cfg)))
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (CoxError, MediationError, CalibrationError, ScenarioUnusableError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
