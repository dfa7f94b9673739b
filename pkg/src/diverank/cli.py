"""Command line interface.

    diverank run --config exp.cfg [--out DIR] [--seed INT]
    diverank score-runs --runs runs.csv --judgments rel.csv --n 10 [--out sd.csv]

Exit codes: 0 success, 1 configuration error, 2 data error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from .errors import ConfigError, DataError, StageError
from .harness import load_config, run_experiment
from .harness.output import SD_HEADER, emit_charts, emit_csv, fmt_value
from .suddendeath import RunSet, read_judgments, read_runs, sd_scores

log = logging.getLogger("diverank")

EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 1, 2


def run(config):
    """Run an experiment and write CSV tables and SVG charts to ``config.out``."""
    result = run_experiment(config)
    try:
        emit_csv(result.rows, result.reports, config.out)
        emit_charts(result.rows, result.reports, config.out, config)
    except (OSError, ValueError) as exc:
        raise StageError("output", exc) from exc
    return result


def _cmd_run(args) -> int:
    config = load_config(args.config, out=args.out, seed=args.seed, workers=args.workers)
    result = run(config)
    print(f"evaluated {len(result.users)} users; wrote {config.out / 'metrics.csv'} and {config.out / 'sd.csv'}")
    return EXIT_OK


def _cmd_score_runs(args) -> int:
    if args.n < 1:
        raise ConfigError("--n must be positive")
    algorithms, lists = read_runs(args.runs, args.n)
    if not lists:
        raise DataError(f"{args.runs}: no runs")
    rel = read_judgments(args.judgments)
    report = sd_scores(RunSet(algorithms, lists, args.n, rel))
    fh = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SD_HEADER)
        for a in report.algorithms:
            w.writerow((args.n, "", a, fmt_value(report.scores[a]), report.roster()))
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="diverank", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a configured experiment")
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--out", type=Path, help="output directory (overrides config)")
    p.add_argument("--seed", type=int, help="random seed (overrides config)")
    p.add_argument("--workers", type=int, help="worker processes for per-user evaluation")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("score-runs", help="Sudden Death scores for external run files")
    p.add_argument("--runs", required=True, type=Path, help="CSV: algorithm,user,rank,item")
    p.add_argument("--judgments", required=True, type=Path, help="CSV: user,item (relevant pairs)")
    p.add_argument("--n", required=True, type=int, help="cutoff N")
    p.add_argument("--out", type=Path, help="write the table here instead of stdout")
    p.set_defaults(func=_cmd_score_runs)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG if isinstance(exc.cause, ConfigError) else EXIT_DATA
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
