"""Command line entry point: ``dissim-select gen|run|report``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .data import write_feature_file
from .errors import ConfigError, DataError
from .experiment import ExperimentConfig, emit_report, run_experiment
from .synthetic import GeneratorConfig, generate

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3

log = logging.getLogger("dissim_select")


def _load_json(path):
    try:
        payload = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from None
    if not isinstance(payload, dict):
        raise ConfigError("config JSON must be an object")
    return payload


def cmd_gen(args) -> int:
    payload = _load_json(args.config) if args.config else {}
    overrides = {
        "n_writers": args.n_writers,
        "genuine_per_writer": args.genuine,
        "skilled_per_writer": args.skilled,
        "dim": args.dim,
        "informative_dims": args.informative_dims,
        "writer_spread": args.writer_spread,
        "forgery_offset": args.forgery_offset,
        "seed": args.seed,
    }
    payload.update({k: v for k, v in overrides.items() if v is not None})
    try:
        config = GeneratorConfig(**payload)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    dataset = generate(config)
    path = write_feature_file(dataset, args.out)
    log.info("wrote %d records (%d writers, D=%d) to %s",
             len(dataset), len(dataset.writer_ids), dataset.dim, path)
    return EXIT_OK


def cmd_run(args) -> int:
    config = ExperimentConfig.from_json(args.config) if args.config else ExperimentConfig()
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.out is not None:
        updates["output_dir"] = args.out
    if args.strategies is not None:
        updates["strategies"] = [s.strip() for s in args.strategies.split(",") if s.strip()]
    if args.workers is not None:
        updates["workers"] = args.workers
    if args.replications is not None:
        updates["replications"] = args.replications
    if updates:
        config = ExperimentConfig.from_dict({**config.to_dict(), **updates})
    report = run_experiment(config)
    emit_report(report, config.output_dir)
    _print_table(report.to_dict()["table"])
    failed = [c for c in report.cells if c.status != "ok"]
    if failed:
        log.warning("%d cell(s) failed; see report.json", len(failed))
    return EXIT_OK


def cmd_report(args) -> int:
    path = Path(args.dir) / "report.json"
    if not path.exists():
        raise DataError(f"no report.json in {args.dir}")
    payload = json.loads(path.read_text())
    if args.format == "csv":
        sys.stdout.write((Path(args.dir) / "table1.csv").read_text())
    else:
        _print_table(payload["table"])
    return EXIT_OK


def _print_table(rows):
    print(f"{'Approach':<50} {'#features':>9}  {'EER % (std)':>14}")
    for row in rows:
        if row["complete"]:
            eer = f"{row['eer_mean_pct']:.2f} ({row['eer_std_pct']:.2f})"
            print(f"{row['approach']:<50} {row['n_features_mean']:>9.1f}  {eer:>14}")
        else:
            print(f"{row['approach']:<50} {'incomplete':>9}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dissim-select",
        description="Writer-independent verification with BPSO feature selection.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a synthetic feature CSV")
    gen.add_argument("--out", required=True, help="output CSV path (.gz to compress)")
    gen.add_argument("--config", help="JSON with GeneratorConfig fields")
    gen.add_argument("--seed", type=int)
    gen.add_argument("--n-writers", type=int)
    gen.add_argument("--genuine", type=int, help="genuine signatures per writer")
    gen.add_argument("--skilled", type=int, help="skilled forgeries per writer")
    gen.add_argument("--dim", type=int)
    gen.add_argument("--informative-dims", type=int)
    gen.add_argument("--writer-spread", type=float)
    gen.add_argument("--forgery-offset", type=float)
    gen.set_defaults(func=cmd_gen)

    run = sub.add_parser("run", help="run the full protocol and write reports")
    run.add_argument("--config", help="JSON mirroring ExperimentConfig")
    run.add_argument("--seed", type=int, help="master seed override")
    run.add_argument("--out", help="output directory override")
    run.add_argument("--strategies",
                     help="comma list of no_validation,last_iteration,global_validation")
    run.add_argument("--workers", type=int)
    run.add_argument("--replications", type=int)
    run.set_defaults(func=cmd_run)

    rep = sub.add_parser("report", help="print the Table-1 summary of a finished run")
    rep.add_argument("--dir", required=True, help="output directory of a previous run")
    rep.add_argument("--format", choices=("text", "csv"), default="text")
    rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
