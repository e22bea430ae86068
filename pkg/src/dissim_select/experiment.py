"""End-to-end protocol: split, condense, select features per strategy, test, report."""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from .classifier import FeatureMask, SvmHyper, train
from .data import Dataset, SplitCounts, WriterSplit, load_feature_file, split_writers
from .dichotomy import build_training_set, build_trials
from .errors import ConfigError, DissimSelectError
from .metrics import eer_user_from_scores, far_frr_curve
from .optimizer import FitnessContext, RunResult, Strategy, SwarmConfig, run, writer_scores
from .prototypes import condense
from .synthetic import GeneratorConfig, generate

__all__ = [
    "BASELINE",
    "APPROACH_LABELS",
    "ExperimentConfig",
    "CellResult",
    "ExperimentReport",
    "load_dataset",
    "replication_seed",
    "prepare_replication",
    "evaluate_mask",
    "run_experiment",
    "emit_report",
    "TABLE_COLUMNS",
]

log = logging.getLogger(__name__)

BASELINE = "baseline"
APPROACH_LABELS = {
    BASELINE: "No feature selection",
    Strategy.NO_VALIDATION.value: "Feature selection and no validation",
    Strategy.LAST_ITERATION.value: "Feature selection and last iteration validation",
    Strategy.GLOBAL_VALIDATION.value: "Feature selection and global validation",
}
TABLE_COLUMNS = ("approach", "n_features_mean", "eer_mean_pct", "eer_std_pct")

_SWARM_KEYS = {f.name for f in fields(SwarmConfig)} - {"strategy", "seed"}
_SVM_KEYS = {f.name for f in fields(SvmHyper)}


@dataclass
class ExperimentConfig:
    """Full protocol configuration; the JSON config mirrors these fields.

    Exactly one of ``data_path`` and ``generator`` must be set. Exploitation
    (test) writers are either listed explicitly or taken as the
    ``n_exploitation`` lowest writer ids.
    """

    data_path: str | None = None
    generator: GeneratorConfig | None = field(default_factory=GeneratorConfig)
    exploitation_writers: list[int] | None = None
    n_exploitation: int = 10
    split_counts: SplitCounts = field(default_factory=lambda: SplitCounts(20, 10, 10, 10))
    n_references: int = 12
    train_genuine: int = 10
    train_random_forgery: int = 10
    eval_genuine: int = 10
    eval_skilled: int = 10
    strategies: tuple[Strategy, ...] = tuple(Strategy)
    replications: int = 5
    seed: int = 0
    output_dir: str = "results"
    swarm: dict = field(default_factory=dict)
    svm: dict = field(default_factory=dict)
    workers: int = 1

    def __post_init__(self):
        if self.data_path is not None and self.generator is not None:
            raise ConfigError("set either data_path or generator, not both")
        if self.data_path is None and self.generator is None:
            raise ConfigError("one of data_path or generator is required")
        if isinstance(self.generator, dict):
            self.generator = GeneratorConfig(**self.generator)
        self.split_counts = SplitCounts.coerce(self.split_counts)
        try:
            self.strategies = tuple(dict.fromkeys(Strategy(s) for s in self.strategies))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not self.strategies:
            raise ConfigError("at least one strategy is required")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        for name in ("n_references", "train_genuine", "eval_genuine", "eval_skilled"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.train_random_forgery < 0:
            raise ConfigError("train_random_forgery must be >= 0")
        unknown = set(self.swarm) - _SWARM_KEYS
        if unknown:
            raise ConfigError(f"unknown swarm settings: {sorted(unknown)}")
        unknown = set(self.svm) - _SVM_KEYS
        if unknown:
            raise ConfigError(f"unknown svm settings: {sorted(unknown)}")
        try:
            self.swarm_config(Strategy.NO_VALIDATION, 0)
            self.svm_hyper()
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_dict(cls, payload: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(payload) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        payload = dict(payload)
        if "data_path" in payload and payload["data_path"] is not None:
            payload.setdefault("generator", None)
        try:
            return cls(**payload)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            payload = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from None
        if not isinstance(payload, dict):
            raise ConfigError("config JSON must be an object")
        return cls.from_dict(payload)

    def to_dict(self) -> dict:
        return {
            "data_path": self.data_path,
            "generator": self.generator.to_dict() if self.generator else None,
            "exploitation_writers": self.exploitation_writers,
            "n_exploitation": self.n_exploitation,
            "split_counts": asdict(self.split_counts),
            "n_references": self.n_references,
            "train_genuine": self.train_genuine,
            "train_random_forgery": self.train_random_forgery,
            "eval_genuine": self.eval_genuine,
            "eval_skilled": self.eval_skilled,
            "strategies": [s.value for s in self.strategies],
            "replications": self.replications,
            "seed": self.seed,
            "output_dir": self.output_dir,
            "swarm": dict(self.swarm),
            "svm": dict(self.svm),
            "workers": self.workers,
        }

    def swarm_config(self, strategy: Strategy, seed: int) -> SwarmConfig:
        return SwarmConfig(strategy=strategy, seed=seed, **self.swarm)

    def svm_hyper(self) -> SvmHyper:
        return SvmHyper(**self.svm)


def load_dataset(config: ExperimentConfig) -> Dataset:
    if config.data_path is not None:
        return load_feature_file(config.data_path)
    return generate(config.generator)


def replication_seed(master_seed: int, replication: int) -> int:
    return int(np.random.SeedSequence([master_seed, replication]).generate_state(1)[0])


def exploitation_writers(config: ExperimentConfig, dataset: Dataset) -> list[int]:
    if config.exploitation_writers is not None:
        return sorted(int(w) for w in config.exploitation_writers)
    ids = dataset.writer_ids
    if config.n_exploitation > len(ids):
        raise ConfigError(f"n_exploitation={config.n_exploitation} exceeds {len(ids)} writers")
    return list(ids[: config.n_exploitation])


@dataclass
class Replication:
    index: int
    seed: int
    split: WriterSplit
    context: FitnessContext
    test_trials: list


def prepare_replication(config: ExperimentConfig, dataset: Dataset, index: int) -> Replication:
    """Split writers, build and condense the training set, and build all trials."""
    seed = replication_seed(config.seed, index)
    split = split_writers(
        dataset, config.split_counts, seed, exploitation_writers(config, dataset)
    )
    samples = build_training_set(
        dataset,
        split.train_writers,
        config.train_genuine,
        config.train_random_forgery,
        seed,
        n_references=config.n_references,
    )
    condensed = condense(samples, seed)
    log.info(
        "replication %d: %d training pairs condensed to %d", index, len(samples), len(condensed)
    )

    def trials(writers):
        return build_trials(
            dataset, writers, config.n_references, config.eval_genuine, config.eval_skilled, seed
        )

    ctx = FitnessContext(
        condensed, trials(split.opt_writers), trials(split.sel_writers), config.svm_hyper()
    )
    return Replication(index, seed, split, ctx, trials(split.exploitation_writers))


def evaluate_mask(ctx: FitnessContext, mask: FeatureMask, test_trials) -> tuple[float, dict]:
    """Train once with ``mask`` and return the test user-threshold EER and raw scores."""
    model = train((ctx.X, ctx.y), mask, ctx.hyper)
    pools = {t.writer_id: writer_scores(model, t) for t in test_trials}
    return eer_user_from_scores(pools).eer, pools


@dataclass
class CellResult:
    """Outcome of one (replication, approach) cell of the experiment."""

    replication: int
    approach: str
    seed: int
    status: str = "ok"
    test_eer: float | None = None
    n_features: int | None = None
    informative_recall: float | None = None
    run: dict | None = None
    far_frr: list | None = None

    def summary(self) -> dict:
        return {
            "replication": self.replication,
            "approach": self.approach,
            "seed": self.seed,
            "status": self.status,
            "test_eer": self.test_eer,
            "n_features": self.n_features,
            "informative_recall": self.informative_recall,
        }


@dataclass
class ExperimentReport:
    config: dict
    dim: int
    cells: list[CellResult]

    @property
    def approaches(self) -> list[str]:
        return [BASELINE] + list(self.config["strategies"])

    def rows(self) -> list[dict]:
        """Table rows: approach label, mean #features, EER mean and std in percent.

        The std is the population std over replications. Approaches with a
        failed replication are reported as ``incomplete``.
        """
        out = []
        reps = self.config["replications"]
        for approach in self.approaches:
            cells = [c for c in self.cells if c.approach == approach and c.status == "ok"]
            row = {"approach": APPROACH_LABELS[approach], "key": approach, "complete": len(cells) == reps}
            if row["complete"]:
                eers = np.array([c.test_eer for c in cells]) * 100.0
                row["n_features_mean"] = float(np.mean([c.n_features for c in cells]))
                row["eer_mean_pct"] = float(eers.mean())
                row["eer_std_pct"] = float(eers.std())
            out.append(row)
        return out

    def strategy_eers(self, approach: str) -> list[float]:
        return [c.test_eer for c in self.cells if c.approach == approach and c.status == "ok"]

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "dim": self.dim,
            "table": self.rows(),
            "cells": [c.summary() for c in self.cells],
        }


# ---------------------------------------------------------------------------
# Cell execution (possibly in worker processes)

_WORKER_STATE: dict = {}


def _init_worker(config_dict: dict, dataset: Dataset):
    _WORKER_STATE["config"] = ExperimentConfig.from_dict(config_dict)
    _WORKER_STATE["dataset"] = dataset
    _WORKER_STATE["replications"] = {}


def _replication(index: int) -> Replication:
    cache = _WORKER_STATE["replications"]
    if index not in cache:
        cache.clear()
        cache[index] = prepare_replication(
            _WORKER_STATE["config"], _WORKER_STATE["dataset"], index
        )
    return cache[index]


def _run_cell(job: tuple[int, str]) -> CellResult:
    index, approach = job
    config = _WORKER_STATE["config"]
    cell = CellResult(index, approach, replication_seed(config.seed, index))
    try:
        rep = _replication(index)
        assert not (rep.split.exploitation_writers & rep.split.development_writers)
        if approach == BASELINE:
            mask, result = FeatureMask.ones(rep.context.dim), None
        else:
            result = run(config.swarm_config(Strategy(approach), rep.seed), rep.context)
            mask = result.final_mask
        eer, pools = evaluate_mask(rep.context, mask, rep.test_trials)
    except DissimSelectError as exc:
        log.error("replication %d, %s failed: %s", index, approach, exc)
        cell.status = f"failed: {exc}"
        return cell
    cell.test_eer = eer
    cell.n_features = mask.cardinality
    if config.generator is not None:
        cell.informative_recall = float(mask.bits[: config.generator.informative_dims].mean())
    if result is not None:
        cell.run = _run_payload(result, rep, cell)
    genuine = np.concatenate([g for g, _ in pools.values()])
    skilled = np.concatenate([s for _, s in pools.values()])
    cell.far_frr = [list(map(float, row)) for row in zip(*far_frr_curve(genuine, skilled))]
    return cell


def _run_payload(result: RunResult, rep: Replication, cell: CellResult) -> dict:
    payload = result.to_dict()
    payload.update(
        {
            "replication": rep.index,
            "replication_seed": rep.seed,
            "split": rep.split.to_dict(),
            "test_eer": cell.test_eer,
        }
    )
    return payload


def run_experiment(config: ExperimentConfig, dataset: Dataset | None = None) -> ExperimentReport:
    """Run every (replication, approach) cell; the all-ones baseline is always included.

    Results are identical for any ``config.workers``: every cell derives its
    randomness from the master seed and its replication index only.
    """
    if dataset is None:
        dataset = load_dataset(config)
    config_dict = config.to_dict()
    approaches = [BASELINE] + [s.value for s in config.strategies]
    jobs = [(r, a) for r in range(config.replications) for a in approaches]
    if config.workers == 1:
        _init_worker(config_dict, dataset)
        cells = [_run_cell(j) for j in jobs]
    else:
        with ProcessPoolExecutor(
            config.workers, initializer=_init_worker, initargs=(config_dict, dataset)
        ) as pool:
            cells = list(pool.map(_run_cell, jobs))
    return ExperimentReport(config_dict, dataset.dim, cells)


# ---------------------------------------------------------------------------
# Report files


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return repr(float(x))


def write_table(report: ExperimentReport, path) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TABLE_COLUMNS)
        for row in report.rows():
            if row["complete"]:
                w.writerow(
                    [
                        row["approach"],
                        f"{row['n_features_mean']:.1f}",
                        f"{row['eer_mean_pct']:.4f}",
                        f"{row['eer_std_pct']:.4f}",
                    ]
                )
            else:
                w.writerow([row["approach"], "incomplete", "incomplete", "incomplete"])
    return path


def emit_report(report: ExperimentReport, directory) -> list[Path]:
    """Write ``table1.csv``, per-run history CSVs and JSONs, FAR/FRR dumps and ``report.json``."""
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {directory}: {exc}") from None
    written = [write_table(report, directory / "table1.csv")]
    for cell in report.cells:
        tag = f"{cell.approach}_{cell.replication}"
        if cell.run is not None:
            p = directory / f"history_{tag}.csv"
            with open(p, "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["iteration", "best_opt", "best_sel", "mean_cardinality"])
                for h in cell.run["history"]:
                    w.writerow(
                        [h["iteration"], _fmt(h["best_opt"]), _fmt(h["best_sel"]),
                         _fmt(h["mean_cardinality"])]
                    )
            written.append(p)
            p = directory / f"run_{tag}.json"
            p.write_text(json.dumps(cell.run, indent=2, sort_keys=True) + "\n")
            written.append(p)
        if cell.far_frr is not None:
            p = directory / f"far_frr_{tag}.csv"
            with open(p, "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["threshold", "far", "frr"])
                for t, far, frr in cell.far_frr:
                    w.writerow([_fmt(t), _fmt(far), _fmt(frr)])
            written.append(p)
    p = directory / "report.json"
    p.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    written.append(p)
    return written
