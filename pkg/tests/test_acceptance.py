"""Acceptance criteria, one test each.

Every test appends a PASS/FAIL line to the acceptance summary printed at the
end of the pytest run, then asserts. Criteria 2 and 3 share one run of the
default synthetic profile (5 replications, master seed 0).
"""

import json
import subprocess
import sys
import time

import numpy as np
import pytest

from dissim_select.classifier import FeatureMask
from dissim_select.dichotomy import dissimilarity
from dissim_select.experiment import BASELINE, ExperimentConfig, run_experiment
from dissim_select.metrics import ScoredTrial, Truth, eer_global, eer_user
from dissim_select.optimizer import (
    ArchiveEntry,
    Strategy,
    SwarmConfig,
    fitness,
    merge_archive,
    run,
)
from dissim_select.prototypes import condense_indices
from dissim_select.synthetic import GeneratorConfig, generate

from .conftest import ACCEPTANCE_LINES, make_context
from .oracles import all_nonempty_masks, one_nn_labels, sweep_eer, sweep_user_eer


def record(criterion, ok, detail):
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}")
    assert ok, detail


def test_criterion_1_published_numbers_out_of_scope():
    ACCEPTANCE_LINES.append(
        "[PASS] criterion 1: informational only; original EERs need non-redistributable "
        "signature features, replaced by criteria 2-9"
    )


@pytest.fixture(scope="module")
def default_report():
    start = time.perf_counter()
    report = run_experiment(ExperimentConfig(seed=0, replications=5))
    return report, time.perf_counter() - start


def test_criterion_2_strategy_ordering(default_report):
    report, elapsed = default_report
    rows = {r["key"]: r for r in report.rows()}
    assert all(r["complete"] for r in rows.values())
    eer = {k: r["eer_mean_pct"] for k, r in rows.items()}
    gv, li, nv, base = (eer["global_validation"], eer["last_iteration"],
                        eer["no_validation"], eer[BASELINE])
    ok = gv <= li and gv <= nv and gv <= base + 0.5
    record(
        2, ok,
        f"mean test EER % GV={gv:.2f} LI={li:.2f} NV={nv:.2f} baseline={base:.2f} "
        f"(need GV<=LI, GV<=NV, GV<=baseline+0.5); runtime {elapsed:.0f}s",
    )


def test_criterion_3_feature_reduction(default_report):
    report, _ = default_report
    dim = report.dim
    cells = [c for c in report.cells if c.approach == "global_validation"]
    assert len(cells) == 5 and all(c.status == "ok" for c in cells)
    recall = float(np.mean([c.informative_recall for c in cells]))
    cards = [c.n_features for c in cells]
    ok = all(k < dim for k in cards) and recall >= 0.7
    record(3, ok, f"GV cardinalities {cards} of D={dim}, mean informative recall {recall:.3f} (need >=0.7)")


def _random_trials(rng):
    n_writers = int(rng.integers(1, 6))
    total = int(rng.integers(2 * n_writers, 201))
    sizes = rng.multinomial(total - 2 * n_writers, np.ones(2 * n_writers) / (2 * n_writers)) + 1
    tied = rng.random() < 0.5
    trials = []
    for w in range(n_writers):
        for truth, n, shift in ((Truth.GENUINE, sizes[2 * w], 0.7), (Truth.SKILLED, sizes[2 * w + 1], 0.0)):
            s = rng.normal(shift, 1.0, n)
            if tied:
                s = np.round(s * 4) / 4
            trials += [ScoredTrial(w + 1, truth, float(x)) for x in s]
    return trials


def test_criterion_4_eer_oracle_equivalence():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(1000):
        trials = _random_trials(rng)
        g = [t.fused_score for t in trials if t.truth is Truth.GENUINE]
        s = [t.fused_score for t in trials if t.truth is Truth.SKILLED]
        oracle_g = sweep_eer(g, s)
        oracle_u = sweep_user_eer([(t.writer_id, t.truth is Truth.GENUINE, t.fused_score)
                                   for t in trials])
        worst = max(worst, abs(eer_global(trials).eer - float(oracle_g)),
                    abs(eer_user(trials).eer - float(oracle_u)))
    record(4, worst <= 1e-12, f"max |EER - exact oracle| over 1000 instances = {worst:.2e}")


def test_criterion_5_bpso_reaches_enumerated_optimum():
    cfg = GeneratorConfig(n_writers=24, genuine_per_writer=12, skilled_per_writer=6, dim=8,
                          informative_dims=3, seed=5)
    ds = generate(cfg)
    start = time.perf_counter()
    ctx, _ = make_context(ds, seed=1, counts=(8, 0, 8, 8), n_refs=4, n_gen=6, n_skl=6)
    optimum = min(fitness(FeatureMask(bits), ctx) for bits in all_nonempty_masks(8))
    enum_time = time.perf_counter() - start
    hits = []
    for seed in range(5):
        fresh, _ = make_context(ds, seed=1, counts=(8, 0, 8, 8), n_refs=4, n_gen=6, n_skl=6)
        res = run(SwarmConfig(swarm_size=20, max_iterations=40,
                              strategy=Strategy.NO_VALIDATION, seed=seed), fresh)
        hits.append(res.final_opt_fitness == optimum)
    ok = sum(hits) >= 4 and enum_time < 10.0
    record(5, ok, f"optimum Opt-EER {optimum:.4f} reached on {sum(hits)}/5 seeds; "
                  f"enumeration of 255 masks took {enum_time:.2f}s")


def test_criterion_6_cnn_consistency():
    rng = np.random.default_rng(77)
    failures = []
    for i in range(200):
        n = int(rng.integers(4, 60))
        d = int(rng.integers(1, 6))
        X = rng.normal(size=(n, d))
        if i % 3 == 0:
            X = np.round(X, 1)  # exercise distance ties and duplicates
        y = np.where(rng.random(n) < rng.uniform(0.2, 0.8), 1, -1)
        y[:2] = [1, -1]
        seed = int(rng.integers(0, 2**31))
        kept = condense_indices(X, y, seed)
        consistent = one_nn_labels(X[kept].tolist(), y[kept].tolist(), X.tolist()) == y.tolist()
        # exact duplicates with conflicting labels cannot be separated by any store
        keys = {}
        for row, lab in zip(map(tuple, X), y):
            keys.setdefault(row, set()).add(int(lab))
        separable = all(len(v) == 1 for v in keys.values())
        deterministic = np.array_equal(kept, condense_indices(X, y, seed))
        if not (deterministic and len(kept) <= n and (consistent or not separable)):
            failures.append(i)
    record(6, not failures, f"{200 - len(failures)}/200 instances consistent, bounded and deterministic")


def test_criterion_7_dissimilarity_properties():
    rng = np.random.default_rng(7)
    # dyadic grid: every difference and sum below is computed without rounding
    a, b, c = (rng.integers(-(2**40), 2**40, size=(10_000, 64)) * 2.0**-20 for _ in range(3))
    ab, ba = dissimilarity(a, b), dissimilarity(b, a)
    checks = {
        "nonnegative": bool(np.all(ab >= 0)),
        "symmetric": bool(np.array_equal(ab, ba)),
        "triangle": bool(np.all(ab <= dissimilarity(a, c) + dissimilarity(c, b))),
        "identity": bool(np.all(dissimilarity(a, a) == 0)),
    }
    record(7, all(checks.values()), f"10,000 triples (D=64): {checks}")


def test_criterion_8_archive_invariants():
    rng = np.random.default_rng(8)
    violations = 0
    for _ in range(10_000):
        cap = int(rng.integers(1, 8))
        archive, head = [], None
        for t in range(int(rng.integers(1, 8))):
            cands = [ArchiveEntry(FeatureMask(rng.random(5) < 0.5), 0.0,
                                  float(rng.integers(0, 6)) / 5, t)
                     for _ in range(int(rng.integers(0, 8)))]
            archive = merge_archive(archive, cands, cap)
            keys = [e.rank_key() for e in archive]
            bad = (
                keys != sorted(keys)
                or len({e.mask for e in archive}) != len(archive)
                or len(archive) > cap
                or (head is not None and keys[0] > head)
            )
            violations += bad
            head = keys[0] if keys else head
    record(8, violations == 0, f"{violations} violations over 10,000 merge sequences")


DETERMINISM_CONFIG = {
    "generator": {"n_writers": 30, "genuine_per_writer": 14, "skilled_per_writer": 6,
                  "dim": 16, "informative_dims": 4, "seed": 11},
    "n_exploitation": 6,
    "split_counts": {"train": 8, "validation": 4, "opt": 6, "sel": 6},
    "n_references": 4,
    "train_genuine": 4,
    "train_random_forgery": 4,
    "eval_genuine": 6,
    "eval_skilled": 6,
    "replications": 2,
    "seed": 0,
    "swarm": {"swarm_size": 8, "max_iterations": 6},
}


def test_criterion_9_determinism_across_worker_counts(tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps(DETERMINISM_CONFIG))
    outputs = {}
    for tag, workers in (("a", 1), ("b", 1), ("c", 2)):
        out = tmp_path / tag
        subprocess.run(
            [sys.executable, "-m", "dissim_select", "run", "--config", str(config),
             "--out", str(out), "--workers", str(workers)],
            check=True, capture_output=True,
        )
        files = sorted(out.glob("run_*.json")) + [out / "table1.csv"]
        outputs[tag] = {p.name: p.read_bytes() for p in files}
    same = outputs["a"] == outputs["b"] == outputs["c"]
    record(9, same and len(outputs["a"]) == 7,
           f"table1.csv and {len(outputs['a']) - 1} run JSONs byte-identical across "
           f"workers=1, 1, 2: {same}")
