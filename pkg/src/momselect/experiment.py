"""Outlier-robustness study: sweep contamination levels, compare the
tournament winner against the ground-truth oracle and the full-data
baseline, and emit the per-repetition records plus aggregates as CSV.

Each (outlier count, repetition) cell draws its own dataset from a seed
derived by hashing (master seed, outliers, repetition), so any cell can
be reproduced in isolation.  Repetitions run as a parallel map whose
results are written in task order; records.csv bytes are identical for
any thread count, and an interrupted sweep resumes by skipping the
(outliers, rep) keys already on disk.
"""

from __future__ import annotations

import csv
import hashlib
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .dataset import (
    HARD_OUTLIER,
    HEAVY_OUTLIER,
    INFORMATIVE,
    Dataset,
    SyntheticSpec,
    generate_synthetic,
)
from .ensemble import EnsembleConfig, EnsembleResult, run_ensemble
from .learners import Estimator, Lasso, Learner, fit_learner
from .partition import BlockId, block_indices
from .selection import CandidateId

log = logging.getLogger(__name__)

RECORD_FIELDS = (
    "outliers",
    "rep",
    "err_selected",
    "err_oracle",
    "err_best_basic",
    "clean_subsamples",
    "hard_in_sel",
    "heavy_in_sel",
    "seed",
)
AGGREGATE_FIELDS = ("outliers", "metric", "mean", "ci95")
_METRICS = (
    "err_selected",
    "err_oracle",
    "err_best_basic",
    "clean_subsamples",
    "hard_in_sel",
    "heavy_in_sel",
)


class ExperimentError(ValueError):
    """Invalid experiment configuration or missing ground truth."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Sweep definition: a synthetic-data template (its n_outliers and
    seed fields are overridden per cell), the ensemble settings, the
    contamination grid, and the repetition count."""

    synthetic: SyntheticSpec
    ensemble: EnsembleConfig
    outlier_grid: tuple[int, ...]
    repetitions: int
    output_dir: str | Path
    master_seed: int
    threads: int = 1

    def __post_init__(self) -> None:
        if self.repetitions < 1:
            raise ExperimentError(f"repetitions must be >= 1, got {self.repetitions}")
        if len(self.outlier_grid) == 0:
            raise ExperimentError("outlier grid is empty")
        for o in self.outlier_grid:
            if o % 2 != 0 or not 0 <= o < self.synthetic.n:
                raise ExperimentError(
                    f"outlier count {o} must be even and inside [0, n={self.synthetic.n})"
                )
        if self.threads < 1:
            raise ExperimentError(f"threads must be >= 1, got {self.threads}")


@dataclass(frozen=True)
class ExperimentRecord:
    """One repetition at one contamination level."""

    outliers: int
    rep: int
    err_selected: float
    err_oracle: float
    err_best_basic: float
    clean_subsamples: int
    hard_in_sel: int
    heavy_in_sel: int
    seed: int


def derive_seed(master_seed: int, outliers: int, rep: int) -> int:
    """Stable 64-bit seed for one sweep cell, from SHA-256 of the key."""
    digest = hashlib.sha256(f"momselect:{master_seed}:{outliers}:{rep}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def true_excess_risk(beta, beta0) -> float:
    """Squared coefficient distance; equals the prediction excess risk
    because the synthetic design is isotropic."""
    beta = np.asarray(beta, dtype=np.float64)
    beta0 = np.asarray(beta0, dtype=np.float64)
    if beta.shape != beta0.shape:
        raise ExperimentError(f"shape mismatch {beta.shape} vs {beta0.shape}")
    diff = beta - beta0
    return float(diff @ diff)


def oracle_candidate(
    candidates: tuple[CandidateId, ...],
    estimators: tuple[Estimator, ...],
    beta0,
) -> tuple[int, float]:
    """Index and risk of the true-risk minimizer over the candidate set;
    uncomputable without ground truth, hence synthetic runs only."""
    if len(candidates) == 0:
        raise ExperimentError("candidate set is empty")
    if len(candidates) != len(estimators):
        raise ExperimentError("candidates and estimators differ in length")
    risks = [true_excess_risk(e.beta, beta0) for e in estimators]
    best = min(risks)
    tied = [i for i, r in enumerate(risks) if r == best]
    idx = min(tied, key=lambda i: candidates[i])
    return idx, risks[idx]


def best_basic(
    data: Dataset, learners: tuple[Learner, ...], beta0
) -> tuple[int, Estimator, float]:
    """Train every learner on the whole dataset and return the one with
    the lowest true risk (index, estimator, risk)."""
    if len(learners) == 0:
        raise ExperimentError("learner grid is empty")
    order = sorted(
        range(len(learners)),
        key=lambda i: (-learners[i].lam, i) if isinstance(learners[i], Lasso) else (-math.inf, i),
    )
    fitted: dict[int, Estimator] = {}
    warm = None
    for li in order:
        learner = learners[li]
        est = fit_learner(learner, data.x, data.y, beta0=warm if isinstance(learner, Lasso) else None)
        fitted[li] = est
        if isinstance(learner, Lasso):
            warm = est.beta
    risks = [true_excess_risk(fitted[i].beta, beta0) for i in range(len(learners))]
    best = min(risks)
    idx = min(i for i, r in enumerate(risks) if r == best)
    return idx, fitted[idx], risks[idx]


def _outlier_counts(data: Dataset, block: BlockId) -> tuple[int, int]:
    idx = block_indices(data.n, block)
    labels = data.provenance[idx.start - 1 : idx.stop - 1]
    return int(np.sum(labels == HARD_OUTLIER)), int(np.sum(labels == HEAVY_OUTLIER))


def _clean_subsample_count(data: Dataset, config: EnsembleConfig) -> int:
    count = 0
    for level in range(config.k_min, config.k_max + 1):
        for k in range(1, 2 ** level + 1):
            idx = block_indices(data.n, BlockId(level, k))
            labels = data.provenance[idx.start - 1 : idx.stop - 1]
            if np.all(labels == INFORMATIVE):
                count += 1
    return count


def run_single(config: ExperimentConfig, outliers: int, rep: int) -> ExperimentRecord:
    """Run one sweep cell: generate, select, score against ground truth."""
    seed = derive_seed(config.master_seed, outliers, rep)
    spec = replace(config.synthetic, n_outliers=outliers, seed=seed)
    data, beta0 = generate_synthetic(spec)
    ens: EnsembleResult = run_ensemble(data, config.ensemble)

    err_selected = true_excess_risk(ens.estimator.beta, beta0)
    _, err_oracle = oracle_candidate(ens.candidates, ens.estimators, beta0)
    _, _, err_basic = best_basic(data, config.ensemble.learners, beta0)
    hard_in_sel, heavy_in_sel = _outlier_counts(data, ens.chosen.block)
    record = ExperimentRecord(
        outliers=outliers,
        rep=rep,
        err_selected=err_selected,
        err_oracle=err_oracle,
        err_best_basic=err_basic,
        clean_subsamples=_clean_subsample_count(data, config.ensemble),
        hard_in_sel=hard_in_sel,
        heavy_in_sel=heavy_in_sel,
        seed=seed,
    )
    # the oracle minimizes the same risk over the same set, so the
    # winner can never beat it
    assert record.err_selected >= record.err_oracle
    return record


def _format(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _record_row(record: ExperimentRecord) -> str:
    return ",".join(_format(getattr(record, name)) for name in RECORD_FIELDS)


def read_records(path) -> list[ExperimentRecord]:
    """Load records.csv written by run_sweep."""
    records = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != list(RECORD_FIELDS):
            raise ExperimentError(
                f"unexpected records header {reader.fieldnames}, expected {list(RECORD_FIELDS)}"
            )
        for row in reader:
            records.append(
                ExperimentRecord(
                    outliers=int(row["outliers"]),
                    rep=int(row["rep"]),
                    err_selected=float(row["err_selected"]),
                    err_oracle=float(row["err_oracle"]),
                    err_best_basic=float(row["err_best_basic"]),
                    clean_subsamples=int(row["clean_subsamples"]),
                    hard_in_sel=int(row["hard_in_sel"]),
                    heavy_in_sel=int(row["heavy_in_sel"]),
                    seed=int(row["seed"]),
                )
            )
    return records


def aggregate_records(
    records: list[ExperimentRecord], outlier_grid: tuple[int, ...]
) -> list[tuple[int, str, float, float]]:
    """Mean and normal-approximation 95% half-width (1.96 sd / sqrt(r))
    per contamination level and metric; a single repetition yields a
    nan half-width."""
    rows = []
    for o in outlier_grid:
        group = [r for r in records if r.outliers == o]
        for metric in _METRICS:
            vals = np.array([float(getattr(r, metric)) for r in group])
            mean = float(vals.mean()) if len(vals) else math.nan
            if len(vals) > 1:
                ci = 1.96 * float(vals.std(ddof=1)) / math.sqrt(len(vals))
            else:
                ci = math.nan
            rows.append((o, metric, mean, ci))
    return rows


def run_sweep(config: ExperimentConfig) -> list[ExperimentRecord]:
    """Run (or resume) the full sweep; writes records.csv and
    aggregate.csv under the output directory and returns all records.

    Cells execute as a parallel map in deterministic task order and are
    flushed one row at a time, so a fresh run's records.csv is
    byte-identical for any thread count, and rerunning after an
    interruption appends exactly the missing cells.
    """
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records_path = out_dir / "records.csv"
    aggregate_path = out_dir / "aggregate.csv"

    existing: list[ExperimentRecord] = []
    if records_path.exists():
        existing = read_records(records_path)
        if existing:
            log.info("resuming: %d records already on disk", len(existing))
    done = {(r.outliers, r.rep) for r in existing}

    tasks = [
        (o, rep)
        for o in config.outlier_grid
        for rep in range(config.repetitions)
        if (o, rep) not in done
    ]

    mode = "a" if existing else "w"
    records = list(existing)
    with open(records_path, mode, encoding="utf-8", newline="\n") as fh:
        if not existing:
            fh.write(",".join(RECORD_FIELDS) + "\n")
            fh.flush()

        def _run(task):
            return run_single(config, task[0], task[1])

        if config.threads > 1 and len(tasks) > 1:
            with ThreadPoolExecutor(max_workers=config.threads) as pool:
                for record in pool.map(_run, tasks):
                    fh.write(_record_row(record) + "\n")
                    fh.flush()
                    records.append(record)
                    log.info(
                        "outliers=%d rep=%d err_selected=%.4g err_oracle=%.4g",
                        record.outliers, record.rep, record.err_selected, record.err_oracle,
                    )
        else:
            for task in tasks:
                record = _run(task)
                fh.write(_record_row(record) + "\n")
                fh.flush()
                records.append(record)
                log.info(
                    "outliers=%d rep=%d err_selected=%.4g err_oracle=%.4g",
                    record.outliers, record.rep, record.err_selected, record.err_oracle,
                )

    rows = aggregate_records(records, config.outlier_grid)
    with open(aggregate_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(AGGREGATE_FIELDS) + "\n")
        for o, metric, mean, ci in rows:
            fh.write(f"{o},{metric},{format(mean, '.17g')},{format(ci, '.17g')}\n")
    return records
