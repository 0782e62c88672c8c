"""Subsample-grid ensemble: train every (learner, block) candidate and
pick one by the minmax tournament.

The candidate grid crosses the learner list with every dyadic block at
levels k_min..k_max, so the subsample itself is tuned like any other
hyperparameter.  Training is a parallel map over blocks; within one
block the l1 learners are solved along decreasing regularization with
warm starts, which never couples estimators across blocks.  Results are
bit-identical for any thread count.
"""

from __future__ import annotations

import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .learners import Estimator, Lasso, Learner, LearnerError, fit_learner
from .partition import (
    MIN_LEVEL,
    BlockId,
    ComparisonLayout,
    block_indices,
    block_size,
    max_level,
)
from .selection import (
    CandidateId,
    RiskTable,
    SelectionResult,
    build_risk_table,
    minmax_select,
)

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Ensemble configuration violates its constraints."""


class ConfigWarning(UserWarning):
    """Configuration is legal but outside the guaranteed regime."""


_guidance_logged: set = set()


@dataclass(frozen=True)
class EnsembleConfig:
    """Grid definition: learners, comparison-block count V, and the
    range of subsample levels (2^k blocks at each level k)."""

    learners: tuple[Learner, ...]
    v_count: int
    k_min: int = MIN_LEVEL
    k_max: int = 4
    on_fit_error: str = "abort"  # or "exclude"

    def __post_init__(self) -> None:
        if len(self.learners) == 0:
            raise ConfigError("learner grid is empty")
        if self.v_count < 3:
            raise ConfigError(f"V must be >= 3, got {self.v_count}")
        if not MIN_LEVEL <= self.k_min <= self.k_max:
            raise ConfigError(
                f"levels must satisfy {MIN_LEVEL} <= k_min <= k_max, "
                f"got k_min={self.k_min}, k_max={self.k_max}"
            )
        if self.on_fit_error not in ("abort", "exclude"):
            raise ConfigError(f"on_fit_error must be 'abort' or 'exclude', got {self.on_fit_error!r}")

    def validate_for(self, n: int) -> None:
        """Checks that need the dataset size."""
        if self.k_max > max_level(n):
            raise ConfigError(
                f"k_max={self.k_max} exceeds floor(log2 n)={max_level(n)} for n={n}"
            )
        if 8 * self.v_count > n:
            raise ConfigError(f"V={self.v_count} exceeds n/8={n / 8:g}")
        if self.v_count > 2 ** (self.k_max - 1):
            warnings.warn(
                f"V={self.v_count} exceeds 2^(k_max-1)={2 ** (self.k_max - 1)}; "
                "the ensemble guarantee range prefers V <= 2^(k_max-1), continuing anyway",
                ConfigWarning,
                stacklevel=2,
            )
        key = (self.v_count, self.k_min, self.k_max)
        if key not in _guidance_logged:
            _guidance_logged.add(key)
            log.info(
                "grid covers levels %d..%d with V=%d comparison blocks; "
                "the selection is built to withstand up to V/3=%d outliers",
                self.k_min,
                self.k_max,
                self.v_count,
                self.v_count // 3,
            )


def build_grid(config: EnsembleConfig, n: int) -> list[CandidateId]:
    """All candidates in deterministic (learner, level, index) order."""
    config.validate_for(n)
    return [
        CandidateId(learner_index=li, block=BlockId(level, k))
        for li in range(len(config.learners))
        for level in range(config.k_min, config.k_max + 1)
        for k in range(1, 2 ** level + 1)
    ]


def _block_learner_order(learners: tuple[Learner, ...]) -> list[int]:
    """Training order inside one block: l1 learners by decreasing
    regularization (warm-start chain), then the rest in grid order."""
    lasso = [i for i, l in enumerate(learners) if isinstance(l, Lasso)]
    other = [i for i, l in enumerate(learners) if not isinstance(l, Lasso)]
    lasso.sort(key=lambda i: (-learners[i].lam, i))
    return lasso + other


def _fit_block(
    data: Dataset,
    config: EnsembleConfig,
    block: BlockId,
    order: list[int],
) -> list[tuple[int, Estimator | None, Exception | None]]:
    idx = block_indices(data.n, block)
    x = data.x[idx.start - 1 : idx.stop - 1]
    y = data.y[idx.start - 1 : idx.stop - 1]
    out: list[tuple[int, Estimator | None, Exception | None]] = []
    warm: np.ndarray | None = None
    for li in order:
        learner = config.learners[li]
        try:
            est = fit_learner(learner, x, y, beta0=warm if isinstance(learner, Lasso) else None)
        except LearnerError as exc:
            out.append((li, None, exc))
            warm = None
            continue
        out.append((li, est, None))
        if isinstance(learner, Lasso):
            warm = est.beta
    return out


def train_candidates(
    data: Dataset,
    config: EnsembleConfig,
    candidates: list[CandidateId],
    threads: int = 1,
) -> list[Estimator | None]:
    """Fit every candidate; returns estimators aligned with the grid.

    With on_fit_error='abort' the first failure raises, naming the
    candidate; with 'exclude' failed candidates come back as None and a
    warning is logged.
    """
    blocks: list[BlockId] = []
    seen = set()
    for cand in candidates:
        if cand.block not in seen:
            seen.add(cand.block)
            blocks.append(cand.block)
    order = _block_learner_order(config.learners)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_block = list(
                pool.map(lambda b: _fit_block(data, config, b, order), blocks)
            )
    else:
        per_block = [_fit_block(data, config, b, order) for b in blocks]

    fitted: dict[tuple[int, BlockId], Estimator | None] = {}
    for block, results in zip(blocks, per_block):
        for li, est, exc in results:
            if exc is not None:
                cand = CandidateId(learner_index=li, block=block)
                if config.on_fit_error == "abort":
                    raise LearnerError(f"candidate {cand} failed to train: {exc}") from exc
                log.warning("excluding candidate %s: %s", cand, exc)
            fitted[(li, block)] = est
    return [fitted[(c.learner_index, c.block)] for c in candidates]


@dataclass
class EnsembleResult:
    """Selection outcome plus everything needed to audit it."""

    selection: SelectionResult
    estimator: Estimator
    candidates: tuple[CandidateId, ...]
    estimators: tuple[Estimator, ...]
    risk_table: RiskTable
    layout: ComparisonLayout

    @property
    def chosen(self) -> CandidateId:
        return self.selection.chosen

    @property
    def evaluation_count(self) -> int:
        return self.risk_table.evaluation_count


def run_ensemble(
    data: Dataset,
    config: EnsembleConfig,
    threads: int = 1,
    include_matrix: bool = False,
) -> EnsembleResult:
    """Train the full grid, build the risk table, run the tournament."""
    candidates = build_grid(config, data.n)
    estimators = train_candidates(data, config, candidates, threads=threads)
    kept = [(c, e) for c, e in zip(candidates, estimators) if e is not None]
    if not kept:
        raise LearnerError("every candidate failed to train")
    kept_candidates = [c for c, _ in kept]
    kept_estimators = [e for _, e in kept]

    for cand in kept_candidates:
        # levels >= 3 cap every training block at a quarter of the data
        assert block_size(data.n, cand.block) * 4 <= data.n

    layout = ComparisonLayout.for_dataset(data.n, config.v_count)
    table = build_risk_table(kept_candidates, kept_estimators, data, layout)
    assert table.evaluation_count * 3 <= 8 * config.v_count * len(kept_candidates)
    result = minmax_select(table, include_matrix=include_matrix)
    return EnsembleResult(
        selection=result,
        estimator=kept_estimators[result.chosen_index],
        candidates=tuple(kept_candidates),
        estimators=tuple(kept_estimators),
        risk_table=table,
        layout=layout,
    )
