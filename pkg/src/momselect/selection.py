"""Block empirical risks, robust pairwise comparisons, minmax selection.

Every candidate's mean squared prediction error is computed once per
cell of the shared comparison partition and stored in a risk table.
A pair of candidates is then compared by the median, over their V
admissible comparison blocks, of the difference of table entries; the
winner of the tournament is the candidate whose worst comparison is
smallest.  Medians of even length take the midpoint of the two central
order statistics, which keeps the comparison exactly antisymmetric.

Per-row squared errors and block means are evaluated by compiled loops
that sum in ascending index order, so identical inputs give
bit-identical tables no matter how the surrounding orchestration is
parallelized.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numba import njit

from .dataset import Dataset
from .learners import Estimator
from .partition import (
    BlockId,
    ComparisonLayout,
    block_bounds,
    comparison_blocks,
    validate_block,
)


class SelectionError(ValueError):
    """Invalid inputs to risk evaluation or selection."""


@dataclass(frozen=True, order=True)
class CandidateId:
    """One point of the model grid: a learner index paired with the
    training block the learner is fit on."""

    learner_index: int
    block: BlockId


BlockProvider = Callable[[BlockId, BlockId, ComparisonLayout], Sequence[BlockId]]


@njit(cache=True, nogil=True)
def _sq_residuals(x, y, beta):
    n, d = x.shape
    out = np.empty(n)
    for i in range(n):
        p = 0.0
        for j in range(d):
            p += x[i, j] * beta[j]
        e = y[i] - p
        out[i] = e * e
    return out


@njit(cache=True, nogil=True)
def _segment_means(values, boundaries):
    m = boundaries.shape[0] - 1
    out = np.empty(m)
    for s in range(m):
        lo = boundaries[s]
        hi = boundaries[s + 1]
        acc = 0.0
        for i in range(lo, hi):
            acc += values[i]
        out[s] = acc / (hi - lo)
    return out


def empirical_risk(est: Estimator, data: Dataset, block: BlockId) -> float:
    """Mean squared prediction error of the estimator on one block."""
    if est.beta.shape[0] != data.d:
        raise SelectionError(
            f"estimator dimension {est.beta.shape[0]} does not match data d={data.d}"
        )
    lo, hi = block_bounds(data.n, block)
    sq = _sq_residuals(data.x[lo:hi], data.y[lo:hi], est.beta)
    return float(_segment_means(sq, np.array([0, hi - lo], dtype=np.int64))[0])


@dataclass
class RiskTable:
    """Per-candidate empirical risks on every cell of the comparison
    partition: values[i, k-1] is candidate i's risk on cell k."""

    values: np.ndarray
    candidates: tuple[CandidateId, ...]
    layout: ComparisonLayout
    _row: dict[CandidateId, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        values.setflags(write=False)
        self.values = values
        width = 2 ** self.layout.k0
        if self.values.shape != (len(self.candidates), width):
            raise SelectionError(
                f"table shape {self.values.shape} does not match "
                f"{len(self.candidates)} candidates x {width} cells"
            )
        if not np.all(np.isfinite(self.values)) or np.any(self.values < 0):
            raise SelectionError("risk table entries must be finite and >= 0")
        self._row = {}
        for i, cand in enumerate(self.candidates):
            if cand in self._row:
                raise SelectionError(f"duplicate candidate id {cand}")
            self._row[cand] = i

    @property
    def evaluation_count(self) -> int:
        """Number of block risk evaluations the table embodies."""
        return self.values.size

    def row_index(self, cand: CandidateId) -> int:
        try:
            return self._row[cand]
        except KeyError:
            raise SelectionError(f"unknown candidate {cand}") from None


def build_risk_table(
    candidates: Sequence[CandidateId],
    estimators: Sequence[Estimator],
    data: Dataset,
    layout: ComparisonLayout,
) -> RiskTable:
    """Evaluate every candidate on every comparison cell, once.

    The total work is len(candidates) * 2^k0 block evaluations, which
    stays within (8V/3) evaluations per candidate by the layout
    invariant 3 * 2^k0 <= 8V.
    """
    if len(candidates) != len(estimators):
        raise SelectionError(
            f"{len(candidates)} candidates but {len(estimators)} estimators"
        )
    if layout.dataset_size != data.n:
        raise SelectionError(
            f"layout is for n={layout.dataset_size} but data has n={data.n}"
        )
    for cand in candidates:
        validate_block(data.n, cand.block)
    width = 2 ** layout.k0
    ks = np.arange(width + 1, dtype=np.int64)
    boundaries = (ks * data.n) // width
    values = np.empty((len(candidates), width))
    for i, est in enumerate(estimators):
        if est.beta.shape[0] != data.d:
            raise SelectionError(
                f"candidate {candidates[i]}: estimator dimension "
                f"{est.beta.shape[0]} does not match data d={data.d}"
            )
        sq = _sq_residuals(data.x, data.y, est.beta)
        values[i] = _segment_means(sq, boundaries)
    return RiskTable(values=values, candidates=tuple(candidates), layout=layout)


def _comparison_columns(
    b1: BlockId,
    b2: BlockId,
    layout: ComparisonLayout,
    provider: BlockProvider,
    cache: dict | None = None,
) -> np.ndarray:
    key = (b1, b2) if b1 <= b2 else (b2, b1)
    if cache is not None and key in cache:
        return cache[key]
    blocks = provider(key[0], key[1], layout)
    if len(blocks) != layout.v_count:
        raise SelectionError(
            f"block provider returned {len(blocks)} blocks, expected V={layout.v_count}"
        )
    n = layout.dataset_size
    cols = np.empty(len(blocks), dtype=np.int64)
    for v, blk in enumerate(blocks):
        if blk.level != layout.k0:
            raise SelectionError(
                f"comparison block {blk} is not at the table level k0={layout.k0}"
            )
        lo, hi = block_bounds(n, blk)
        for other in (b1, b2):
            olo, ohi = block_bounds(n, other)
            if not (hi <= olo or lo >= ohi):
                raise SelectionError(
                    f"comparison block {blk} intersects training block {other}"
                )
        if (hi - lo) * 4 * layout.v_count < n:
            raise SelectionError(
                f"comparison block {blk} smaller than n/(4V)"
            )
        cols[v] = blk.index - 1
    if cache is not None:
        cache[key] = cols
    return cols


def mom_compare(
    table: RiskTable,
    m: CandidateId,
    m2: CandidateId,
    block_provider: BlockProvider = comparison_blocks,
) -> float:
    """Median over the V comparison blocks of (risk of m - risk of m2).

    Negative values mean m looked better than m2 on a majority of
    blocks.  Exactly antisymmetric in (m, m2) and zero on the diagonal.
    """
    cols = _comparison_columns(m.block, m2.block, table.layout, block_provider)
    ri = table.values[table.row_index(m), cols]
    rj = table.values[table.row_index(m2), cols]
    return float(np.median(ri - rj))


def comparator_matrix(
    table: RiskTable,
    block_provider: BlockProvider = comparison_blocks,
) -> np.ndarray:
    """All pairwise comparisons, grouped by training-block pair so each
    eligible-block set is resolved once."""
    cands = table.candidates
    m = len(cands)
    out = np.empty((m, m))
    by_block: dict[BlockId, list[int]] = {}
    for i, cand in enumerate(cands):
        by_block.setdefault(cand.block, []).append(i)
    cache: dict = {}
    blocks = list(by_block)
    for b1 in blocks:
        rows1 = np.array(by_block[b1])
        for b2 in blocks:
            rows2 = np.array(by_block[b2])
            cols = _comparison_columns(b1, b2, table.layout, block_provider, cache)
            sub1 = table.values[np.ix_(rows1, cols)]
            sub2 = table.values[np.ix_(rows2, cols)]
            diffs = sub1[:, None, :] - sub2[None, :, :]
            out[np.ix_(rows1, rows2)] = np.median(diffs, axis=2)
    return out


@dataclass
class SelectionResult:
    """Winner of the minmax tournament plus its diagnostics."""

    chosen: CandidateId
    chosen_index: int
    minmax_value: float
    worst_case: np.ndarray
    comparator_matrix: np.ndarray | None = None


def minmax_select(
    table: RiskTable,
    include_matrix: bool = False,
    block_provider: BlockProvider = comparison_blocks,
) -> SelectionResult:
    """Pick the candidate whose worst pairwise comparison is smallest.

    The diagonal ties every candidate with itself at zero, so the
    attained minmax value is never negative.  Ties are broken by the
    smallest (learner_index, level, index) triple.
    """
    if len(table.candidates) == 0:
        raise SelectionError("candidate set is empty")
    matrix = comparator_matrix(table, block_provider)
    worst = matrix.max(axis=1)
    best = worst.min()
    tied = np.flatnonzero(worst == best)
    chosen_index = int(min(tied, key=lambda i: table.candidates[i]))
    return SelectionResult(
        chosen=table.candidates[chosen_index],
        chosen_index=chosen_index,
        minmax_value=float(best),
        worst_case=worst,
        comparator_matrix=matrix if include_matrix else None,
    )


def mom_mean(values, v_count: int) -> float:
    """Median of v_count contiguous-block means of a 1-d sample.

    The sample is split by the same floor-boundary rule as the block
    system, so block sizes differ by at most one.  Robust location
    estimate: moving fewer than half the blocks arbitrarily cannot move
    the result outside the range of the untouched block means.
    """
    values = np.ascontiguousarray(values, dtype=np.float64)
    n = values.shape[0]
    if values.ndim != 1 or n == 0:
        raise SelectionError("values must be a nonempty 1-d array")
    if not 1 <= v_count <= n:
        raise SelectionError(f"v_count {v_count} outside [1, {n}]")
    ks = np.arange(v_count + 1, dtype=np.int64)
    boundaries = (ks * n) // v_count
    return float(np.median(_segment_means(values, boundaries)))


def write_comparator_csv(result: SelectionResult, path) -> None:
    """Dump the comparison matrix as m,m2,T triples; m and m2 are
    positions in the candidate ordering of the table."""
    if result.comparator_matrix is None:
        raise SelectionError("selection was run without include_matrix=True")
    matrix = result.comparator_matrix
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("m,m2,T\n")
        for i in range(matrix.shape[0]):
            for j in range(matrix.shape[1]):
                fh.write(f"{i},{j},{format(matrix[i, j], '.17g')}\n")
