"""Dyadic block system: training blocks, comparison partition, eligibility.

All block arithmetic is exact integer arithmetic on 1-based index ranges.
A block at level K is one cell of the 2^K-way split of {1, ..., n} whose
boundaries are floor(k*n / 2^K).  Cells at one level are disjoint, cover
the full range, have sizes within one of n/2^K, and nest cleanly across
levels.  Those facts are what make it sound to precompute block risks on
a single fine partition and reuse them for every pairwise comparison;
``verify_lemmas`` checks them exhaustively for a given n.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MIN_LEVEL = 3


class PartitionError(ValueError):
    """Base class for block-arithmetic errors."""


class InvalidLevelError(PartitionError):
    """Block level outside [3, floor(log2 n)]."""


class InvalidIndexError(PartitionError):
    """Block index outside [1, 2^level]."""


class InvalidVError(PartitionError):
    """Comparison-block count V outside its admissible range."""


class InfeasibleLayoutError(PartitionError):
    """Fewer eligible comparison blocks than V; unreachable when the
    level and V invariants hold."""


@dataclass(frozen=True, order=True)
class BlockId:
    """One cell of the 2^level-way dyadic split, 1-based index."""

    level: int
    index: int


def max_level(n: int) -> int:
    """Largest admissible block level for a dataset of size n, floor(log2 n)."""
    if n < 2 ** MIN_LEVEL:
        raise InvalidLevelError(f"dataset size {n} < {2 ** MIN_LEVEL} admits no blocks")
    return n.bit_length() - 1


def validate_block(n: int, block: BlockId) -> None:
    if not MIN_LEVEL <= block.level <= max_level(n):
        raise InvalidLevelError(
            f"level {block.level} outside [{MIN_LEVEL}, {max_level(n)}] for n={n}"
        )
    if not 1 <= block.index <= 2 ** block.level:
        raise InvalidIndexError(
            f"index {block.index} outside [1, {2 ** block.level}] at level {block.level}"
        )


def block_bounds(n: int, block: BlockId) -> tuple[int, int]:
    """Half-open bounds (lo, hi] of the block's 1-based index range."""
    validate_block(n, block)
    width = 2 ** block.level
    return ((block.index - 1) * n) // width, (block.index * n) // width


def block_indices(n: int, block: BlockId) -> range:
    """1-based indices covered by the block, ascending."""
    lo, hi = block_bounds(n, block)
    return range(lo + 1, hi + 1)


def block_size(n: int, block: BlockId) -> int:
    lo, hi = block_bounds(n, block)
    return hi - lo


def blocks_at_level(n: int, level: int) -> list[BlockId]:
    """All 2^level blocks of the given level, ascending index."""
    validate_block(n, BlockId(level, 1))
    return [BlockId(level, k) for k in range(1, 2 ** level + 1)]


def k0_level(v_count: int) -> int:
    """Level of the comparison partition for V blocks.

    ceil(log2(V/3)) + 2, clamped below at 3 so the eligibility and size
    guarantees keep holding down to V = 3.  Computed in exact integer
    arithmetic: ceil(log2(V/3)) is the smallest t with 3*2^t >= V.
    """
    if v_count < 3:
        raise InvalidVError(f"V must be >= 3, got {v_count}")
    t = 0
    while 3 * (2 ** t) < v_count:
        t += 1
    return max(MIN_LEVEL, t + 2)


@dataclass(frozen=True)
class ComparisonLayout:
    """Geometry of the shared comparison partition: V blocks are drawn
    from the 2^k0-way split of a dataset of the given size."""

    v_count: int
    k0: int
    dataset_size: int

    def __post_init__(self) -> None:
        if self.v_count < 3:
            raise InvalidVError(f"V must be >= 3, got {self.v_count}")
        if 8 * self.v_count > self.dataset_size:
            raise InvalidVError(
                f"V={self.v_count} exceeds n/8={self.dataset_size / 8:g} "
                f"for n={self.dataset_size}"
            )
        if self.k0 < MIN_LEVEL or 3 * 2 ** self.k0 > 8 * self.v_count:
            raise InvalidVError(
                f"comparison level k0={self.k0} incompatible with V={self.v_count}"
            )

    @classmethod
    def for_dataset(cls, n: int, v_count: int) -> "ComparisonLayout":
        return cls(v_count=v_count, k0=k0_level(v_count), dataset_size=n)


def eligible_k0_blocks(b1: BlockId, b2: BlockId, layout: ComparisonLayout) -> list[int]:
    """Indices of comparison-partition blocks disjoint from both training
    blocks, ascending.  Guaranteed to number at least V."""
    n = layout.dataset_size
    lo1, hi1 = block_bounds(n, b1)
    lo2, hi2 = block_bounds(n, b2)
    width = 2 ** layout.k0
    eligible = []
    for k in range(1, width + 1):
        lo = ((k - 1) * n) // width
        hi = (k * n) // width
        # disjoint from (a, b] iff hi <= a or lo >= b
        if (hi <= lo1 or lo >= hi1) and (hi <= lo2 or lo >= hi2):
            eligible.append(k)
    if len(eligible) < layout.v_count:
        raise InfeasibleLayoutError(
            f"only {len(eligible)} eligible blocks for V={layout.v_count}; "
            f"blocks {b1} and {b2} at n={n}"
        )
    return eligible


def comparison_blocks(b1: BlockId, b2: BlockId, layout: ComparisonLayout) -> list[BlockId]:
    """The V comparison blocks used against the pair (b1, b2): the V
    smallest eligible indices, a deterministic and symmetric choice."""
    eligible = eligible_k0_blocks(b1, b2, layout)
    chosen = [BlockId(layout.k0, k) for k in eligible[: layout.v_count]]
    n = layout.dataset_size
    for blk in chosen:
        # sizes are guaranteed >= n/(4V); a violation means broken invariants
        if block_size(n, blk) * 4 * layout.v_count < n:
            raise InfeasibleLayoutError(
                f"comparison block {blk} of size {block_size(n, blk)} "
                f"below n/(4V) = {n / (4 * layout.v_count):g}"
            )
    return chosen


@dataclass
class LemmaReport:
    """Outcome of the exhaustive block-system verification for one n."""

    n: int
    v_max: int
    partition_ok: bool
    nesting_ok: bool
    refinement_ok: bool
    eligibility_ok: bool
    size_bound_ok: bool
    cardinality_ok: bool
    pair_count: int
    min_eligible: dict[int, int]  # k0 level -> minimum eligible count over all pairs

    @property
    def ok(self) -> bool:
        return (
            self.partition_ok
            and self.nesting_ok
            and self.refinement_ok
            and self.eligibility_ok
            and self.size_bound_ok
            and self.cardinality_ok
        )

    def lines(self) -> list[str]:
        def fmt(name: str, good: bool) -> str:
            return f"  {'PASS' if good else 'FAIL'}  {name}"

        return [
            f"n={self.n} (levels 3..{max_level(self.n)}, V up to {self.v_max}, "
            f"{self.pair_count} block pairs)",
            fmt("partition: blocks at each level are disjoint with union [n]", self.partition_ok),
            fmt("nesting: every block lies inside its coarser-level parent", self.nesting_ok),
            fmt("refinement: child blocks tile each coarser block exactly", self.refinement_ok),
            fmt("eligibility: >= V disjoint comparison blocks for every pair", self.eligibility_ok),
            fmt("size bound: every comparison block has >= n/(4V) points", self.size_bound_ok),
            fmt("cardinality: every training block has <= n/4 points", self.cardinality_ok),
        ]


def _level_boundaries(n: int, level: int) -> np.ndarray:
    ks = np.arange(2 ** level + 1, dtype=np.int64)
    return (ks * n) // (2 ** level)


def verify_lemmas(n: int, v_max: int | None = None) -> LemmaReport:
    """Exhaustively verify the dyadic block-system guarantees for size n.

    Covers every level pair, every block, every pair of training blocks,
    and every V in [3, min(v_max, n//8)].  The eligibility count for a
    pair is computed from the contiguous ranges of comparison blocks that
    touch each training block, vectorized so the full quadratic sweep
    stays fast; agreement with the element-wise enumeration used at run
    time is cross-checked on a deterministic subsample of pairs.
    """
    kmax = max_level(n)
    if v_max is None:
        v_max = n // 8
    v_max = min(v_max, n // 8)
    levels = list(range(MIN_LEVEL, kmax + 1))
    bounds = {lev: _level_boundaries(n, lev) for lev in levels}

    # partition + cardinality per level
    partition_ok = True
    cardinality_ok = True
    for lev in levels:
        b = bounds[lev]
        sizes = np.diff(b)
        if b[0] != 0 or b[-1] != n or np.any(sizes < n // 2 ** lev) or np.any(sizes <= 0):
            partition_ok = False
        if np.any(sizes * 4 > n):
            cardinality_ok = False

    # nesting: block k at level K sits inside block floor((k-1)*2^(K'-K))+1 at K' <= K
    nesting_ok = True
    for hi_lev in levels:
        for lo_lev in range(MIN_LEVEL, hi_lev + 1):
            k = np.arange(1, 2 ** hi_lev + 1, dtype=np.int64)
            parent = ((k - 1) * 2 ** lo_lev) // (2 ** hi_lev) + 1
            child_lo = bounds[hi_lev][k - 1]
            child_hi = bounds[hi_lev][k]
            par_lo = bounds[lo_lev][parent - 1]
            par_hi = bounds[lo_lev][parent]
            if np.any(child_lo < par_lo) or np.any(child_hi > par_hi):
                nesting_ok = False

    # refinement: children ](k'-1)*2^(K-K'), k'*2^(K-K')] tile block k' exactly
    refinement_ok = True
    for lo_lev in levels:
        for hi_lev in range(lo_lev, kmax + 1):
            ratio = 2 ** (hi_lev - lo_lev)
            kp = np.arange(1, 2 ** lo_lev + 1, dtype=np.int64)
            first_lo = bounds[hi_lev][(kp - 1) * ratio]
            last_hi = bounds[hi_lev][kp * ratio]
            if np.any(first_lo != bounds[lo_lev][kp - 1]) or np.any(last_hi != bounds[lo_lev][kp]):
                refinement_ok = False

    # all training blocks as flat (lo, hi] arrays
    all_lo = np.concatenate([bounds[lev][:-1] for lev in levels])
    all_hi = np.concatenate([bounds[lev][1:] for lev in levels])
    n_blocks = all_lo.shape[0]
    pair_count = n_blocks * n_blocks

    k0_levels = sorted({k0_level(v) for v in range(3, v_max + 1)}) if v_max >= 3 else []
    eligibility_ok = True
    size_bound_ok = True
    min_eligible: dict[int, int] = {}
    for k0 in k0_levels:
        b0 = bounds.get(k0)
        if b0 is None:
            b0 = _level_boundaries(n, k0)
        width = 2 ** k0
        # contiguous range [first, last] of comparison blocks touching each block
        first = np.searchsorted(b0, all_lo, side="right").astype(np.int64)
        last = np.searchsorted(b0, all_hi, side="left").astype(np.int64)
        # pairwise size of the union of the two touched ranges
        f1 = first[:, None]
        l1 = last[:, None]
        f2 = first[None, :]
        l2 = last[None, :]
        overlap = np.maximum(0, np.minimum(l1, l2) - np.maximum(f1, f2) + 1)
        union = (l1 - f1 + 1) + (l2 - f2 + 1) - overlap
        counts = width - union
        min_count = int(counts.min())
        min_eligible[k0] = min_count
        strictest_v = max(v for v in range(3, v_max + 1) if k0_level(v) == k0)
        if min_count < strictest_v:
            eligibility_ok = False
        # exact cross-check of the vectorized count against the runtime
        # enumeration on a deterministic subsample of pairs
        layout = ComparisonLayout(v_count=strictest_v, k0=k0, dataset_size=n)
        ids = [BlockId(lev, k) for lev in levels for k in range(1, 2 ** lev + 1)]
        step = max(1, n_blocks // 48)
        for i in range(0, n_blocks, step):
            for j in range(0, n_blocks, step):
                got = len(eligible_k0_blocks(ids[i], ids[j], layout))
                if got != counts[i, j]:
                    eligibility_ok = False

    for v in range(3, v_max + 1):
        k0 = k0_level(v)
        min_size = int(np.diff(_level_boundaries(n, k0)).min())
        if min_size * 4 * v < n:
            size_bound_ok = False

    return LemmaReport(
        n=n,
        v_max=v_max,
        partition_ok=partition_ok,
        nesting_ok=nesting_ok,
        refinement_ok=refinement_ok,
        eligibility_ok=eligibility_ok,
        size_bound_ok=size_bound_ok,
        cardinality_ok=cardinality_ok,
        pair_count=pair_count,
        min_eligible=min_eligible,
    )
