"""Risk table, pairwise comparison and tournament tests, checked against
hand-built tables and a brute-force enumeration oracle."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from momselect.dataset import Dataset
from momselect.learners import Estimator
from momselect.partition import BlockId, ComparisonLayout, comparison_blocks
from momselect.selection import (
    CandidateId,
    RiskTable,
    SelectionError,
    build_risk_table,
    comparator_matrix,
    empirical_risk,
    minmax_select,
    mom_compare,
    mom_mean,
    write_comparator_csv,
)


def make_dataset(n=64, d=2, seed=0):
    rng = np.random.default_rng(seed)
    return Dataset(x=rng.standard_normal((n, d)), y=rng.standard_normal(n))


def random_table(seed, n_cands=None, v=None, n=1000):
    """A risk table with random nonnegative entries over random candidates."""
    rng = np.random.default_rng(seed)
    v = v if v is not None else int(rng.integers(3, 10))
    n_cands = n_cands if n_cands is not None else int(rng.integers(1, 11))
    layout = ComparisonLayout.for_dataset(n, v)
    cands = []
    seen = set()
    while len(cands) < n_cands:
        level = int(rng.integers(3, 5))
        index = int(rng.integers(1, 2 ** level + 1))
        li = int(rng.integers(0, 4))
        cand = CandidateId(learner_index=li, block=BlockId(level, index))
        if cand not in seen:
            seen.add(cand)
            cands.append(cand)
    values = rng.uniform(0.0, 5.0, size=(n_cands, 2 ** layout.k0))
    return RiskTable(values=values, candidates=tuple(cands), layout=layout)


def brute_force_minmax(table):
    """Oracle: enumerate every pairwise median and take argmin of row
    maxima with the lexicographic tie rule."""
    cands = table.candidates
    m = len(cands)
    t = np.empty((m, m))
    for i in range(m):
        for j in range(m):
            blocks = comparison_blocks(cands[i].block, cands[j].block, table.layout)
            cols = [b.index - 1 for b in blocks]
            t[i, j] = np.median(table.values[i, cols] - table.values[j, cols])
    worst = t.max(axis=1)
    best = worst.min()
    tied = [i for i in range(m) if worst[i] == best]
    chosen = min(tied, key=lambda i: cands[i])
    return chosen, best, t


class TestEmpiricalRisk:
    def test_zero_estimator_constant_response(self):
        data = Dataset(x=np.zeros((64, 2)), y=np.full(64, 2.0))
        est = Estimator(beta=np.zeros(2))
        assert empirical_risk(est, data, BlockId(3, 1)) == 4.0

    def test_exact_fit_zero_risk(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((64, 3))
        beta = np.array([1.0, -2.0, 0.5])
        data = Dataset(x=x, y=x @ beta)
        assert empirical_risk(Estimator(beta=beta), data, BlockId(3, 2)) == 0.0

    def test_two_point_block(self):
        # n=16 at level 3 gives 2-point blocks; errors 1 and 3 average to 5
        x = np.zeros((16, 1))
        y = np.zeros(16)
        y[0], y[1] = 1.0, 3.0
        data = Dataset(x=x, y=y)
        est = Estimator(beta=np.zeros(1))
        assert empirical_risk(est, data, BlockId(3, 1)) == 5.0

    def test_dimension_mismatch(self):
        data = make_dataset(d=2)
        with pytest.raises(SelectionError):
            empirical_risk(Estimator(beta=np.zeros(3)), data, BlockId(3, 1))


class TestBuildRiskTable:
    def test_shape_and_count_single_candidate(self):
        data = make_dataset(n=64)
        layout = ComparisonLayout.for_dataset(64, 4)
        cands = [CandidateId(0, BlockId(3, 1))]
        ests = [Estimator(beta=np.zeros(2))]
        table = build_risk_table(cands, ests, data, layout)
        assert table.values.shape == (1, 8)
        assert table.evaluation_count == 8

    def test_entries_match_empirical_risk(self):
        data = make_dataset(n=128, d=3, seed=5)
        layout = ComparisonLayout.for_dataset(128, 6)
        rng = np.random.default_rng(6)
        cands = [CandidateId(i, BlockId(3, i + 1)) for i in range(4)]
        ests = [Estimator(beta=rng.standard_normal(3)) for _ in range(4)]
        table = build_risk_table(cands, ests, data, layout)
        for i, est in enumerate(ests):
            for k in range(1, 2 ** layout.k0 + 1):
                cell = BlockId(layout.k0, k)
                assert table.values[i, k - 1] == empirical_risk(est, data, cell)

    def test_identical_estimators_identical_rows(self):
        data = make_dataset(n=64)
        layout = ComparisonLayout.for_dataset(64, 4)
        beta = np.array([0.3, -0.7])
        cands = [CandidateId(0, BlockId(3, 1)), CandidateId(1, BlockId(3, 5))]
        ests = [Estimator(beta=beta), Estimator(beta=beta.copy())]
        table = build_risk_table(cands, ests, data, layout)
        assert np.array_equal(table.values[0], table.values[1])

    def test_efficiency_bound_reference_grid(self):
        # 7 learners x 24 blocks at n=1000, V=40: 168 * 64 <= 8*40*168/3
        data = make_dataset(n=1000, d=2, seed=1)
        layout = ComparisonLayout.for_dataset(1000, 40)
        cands = [
            CandidateId(li, BlockId(level, k))
            for li in range(7)
            for level in (3, 4)
            for k in range(1, 2 ** level + 1)
        ]
        ests = [Estimator(beta=np.zeros(2)) for _ in cands]
        table = build_risk_table(cands, ests, data, layout)
        assert len(cands) == 168
        assert table.evaluation_count == 168 * 64 == 10752
        assert table.evaluation_count * 3 <= 8 * 40 * len(cands)

    def test_rejects_negative_entries(self):
        layout = ComparisonLayout.for_dataset(64, 4)
        with pytest.raises(SelectionError):
            RiskTable(
                values=np.full((1, 8), -1.0),
                candidates=(CandidateId(0, BlockId(3, 1)),),
                layout=layout,
            )


class TestMomCompare:
    def test_diagonal_zero(self):
        table = random_table(0)
        for cand in table.candidates:
            assert mom_compare(table, cand, cand) == 0.0

    def test_known_median_of_three(self):
        # per-block differences (-1, 0, 5) have median 0; build a table
        # whose first three eligible cells realize those differences
        layout = ComparisonLayout.for_dataset(1000, 3)
        c1 = CandidateId(0, BlockId(3, 1))
        c2 = CandidateId(1, BlockId(3, 1))
        cols = [b.index - 1 for b in comparison_blocks(c1.block, c2.block, layout)]
        values = np.zeros((2, 8))
        values[0, cols] = [0.0, 1.0, 6.0]
        values[1, cols] = [1.0, 1.0, 1.0]
        table = RiskTable(values=values, candidates=(c1, c2), layout=layout)
        assert mom_compare(table, c1, c2) == 0.0
        assert mom_compare(table, c2, c1) == 0.0

    @given(st.integers(0, 10_000))
    @settings(max_examples=50)
    def test_antisymmetry_exact(self, seed):
        table = random_table(seed)
        for ci in table.candidates:
            for cj in table.candidates:
                assert mom_compare(table, ci, cj) == -mom_compare(table, cj, ci)

    @given(st.integers(0, 10_000))
    @settings(max_examples=30)
    def test_matrix_agrees_with_pairwise(self, seed):
        table = random_table(seed)
        matrix = comparator_matrix(table)
        for i, ci in enumerate(table.candidates):
            for j, cj in enumerate(table.candidates):
                assert matrix[i, j] == mom_compare(table, ci, cj)


class TestMinmaxSelect:
    def test_single_candidate(self):
        table = random_table(3, n_cands=1)
        result = minmax_select(table)
        assert result.chosen == table.candidates[0]
        assert result.minmax_value == 0.0

    def test_blockwise_dominant_candidate_wins(self):
        layout = ComparisonLayout.for_dataset(1000, 3)
        cands = (
            CandidateId(0, BlockId(3, 1)),
            CandidateId(1, BlockId(3, 2)),
            CandidateId(2, BlockId(3, 3)),
        )
        rng = np.random.default_rng(0)
        base = rng.uniform(1.0, 2.0, size=(1, 8))
        values = np.vstack([base + 1.0, base - 0.5, base + 0.3])
        table = RiskTable(values=values, candidates=cands, layout=layout)
        result = minmax_select(table)
        chosen_idx, best, _ = brute_force_minmax(table)
        assert result.chosen_index == chosen_idx == 1
        assert result.minmax_value == best

    @given(st.integers(0, 10_000))
    @settings(max_examples=50, deadline=None)
    def test_matches_brute_force(self, seed):
        table = random_table(seed)
        result = minmax_select(table)
        chosen_idx, best, t = brute_force_minmax(table)
        assert result.chosen_index == chosen_idx
        assert result.minmax_value == best
        assert result.minmax_value >= 0.0
        if result.minmax_value == 0.0:
            # zero is attained exactly when the winner weakly wins all
            assert np.all(t[chosen_idx] <= 0.0)

    def test_duplicate_candidate_keeps_selection(self):
        table = random_table(17, n_cands=4)
        result = minmax_select(table)
        extra = CandidateId(9, table.candidates[2].block)
        dup_values = np.vstack([table.values, table.values[2]])
        dup_table = RiskTable(
            values=dup_values,
            candidates=table.candidates + (extra,),
            layout=table.layout,
        )
        dup_result = minmax_select(dup_table)
        assert np.array_equal(
            dup_table.values[dup_result.chosen_index], table.values[result.chosen_index]
        )

    def test_permutation_invariance(self):
        table = random_table(23, n_cands=6)
        result = minmax_select(table, include_matrix=True)
        rng = np.random.default_rng(1)
        perm = rng.permutation(len(table.candidates))
        permuted = RiskTable(
            values=table.values[perm],
            candidates=tuple(table.candidates[i] for i in perm),
            layout=table.layout,
        )
        pres = minmax_select(permuted, include_matrix=True)
        assert pres.chosen == result.chosen
        assert pres.minmax_value == result.minmax_value
        np.testing.assert_array_equal(
            pres.comparator_matrix, result.comparator_matrix[np.ix_(perm, perm)]
        )

    def test_empty_candidates_rejected(self):
        layout = ComparisonLayout.for_dataset(64, 4)
        table = RiskTable(values=np.zeros((0, 8)), candidates=(), layout=layout)
        with pytest.raises(SelectionError):
            minmax_select(table)

    def test_tie_break_lexicographic(self):
        layout = ComparisonLayout.for_dataset(1000, 3)
        cands = (
            CandidateId(1, BlockId(3, 2)),
            CandidateId(0, BlockId(3, 5)),
            CandidateId(0, BlockId(3, 4)),
        )
        values = np.ones((3, 8))  # all identical: every comparison ties at 0
        table = RiskTable(values=values, candidates=cands, layout=layout)
        result = minmax_select(table)
        assert result.chosen == CandidateId(0, BlockId(3, 4))


class TestMomMean:
    def test_clean_gaussian_close_to_mean(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal(600) + 3.0
        assert abs(mom_mean(x, 30) - 3.0) < 0.5

    def test_corruption_bounded_by_clean_block_range(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            x = rng.standard_normal(600)
            v = 30
            n_bad = int(rng.integers(1, 11))
            bad = rng.choice(v, size=n_bad, replace=False)
            xc = x.copy().reshape(v, 20)
            clean_means = [xc[b].mean() for b in range(v) if b not in set(bad)]
            xc[bad] = 1e6
            got = mom_mean(xc.ravel(), v)
            assert min(clean_means) <= got <= max(clean_means)

    def test_rejects_bad_v(self):
        with pytest.raises(SelectionError):
            mom_mean(np.ones(10), 0)
        with pytest.raises(SelectionError):
            mom_mean(np.ones(10), 11)


class TestBlockProvider:
    def test_alternative_provider_accepted(self):
        # any provider returning V comparison-partition blocks disjoint
        # from both training blocks is a valid plug-in; take the LAST V
        # eligible cells instead of the first
        from momselect.partition import eligible_k0_blocks

        def last_v(b1, b2, layout):
            from momselect.partition import BlockId as B

            eligible = eligible_k0_blocks(b1, b2, layout)
            return [B(layout.k0, k) for k in eligible[-layout.v_count :]]

        table = random_table(31, n_cands=4)
        default = minmax_select(table)
        alt = minmax_select(table, block_provider=last_v)
        assert alt.minmax_value >= 0.0
        for ci in table.candidates:
            for cj in table.candidates:
                got = mom_compare(table, ci, cj, block_provider=last_v)
                assert got == -mom_compare(table, cj, ci, block_provider=last_v)
        assert default.chosen in table.candidates

    def test_overlapping_provider_rejected(self):
        def bad(b1, b2, layout):
            from momselect.partition import BlockId as B

            return [B(layout.k0, k) for k in range(1, layout.v_count + 1)]

        layout = ComparisonLayout.for_dataset(1000, 4)
        cands = (CandidateId(0, BlockId(3, 1)), CandidateId(1, BlockId(3, 2)))
        table = RiskTable(
            values=np.ones((2, 2 ** layout.k0)), candidates=cands, layout=layout
        )
        with pytest.raises(SelectionError):
            # cell 1 lies inside training block (3, 1) by nesting
            mom_compare(table, cands[0], cands[1], block_provider=bad)

    def test_wrong_level_provider_rejected(self):
        def wrong_level(b1, b2, layout):
            from momselect.partition import BlockId as B

            return [B(layout.k0 + 1, k) for k in range(1, layout.v_count + 1)]

        table = random_table(33, n_cands=2)
        c1, c2 = table.candidates
        with pytest.raises(SelectionError):
            mom_compare(table, c1, c2, block_provider=wrong_level)


class TestComparatorCsv:
    def test_round_trip_triples(self, tmp_path):
        table = random_table(5, n_cands=3)
        result = minmax_select(table, include_matrix=True)
        path = tmp_path / "cmp.csv"
        write_comparator_csv(result, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "m,m2,T"
        assert len(lines) == 1 + 9
        for line in lines[1:]:
            i, j, t = line.split(",")
            assert float(t) == result.comparator_matrix[int(i), int(j)]

    def test_requires_matrix(self):
        table = random_table(5, n_cands=2)
        result = minmax_select(table, include_matrix=False)
        with pytest.raises(SelectionError):
            write_comparator_csv(result, "/tmp/never.csv")
