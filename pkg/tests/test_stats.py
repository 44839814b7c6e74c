import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hteb import stats
from hteb.errors import (
    AllZero,
    Degenerate,
    InsufficientRaters,
    LengthMismatch,
    OutOfRange,
    TooFew,
    TooFewModels,
    ZeroVector,
)

import oracles


class TestWilcoxon:
    def test_all_positive_extreme(self):
        w, p = stats.wilcoxon_signed_rank([1, 2, 3, 4, 5])
        assert w == 15.0
        assert p == 2 / 32

    def test_symmetric_pairs_give_p_one(self):
        _, p = stats.wilcoxon_signed_rank([1.5, -1.5, 2.0, -2.0, 3.0, -3.0])
        assert p == 1.0

    def test_zeros_discarded(self):
        w1, p1 = stats.wilcoxon_signed_rank([0.0, 1.0, 2.0, -0.5, 0.0])
        w2, p2 = stats.wilcoxon_signed_rank([1.0, 2.0, -0.5])
        assert (w1, p1) == (w2, p2)

    def test_all_zero_raises(self):
        with pytest.raises(AllZero):
            stats.wilcoxon_signed_rank([0.0, 0.0])

    def test_matches_enumeration_oracle_mixed_fixture(self):
        deltas = [0.3, -1.2, 2.2, 2.2, -0.7, 1.9, -1.9, 0.4]
        w, p = stats.wilcoxon_signed_rank(deltas)
        w_o, p_o = oracles.wilcoxon_enumeration(deltas)
        assert w == w_o
        assert p == p_o

    def test_matches_enumeration_oracle_random(self):
        rng = np.random.default_rng(42)
        for _ in range(30):
            n = int(rng.integers(1, 13))
            deltas = np.round(rng.normal(size=n), 1)
            deltas = deltas[deltas != 0]
            if len(deltas) == 0:
                continue
            w, p = stats.wilcoxon_signed_rank(deltas)
            w_o, p_o = oracles.wilcoxon_enumeration(list(deltas))
            assert w == w_o and p == p_o

    def test_large_n_uses_normal_approximation(self):
        rng = np.random.default_rng(0)
        deltas = rng.normal(loc=0.5, size=60)
        _, p = stats.wilcoxon_signed_rank(deltas)
        assert 0.0 < p < 1.0

    def test_exact_path_at_boundary_n25(self):
        import time

        rng = np.random.default_rng(55)
        deltas = rng.normal(loc=0.3, size=25)
        start = time.monotonic()
        _, p_exact = stats.wilcoxon_signed_rank(deltas)
        assert time.monotonic() - start < 1.0
        # one step above the boundary switches to the approximation,
        # which should land close to the exact value at this n
        extended = np.append(deltas, 0.31)
        _, p_approx = stats.wilcoxon_signed_rank(extended)
        assert 0.0 < p_exact <= 1.0 and 0.0 < p_approx <= 1.0

    @given(st.lists(st.integers(min_value=-50, max_value=50).filter(bool), min_size=1, max_size=14))
    @settings(max_examples=60, deadline=None)
    def test_p_in_unit_interval_and_symmetric_inputs_give_one(self, xs):
        xs = [float(x) for x in xs]
        _, p = stats.wilcoxon_signed_rank(xs)
        assert 0.0 < p <= 1.0
        mirrored = xs + [-x for x in xs]
        _, p_mirrored = stats.wilcoxon_signed_rank(mirrored)
        assert p_mirrored == 1.0


class TestHodgesLehmann:
    def test_three_values(self):
        result = stats.hodges_lehmann([1.0, 2.0, 3.0])
        assert result.shift == 2.0

    def test_single_delta(self):
        result = stats.hodges_lehmann([4.5])
        assert (result.shift, result.ci_low, result.ci_high) == (4.5, 4.5, 4.5)

    def test_matches_walsh_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            n = int(rng.integers(1, 16))
            deltas = list(np.round(rng.normal(size=n) * 3, 2))
            result = stats.hodges_lehmann(deltas)
            shift, low, high = oracles.walsh_ci_oracle(deltas)
            assert result.shift == shift
            assert result.ci_low == low
            assert result.ci_high == high

    def test_shift_inside_ci_and_nesting(self):
        rng = np.random.default_rng(3)
        deltas = list(rng.normal(size=12))
        wide = stats.hodges_lehmann(deltas, confidence=0.99)
        mid = stats.hodges_lehmann(deltas, confidence=0.95)
        narrow = stats.hodges_lehmann(deltas, confidence=0.5)
        for r in (wide, mid, narrow):
            assert r.ci_low <= r.shift <= r.ci_high
        assert wide.ci_low <= mid.ci_low <= narrow.ci_low
        assert narrow.ci_high <= mid.ci_high <= wide.ci_high

    def test_bad_confidence(self):
        with pytest.raises(OutOfRange):
            stats.hodges_lehmann([1.0, 2.0], confidence=1.5)

    @given(st.lists(st.integers(min_value=-1000, max_value=1000), min_size=1, max_size=20))
    @settings(max_examples=60, deadline=None)
    def test_shift_always_inside_ci(self, xs):
        result = stats.hodges_lehmann([float(x) for x in xs])
        assert result.ci_low <= result.shift <= result.ci_high


class TestHolm:
    def test_single_p_unchanged(self):
        assert stats.holm_correct([0.04]) == [0.04]

    def test_worked_example(self):
        assert stats.holm_correct([0.01, 0.04, 0.03]) == pytest.approx([0.03, 0.06, 0.06])

    def test_matches_stepdown_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            ps = list(rng.uniform(size=int(rng.integers(1, 10))))
            assert stats.holm_correct(ps) == pytest.approx(oracles.holm_stepdown(ps))

    def test_output_at_least_input(self):
        rng = np.random.default_rng(6)
        ps = list(rng.uniform(size=8))
        adjusted = stats.holm_correct(ps)
        assert all(a >= p for a, p in zip(adjusted, ps))

    def test_permutation_invariance(self):
        ps = [0.04, 0.001, 0.2, 0.04, 0.7]
        base = stats.holm_correct(ps)
        perm = [3, 0, 4, 2, 1]
        permuted = stats.holm_correct([ps[i] for i in perm])
        assert permuted == pytest.approx([base[i] for i in perm])

    def test_out_of_range(self):
        with pytest.raises(OutOfRange):
            stats.holm_correct([0.5, 1.2])


class TestBootstrapCI:
    def test_constant_values(self):
        assert stats.percentile_bootstrap_ci([3.0] * 10, n_boot=500, seed=1) == (3.0, 3.0)

    def test_contains_sample_mean(self):
        rng = np.random.default_rng(11)
        values = rng.normal(size=30)
        low, high = stats.percentile_bootstrap_ci(values, n_boot=4000, seed=2)
        assert low <= values.mean() <= high

    def test_deterministic_per_seed(self):
        values = list(np.random.default_rng(1).normal(size=20))
        assert stats.percentile_bootstrap_ci(values, seed=9) == stats.percentile_bootstrap_ci(values, seed=9)

    def test_too_few(self):
        with pytest.raises(TooFew):
            stats.percentile_bootstrap_ci([1.0])

    def test_judge_score_sample_ci(self):
        # per-sample mean scores clustered tightly around 4.452 give a
        # narrow CI: [4.44, 4.46] at width ~0.02
        rng = np.random.default_rng(17)
        values = np.clip(rng.normal(loc=4.452, scale=0.145, size=800), 1, 5)
        values = values - values.mean() + 4.452
        low, high = stats.percentile_bootstrap_ci(values, seed=3)
        assert low == pytest.approx(4.44, abs=0.01)
        assert high == pytest.approx(4.46, abs=0.01)
        assert (high - low) == pytest.approx(0.02, abs=0.008)


class TestRankCorrelations:
    def test_identity_and_reverse(self):
        x = [1.0, 2.0, 3.0, 4.0]
        assert stats.spearman_rho(x, x) == pytest.approx(1.0)
        assert stats.kendall_tau(x, x) == pytest.approx(1.0)
        assert stats.spearman_rho(x, x[::-1]) == pytest.approx(-1.0)
        assert stats.kendall_tau(x, x[::-1]) == pytest.approx(-1.0)

    def test_kendall_matches_pair_count_oracle_with_ties(self):
        rng = np.random.default_rng(13)
        for _ in range(40):
            n = int(rng.integers(4, 25))
            x = rng.integers(0, 6, size=n).astype(float)
            y = (x + rng.integers(-2, 3, size=n)).astype(float)
            if np.all(x == x[0]) or np.all(y == y[0]):
                continue
            assert abs(stats.kendall_tau(x, y) - oracles.kendall_tau_b(list(x), list(y))) < 1e-12

    def test_spearman_matches_rank_oracle(self):
        rng = np.random.default_rng(14)
        for _ in range(20):
            n = int(rng.integers(3, 20))
            x = rng.integers(0, 8, size=n).astype(float)
            y = rng.normal(size=n)
            if np.all(x == x[0]):
                continue
            assert stats.spearman_rho(x, y) == pytest.approx(
                oracles.spearman_from_ranks(list(x), list(y)), abs=1e-12
            )

    @given(
        st.lists(st.integers(min_value=-100, max_value=100), min_size=4, max_size=12, unique=True)
    )
    @settings(max_examples=50, deadline=None)
    def test_monotone_transform_invariance(self, xs):
        xs = [float(x) for x in xs]
        ys = [3.0 * x + 1.0 for x in xs]
        cubed = [x**3 for x in xs]
        assert stats.kendall_tau(xs, ys) == pytest.approx(1.0)
        assert stats.spearman_rho(xs, cubed) == pytest.approx(stats.spearman_rho(xs, xs))

    def test_degenerate(self):
        with pytest.raises(Degenerate):
            stats.spearman_rho([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])
        with pytest.raises(Degenerate):
            stats.kendall_tau([2.0, 2.0], [1.0, 2.0])
        with pytest.raises(LengthMismatch):
            stats.kendall_tau([1.0, 2.0], [1.0])


class TestGwetAC2:
    def test_perfect_agreement_is_exactly_one(self):
        ratings = [[3, 3, 3], [1, 1, 1], [5, 5, 5], [2, 2, 2]]
        assert stats.gwet_ac2(ratings, [1, 2, 3, 4, 5]).ac2 == 1.0

    def test_ordinal_weight_endpoints(self):
        w = stats.ordinal_weights(5)
        assert w[0, 4] == 0.0
        assert w[4, 0] == 0.0
        assert all(w[k, k] == 1.0 for k in range(5))
        assert w[0, 1] == pytest.approx(0.9)
        assert w[0, 2] == pytest.approx(0.7)
        assert w[0, 3] == pytest.approx(0.4)

    def test_worked_example_four_items_three_raters(self):
        # hand computation, five categories with ordinal weights:
        # pi = (1/12, 1/3, 1/4, 1/6, 1/6); sum(pi*(1-pi)) = 55/72
        # pe = (18/20) * 55/72 = 11/16
        # per-item observed agreement = (14/15, 1, 14/15, 4/5) -> pa = 11/12
        # ac2 = (11/12 - 11/16) / (1 - 11/16) = 11/15
        ratings = [[1, 2, 2], [3, 3, 3], [4, 5, 5], [2, 2, 4]]
        result = stats.gwet_ac2(ratings, [1, 2, 3, 4, 5])
        assert result.ac2 == pytest.approx(11 / 15, abs=1e-9)
        assert (result.n_items, result.n_raters, result.n_categories) == (4, 3, 5)

    def test_missing_ratings_and_partial_items(self):
        ratings = [[4, 4, None], [2, None, None], [5, 5, 5]]
        result = stats.gwet_ac2(ratings, [1, 2, 3, 4, 5])
        assert -1.0 <= result.ac2 <= 1.0

    def test_order_preserving_relabel_invariance(self):
        ratings = [[1, 2, 2], [3, 3, 3], [4, 5, 5], [2, 2, 4]]
        relabeled = [[{1: 10, 2: 20, 3: 30, 4: 40, 5: 50}[v] for v in row] for row in ratings]
        a = stats.gwet_ac2(ratings, [1, 2, 3, 4, 5]).ac2
        b = stats.gwet_ac2(relabeled, [10, 20, 30, 40, 50]).ac2
        assert a == pytest.approx(b, abs=1e-12)

    def test_insufficient_raters(self):
        with pytest.raises(InsufficientRaters):
            stats.gwet_ac2([[3], [4]], [1, 2, 3, 4, 5])


class TestDrift:
    def test_identical_orthogonal_antiparallel(self):
        assert stats.embedding_drift([1, 0, 0], [1, 0, 0]) == pytest.approx(0.0)
        assert stats.embedding_drift([1, 0], [0, 1]) == pytest.approx(1.0)
        assert stats.embedding_drift([1, 1], [-1, -1]) == pytest.approx(2.0)

    def test_scale_invariance(self):
        rng = np.random.default_rng(8)
        v = rng.normal(size=16)
        for c in (0.5, 3.0, 100.0):
            assert abs(stats.embedding_drift(v, c * v)) < 1e-12

    def test_zero_vector(self):
        with pytest.raises(ZeroVector):
            stats.embedding_drift([0.0, 0.0], [1.0, 0.0])


class TestSplitHalf:
    def test_duplicated_datasets_force_identical_halves(self):
        scores = {
            "m1": {"d1": 10.0, "d2": 10.0},
            "m2": {"d1": 20.0, "d2": 20.0},
            "m3": {"d1": 30.0, "d2": 30.0},
        }
        tasks = {"d1": "sts", "d2": "sts"}
        assert stats.split_half_reliability(scores, tasks, n_splits=50, seed=0) == pytest.approx(1.0)

    def test_independent_random_scores_have_near_zero_median(self):
        rng = np.random.default_rng(21)
        datasets = [f"d{i}" for i in range(20)]
        tasks = {d: f"task{i % 4}" for i, d in enumerate(datasets)}
        scores = {
            f"m{j}": {d: float(rng.uniform(0, 100)) for d in datasets} for j in range(8)
        }
        median = stats.split_half_reliability(scores, tasks, n_splits=400, seed=1)
        assert abs(median) < 0.15

    def test_too_few_models(self):
        with pytest.raises(TooFewModels):
            stats.split_half_reliability({"a": {"d": 1.0}, "b": {"d": 2.0}}, {"d": "sts"})


class TestPairedDeltas:
    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            stats.PairedDeltas(labels=["a"], deltas=[1.0, 2.0])

    def test_finite_required(self):
        with pytest.raises(ValueError):
            stats.PairedDeltas(labels=["a"], deltas=[math.nan])
