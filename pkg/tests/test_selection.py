import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyvscore.exceptions import InsufficientDataError, InvalidInputError
from hyvscore.linear_model import (
    LinearModelSpec,
    multivariate_score_known,
    multivariate_score_unknown,
    rls_sweep,
)
from hyvscore.selection import (
    AlignmentPolicy,
    Mode,
    argmin_with_ties,
    run_multivariate,
    run_prequential,
    score_gap_trace,
)

from conftest import random_design


def m1_m2(n, sigma_sq=1.0):
    return [LinearModelSpec.null(n, sigma_sq, name="M1"), LinearModelSpec.intercept_only(n, sigma_sq, name="M2")]


class TestArgmin:
    def test_plain(self):
        assert argmin_with_ties([3.0, -1.0, 2.0]) == 1

    def test_near_tie_goes_first(self):
        assert argmin_with_ties([-1.0 + 1e-14, -1.0]) == 0

    def test_nan_skipped(self):
        assert argmin_with_ties([np.nan, 5.0, 4.0]) == 2

    def test_all_infeasible(self):
        with pytest.raises(InsufficientDataError):
            argmin_with_ties([np.nan, np.nan])

    @given(st.lists(st.integers(-1000, 1000), min_size=1, max_size=8), st.integers(-1000, 1000))
    def test_shift_invariance(self, scores, c):
        scores = np.asarray(scores, dtype=float)
        assert argmin_with_ties(scores + c) == argmin_with_ties(scores)


class TestMultivariate:
    def test_chooses_m2_iff_mean_is_large(self, rng):
        for _ in range(200):
            n = int(rng.integers(2, 40))
            y = rng.normal(scale=0.5, size=n) + rng.normal(scale=0.4)
            res = run_multivariate(y, m1_m2(n))
            stat = n * y.mean() ** 2
            if abs(stat - 2.0) < 1e-9:
                continue
            assert res.chosen == ("M2" if stat > 2.0 else "M1")

    def test_single_candidate(self):
        y = np.array([0.5, -0.3, 1.2])
        res = run_multivariate(y, [LinearModelSpec.null(3, 1.0)])
        assert res.chosen == "M1"
        assert res.final_scores["M1"] == pytest.approx(np.sum(y**2) - 6.0)

    def test_unknown_variance_j_criterion(self, rng):
        for _ in range(100):
            n = int(rng.integers(8, 40))
            y = rng.normal(size=n) + rng.normal(scale=0.5)
            models = [LinearModelSpec.null(n, None, name="M1"), LinearModelSpec.intercept_only(n, None, name="M2")]
            res = run_multivariate(y, models)
            s2_1 = np.sum(y**2) / n
            s2_2 = np.sum((y - y.mean()) ** 2) / (n - 1)
            j1, j2 = s2_1 / (n - 4), s2_2 / (n - 5)
            if abs(j1 - j2) < 1e-9 * j1:
                continue
            assert res.chosen == ("M1" if j1 < j2 else "M2")

    def test_small_nu_unknown_is_infeasible(self):
        y = np.array([0.1, 0.5, -0.2, 1.0, 0.3])
        models = [LinearModelSpec.null(5, 1.0, name="K"), LinearModelSpec.intercept_only(5, None, name="U")]
        res = run_multivariate(y, models)
        assert "U" in res.infeasible
        assert res.chosen == "K"

    def test_identical_models_tie(self, rng):
        X = random_design(rng, 30, 2)
        y = rng.normal(size=30)
        models = [LinearModelSpec(X, 1.0, name="a"), LinearModelSpec(X, 1.0, name="b")]
        assert run_multivariate(y, models).chosen == "a"
        assert run_prequential(y, models).chosen == "a"

    def test_duplicate_ids_rejected(self):
        models = [LinearModelSpec.null(4, 1.0, name="x"), LinearModelSpec.null(4, 1.0, name="x")]
        with pytest.raises(InvalidInputError):
            run_multivariate(np.zeros(4), models)


class TestPrequential:
    def test_null_model_equals_multivariate(self, rng):
        y = rng.normal(size=50)
        res = run_prequential(y, [LinearModelSpec.null(50, 2.0)])
        trace = res.traces["M1"]
        np.testing.assert_allclose(trace.increments, (y**2 / 2.0 - 2.0) / 2.0)
        assert trace.final == pytest.approx(multivariate_score_known(y, LinearModelSpec.null(50, 2.0)), rel=1e-12)

    def test_small_example(self):
        y = np.array([1.0, -1.0, 1.0, -1.0])
        res = run_prequential(y, m1_m2(4))
        assert res.final_scores["M1"] == pytest.approx(-3.0)
        assert res.final_scores["M2"] == pytest.approx(-1.3888888888888888)
        assert res.chosen == "M1"

    def test_skip_head_uses_common_index(self, rng):
        n = 40
        X = random_design(rng, n, 3)
        y = rng.normal(size=n)
        models = [LinearModelSpec(X[:, :1], 1.0), LinearModelSpec(X, 1.0)]
        res = run_prequential(y, models)
        for trace in res.traces.values():
            np.testing.assert_array_equal(trace.index, np.arange(4, n + 1))

    def test_trace_cumulates_increments(self, rng):
        n = 60
        X = random_design(rng, n, 2, intercept=True)
        y = rng.normal(size=n)
        for align in AlignmentPolicy:
            res = run_prequential(y, [LinearModelSpec(X[:, :1], 1.5), LinearModelSpec(X, None)], align)
            for trace in res.traces.values():
                head = trace.head_score or 0.0
                np.testing.assert_allclose(trace.cumulative, head + np.cumsum(trace.increments), rtol=1e-12)

    def test_hybrid_head_equals_multivariate_on_head(self, rng):
        n, p_max = 50, 4
        X = random_design(rng, n, p_max)
        y = rng.normal(size=n)
        models = [LinearModelSpec(X[:, :1], 1.0), LinearModelSpec(X, 1.0), LinearModelSpec(X[:, :2], None)]
        res = run_prequential(y, models, AlignmentPolicy.HYBRID_HEAD)
        assert res.traces["M1"].mode is Mode.HYBRID
        head_known = multivariate_score_known(y[:p_max], LinearModelSpec(X[:p_max, :1], 1.0))
        assert res.traces["M1"].head_score == pytest.approx(head_known, rel=1e-10)
        assert res.traces["M2"].head_score == 0.0
        head_unknown = multivariate_score_unknown(y[:p_max], LinearModelSpec(X[:p_max, :2], None))
        assert res.traces["M3"].head_score == pytest.approx(head_unknown, rel=1e-10)

    def test_hybrid_with_single_model_is_multivariate_plus_prequential(self, rng):
        n = 30
        X = random_design(rng, n, 2)
        y = rng.normal(size=n)
        skip = run_prequential(y, [LinearModelSpec(X, 1.0)])
        hyb = run_prequential(y, [LinearModelSpec(X, 1.0)], AlignmentPolicy.HYBRID_HEAD)
        # with p_max = p the head block has no residual degrees of freedom
        assert hyb.final_scores["M1"] == pytest.approx(skip.final_scores["M1"])

    def test_difference_identity(self, rng):
        for _ in range(100):
            n, p = int(rng.integers(10, 200)), int(rng.integers(0, 9))
            if n <= p + 1:
                continue
            s2 = float(rng.uniform(0.3, 3.0))
            X = random_design(rng, n, p)
            model = LinearModelSpec(X, s2)
            y = rng.normal(size=n) * np.sqrt(s2)
            sweep = rls_sweep(y, model)
            t = sweep.z**2 / s2 - 2.0
            lhs = run_prequential(y, [model]).final_scores["M1"] - multivariate_score_known(y, model)
            rhs = np.sum((1.0 / sweep.k_sq - 1.0) * t) / s2
            assert lhs == pytest.approx(rhs, rel=1e-8, abs=1e-8 * (1 + np.sum(np.abs(t)) / s2))

    def test_too_short(self):
        with pytest.raises(InsufficientDataError):
            run_prequential(np.zeros(3), [LinearModelSpec.null(3, 1.0), LinearModelSpec(np.ones((3, 3)) + np.eye(3), 1.0)])
        with pytest.raises(InsufficientDataError):
            run_prequential(np.zeros(3), [LinearModelSpec.intercept_only(3, None)])

    def test_row_count_mismatch(self):
        with pytest.raises(InvalidInputError):
            run_prequential(np.zeros(5), [LinearModelSpec.null(4, 1.0)])


class TestGap:
    def _traces(self, rng):
        n = 40
        y = rng.normal(size=n)
        return run_prequential(y, m1_m2(n)).traces

    def test_self_gap_zero(self, rng):
        tr = self._traces(rng)
        _, gap = score_gap_trace(tr["M1"], tr["M1"])
        assert np.all(gap == 0.0)

    def test_antisymmetric(self, rng):
        tr = self._traces(rng)
        i1, g1 = score_gap_trace(tr["M2"], tr["M1"])
        i2, g2 = score_gap_trace(tr["M1"], tr["M2"])
        np.testing.assert_array_equal(i1, i2)
        np.testing.assert_array_equal(g1, -g2)

    def test_mismatched_index(self, rng):
        y = rng.normal(size=20)
        a = run_prequential(y, m1_m2(20)).traces["M1"]
        b = run_prequential(y, [LinearModelSpec.null(20, 1.0)]).traces["M1"]
        with pytest.raises(InvalidInputError):
            score_gap_trace(a, b)


@settings(max_examples=50, deadline=None)
@given(st.integers(5, 60), st.floats(-50, 50), st.integers(0, 2**32 - 1))
def test_common_shift_keeps_choice(n, c, seed):
    rng = np.random.default_rng(seed)
    y = rng.normal(size=n)
    res = run_prequential(y, m1_m2(n))
    shifted = {k: v + c for k, v in res.final_scores.items()}
    vec = [shifted["M1"], shifted["M2"]]
    if abs(vec[0] - vec[1]) > 1e-9 * (1 + abs(c)):
        assert ["M1", "M2"][argmin_with_ties(vec)] == res.chosen
