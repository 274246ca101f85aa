import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyvscore.exceptions import InvalidInputError
from hyvscore.gaussian import (
    GaussianSpec,
    UniGaussianSpec,
    hyv_disc_mvn,
    hyv_disc_uni,
    hyv_score_mvn,
    hyv_score_uni,
    kl_uni,
)


def random_pd(rng, k):
    M = rng.standard_normal((k, k))
    return M @ M.T + 0.5 * np.eye(k)


class TestMultivariateScore:
    def test_standard_normal_at_mean(self):
        assert hyv_score_mvn([0.0], GaussianSpec([0.0], [[1.0]])) == -2.0

    def test_diagonal_precision(self):
        q = GaussianSpec([0.0, 0.0], np.diag([2.0, 3.0]))
        assert hyv_score_mvn([1.0, 0.0], q) == -6.0

    def test_zero_precision_scores_zero(self):
        assert hyv_score_mvn([1.0], GaussianSpec([0.0], [[0.0]])) == 0.0

    def test_singular_precision_allowed(self):
        P = np.array([[0.5, -0.5], [-0.5, 0.5]])
        q = GaussianSpec([0.0, 0.0], P)
        # ||P x||^2 - 2 tr P with x = (1, -1): P x = (1, -1)
        assert hyv_score_mvn([1.0, -1.0], q) == pytest.approx(2.0 - 2.0)

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidInputError):
            hyv_score_mvn([1.0, 2.0], GaussianSpec([0.0], [[1.0]]))

    def test_rejects_asymmetric(self):
        with pytest.raises(InvalidInputError):
            GaussianSpec([0.0, 0.0], [[1.0, 0.1], [0.0, 1.0]])

    def test_rejects_indefinite(self):
        with pytest.raises(InvalidInputError):
            GaussianSpec([0.0, 0.0], [[1.0, 0.0], [0.0, -1e-3]])

    def test_matches_generic_rule_on_derivatives(self, rng):
        from hyvscore.scoring import LogDensityDerivatives, hyvarinen_score

        for _ in range(50):
            k = rng.integers(1, 6)
            Phi, mu, x = random_pd(rng, k), rng.standard_normal(k), rng.standard_normal(k)
            d = LogDensityDerivatives(-Phi @ (x - mu), -np.trace(Phi))
            assert hyv_score_mvn(x, GaussianSpec(mu, Phi)) == pytest.approx(hyvarinen_score(d), rel=1e-12)


class TestMultivariateDiscrepancy:
    def test_self_discrepancy_zero(self, rng):
        for k in range(1, 6):
            p = GaussianSpec(rng.standard_normal(k), random_pd(rng, k))
            assert abs(hyv_disc_mvn(p, p)) < 1e-10

    def test_shifted_mean(self):
        p, q = GaussianSpec([0.0], [[1.0]]), GaussianSpec([1.0], [[1.0]])
        assert hyv_disc_mvn(p, q) == pytest.approx(1.0)

    def test_scaled_precision(self):
        p, q = GaussianSpec([0.0], [[1.0]]), GaussianSpec([0.0], [[2.0]])
        assert hyv_disc_mvn(p, q) == pytest.approx(1.0)

    def test_singular_p_rejected(self):
        with pytest.raises(InvalidInputError):
            hyv_disc_mvn(GaussianSpec([0.0], [[0.0]]), GaussianSpec([0.0], [[1.0]]))

    def test_nonnegative(self, rng):
        for _ in range(500):
            k = rng.integers(1, 5)
            p = GaussianSpec(rng.standard_normal(k), random_pd(rng, k))
            q = GaussianSpec(rng.standard_normal(k), random_pd(rng, k))
            assert hyv_disc_mvn(p, q) >= -1e-10

    def test_expected_score_difference(self):
        # Monte Carlo oracle: E_p[S(X, q) - S(X, p)] = D(p, q)
        rng = np.random.default_rng(11)
        k, N = 3, 200_000
        Phi_p, Phi_q = random_pd(rng, k), random_pd(rng, k)
        p = GaussianSpec(rng.standard_normal(k), Phi_p)
        q = GaussianSpec(rng.standard_normal(k), Phi_q)
        X = rng.multivariate_normal(p.mean, np.linalg.inv(Phi_p), size=N)
        diff = np.array([hyv_score_mvn(x, q) - hyv_score_mvn(x, p) for x in X[:20]])
        # vectorised version of the same formula for the bulk
        gq = (X - q.mean) @ Phi_q
        gp = (X - p.mean) @ Phi_p
        bulk = (gq**2).sum(1) - 2 * np.trace(Phi_q) - (gp**2).sum(1) + 2 * np.trace(Phi_p)
        np.testing.assert_allclose(bulk[:20], diff, rtol=1e-10)
        se = bulk.std(ddof=1) / math.sqrt(N)
        assert abs(bulk.mean() - hyv_disc_mvn(p, q)) < 5 * se


class TestUnivariate:
    @pytest.mark.parametrize("x, mu, v, expected", [(0, 0, 1, -2.0), (1, 0, 1, -1.0), (2, 0, 4, -0.25)])
    def test_score(self, x, mu, v, expected):
        assert hyv_score_uni(x, UniGaussianSpec(mu, v)) == pytest.approx(expected)

    def test_score_matches_multivariate(self, rng):
        for _ in range(200):
            q = UniGaussianSpec(rng.normal(), rng.uniform(0.01, 10))
            x = rng.normal(scale=3)
            a, b = hyv_score_uni(x, q), hyv_score_mvn([x], q.as_multivariate())
            assert a == pytest.approx(b, rel=1e-12, abs=1e-300)

    @pytest.mark.parametrize(
        "p, q, expected",
        [((0, 1), (0, 1), 0.0), ((0, 1), (1, 1), 1.0), ((0, 2), (0, 1), 0.5)],
    )
    def test_discrepancy(self, p, q, expected):
        assert hyv_disc_uni(UniGaussianSpec(*p), UniGaussianSpec(*q)) == pytest.approx(expected)

    def test_discrepancy_matches_multivariate(self, rng):
        for _ in range(200):
            p = UniGaussianSpec(rng.normal(), rng.uniform(0.01, 10))
            q = UniGaussianSpec(rng.normal(), rng.uniform(0.01, 10))
            a = hyv_disc_uni(p, q)
            b = hyv_disc_mvn(p.as_multivariate(), q.as_multivariate())
            assert a == pytest.approx(b, rel=1e-10, abs=1e-12)

    @pytest.mark.parametrize(
        "p, q, expected",
        [((0, 1), (0, 1), 0.0), ((0, 1), (1, 1), 0.5), ((0, 2), (0, 1), 0.5 * (2 + math.log(0.5) - 1))],
    )
    def test_kl(self, p, q, expected):
        assert kl_uni(UniGaussianSpec(*p), UniGaussianSpec(*q)) == pytest.approx(expected, abs=1e-15)

    def test_kl_against_quadrature(self):
        from scipy import integrate, stats

        p, q = UniGaussianSpec(0.3, 0.7), UniGaussianSpec(-1.0, 2.5)
        fp = stats.norm(p.mean, math.sqrt(p.variance))
        fq = stats.norm(q.mean, math.sqrt(q.variance))
        val, _ = integrate.quad(lambda x: fp.pdf(x) * (fp.logpdf(x) - fq.logpdf(x)), -30, 30)
        assert kl_uni(p, q) == pytest.approx(val, rel=1e-8)

    @pytest.mark.parametrize("v", [0.0, -1.0, math.nan])
    def test_bad_variance(self, v):
        with pytest.raises(InvalidInputError):
            UniGaussianSpec(0.0, v)

    def test_dominance_grid(self):
        rng = np.random.default_rng(5)
        n = 20_000
        mp, mq = rng.normal(scale=5, size=n), rng.normal(scale=5, size=n)
        vp, vq = np.exp(rng.uniform(-6, 6, n)), np.exp(rng.uniform(-6, 6, n))
        for i in range(n):
            p, q = UniGaussianSpec(mp[i], vp[i]), UniGaussianSpec(mq[i], vq[i])
            d, kl = hyv_disc_uni(p, q), kl_uni(p, q)
            assert d - 2.0 / q.variance * kl >= -1e-12 * max(1.0, abs(d))

    def test_zero_iff_equal(self):
        p = UniGaussianSpec(0.2, 1.3)
        assert hyv_disc_uni(p, p) == 0.0 and kl_uni(p, p) == 0.0
        q = UniGaussianSpec(0.2 + 1e-3, 1.3)
        assert hyv_disc_uni(p, q) > 1e-10 and kl_uni(p, q) > 1e-10


pos = st.floats(1e-3, 1e3)
loc = st.floats(-100, 100)


@settings(max_examples=300, deadline=None)
@given(loc, pos, loc, pos)
def test_dominance_property(mp, vp, mq, vq):
    p, q = UniGaussianSpec(mp, vp), UniGaussianSpec(mq, vq)
    d, kl = hyv_disc_uni(p, q), kl_uni(p, q)
    assert d >= 0 and kl >= 0
    assert d - 2.0 / vq * kl >= -1e-12 * max(1.0, abs(d))
