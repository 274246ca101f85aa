"""scikit-learn compatible wrappers.

``PrequentialLinearRegression`` is an ordinary least-squares regressor that
also records the one-step-ahead predictive quantities and Hyvarinen scores
produced while fitting. ``HyvarinenSelector`` picks among column subsets of
X by prequential (or multivariate) Hyvarinen score and then behaves like a
feature selector plus least-squares fit.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .linear_model import (
    LinearModelSpec,
    RlsState,
    incremental_score_known,
    incremental_score_unknown,
    rls_sweep,
    rls_update,
)
from .selection import AlignmentPolicy, run_multivariate, run_prequential


def _with_intercept(X, fit_intercept):
    if fit_intercept:
        return np.hstack([np.ones((X.shape[0], 1)), X])
    return X


class PrequentialLinearRegression(RegressorMixin, BaseEstimator):
    """Least squares fitted one observation at a time under a flat prior.

    Parameters
    ----------
    sigma_sq : float or None
        Known noise variance. ``None`` scores with the unknown-variance
        (Student-type) predictive instead.
    fit_intercept : bool
        Prepend a column of ones to X.

    Attributes
    ----------
    coef_, intercept_ : fitted coefficients
    k_sq_ : variance inflation of each one-step predictive (rows p+1..n)
    innovations_ : standardised prediction errors Z_i
    incremental_scores_ : Hyvarinen score of each one-step predictive
    prequential_score_ : sum of ``incremental_scores_``
    rss_ : residual sum of squares
    """

    def __init__(self, sigma_sq=None, fit_intercept=False):
        self.sigma_sq = sigma_sq
        self.fit_intercept = fit_intercept

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        D = _with_intercept(X, self.fit_intercept)
        model = LinearModelSpec(D, self.sigma_sq)
        sweep = rls_sweep(y, model)
        self.n_features_in_ = X.shape[1]
        self.state_ = sweep.final
        self.k_sq_ = sweep.k_sq
        self.innovations_ = sweep.z
        self.incremental_scores_ = sweep.incremental_scores(self.sigma_sq)
        self._set_coef()
        return self

    def partial_fit(self, X, y):
        """Absorb further observations; the first call must use :meth:`fit`."""
        check_is_fitted(self, "state_")
        X, y = check_X_y(X, y, y_numeric=True)
        D = _with_intercept(X, self.fit_intercept)
        state: RlsState = self.state_
        k_sq, z, scores = [], [], []
        for x_i, y_i in zip(D, y):
            state, step = rls_update(state, x_i, y_i)
            k_sq.append(step.k_sq)
            z.append(step.z)
            if self.sigma_sq is None:
                scores.append(incremental_score_unknown(step, state))
            else:
                scores.append(incremental_score_known(step, self.sigma_sq))
        self.state_ = state
        self.k_sq_ = np.concatenate([self.k_sq_, k_sq])
        self.innovations_ = np.concatenate([self.innovations_, z])
        self.incremental_scores_ = np.concatenate([self.incremental_scores_, scores])
        self._set_coef()
        return self

    def _set_coef(self):
        theta = self.state_.theta_hat
        if self.fit_intercept:
            self.intercept_, self.coef_ = float(theta[0]), theta[1:].copy()
        else:
            self.intercept_, self.coef_ = 0.0, theta.copy()
        self.rss_ = self.state_.rss
        self.prequential_score_ = float(np.sum(self.incremental_scores_))

    def predict(self, X):
        check_is_fitted(self, "state_")
        X = check_array(X)
        return X @ self.coef_ + self.intercept_

    def predictive_variance(self, X):
        """One-step predictive variance ``k^2 sigma^2`` for new rows (known variance)."""
        check_is_fitted(self, "state_")
        if self.sigma_sq is None:
            raise ValueError("predictive variance is only defined for a known sigma_sq")
        D = _with_intercept(check_array(X), self.fit_intercept)
        k_sq = 1.0 + np.einsum("ij,jk,ik->i", D, self.state_.A, D)
        return k_sq * self.sigma_sq


class HyvarinenSelector(TransformerMixin, BaseEstimator):
    """Choose a subset of columns of X by Hyvarinen score.

    Parameters
    ----------
    candidates : sequence of sequences of int
        Column subsets to compare; ``()`` is the zero-mean model. Defaults
        to the nested sequence (), (0,), (0, 1), ...
    sigma_sq : float or None
        Shared known variance, or ``None`` for unknown variance.
    criterion : {"prequential", "multivariate"}
    alignment : {"skip_head", "hybrid_head"}
        How the prequential scores of differently sized models are aligned.
    fit_intercept : bool
        Add an intercept column to every candidate.

    Attributes
    ----------
    selected_ : tuple of int
    scores_ : dict mapping candidate tuple to its final score
    result_ : the underlying :class:`~hyvscore.selection.SelectionResult`
    coef_, intercept_ : least-squares fit on the selected columns
    """

    def __init__(self, candidates=None, sigma_sq=None, criterion="prequential",
                 alignment="skip_head", fit_intercept=False):
        self.candidates = candidates
        self.sigma_sq = sigma_sq
        self.criterion = criterion
        self.alignment = alignment
        self.fit_intercept = fit_intercept

    def _candidate_list(self, n_features):
        if self.candidates is None:
            return [tuple(range(j)) for j in range(n_features + 1)]
        return [tuple(int(c) for c in cand) for cand in self.candidates]

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        if self.criterion not in ("prequential", "multivariate"):
            raise ValueError(f"unknown criterion {self.criterion!r}")
        cands = self._candidate_list(X.shape[1])
        models = []
        for cols in cands:
            D = _with_intercept(X[:, list(cols)], self.fit_intercept)
            models.append(LinearModelSpec(D, self.sigma_sq, name=str(cols)))
        if self.criterion == "prequential":
            res = run_prequential(y, models, AlignmentPolicy(self.alignment))
        else:
            res = run_multivariate(y, models)
        self.n_features_in_ = X.shape[1]
        self.result_ = res
        self.scores_ = {c: res.final_scores[str(c)] for c in cands if str(c) in res.final_scores}
        self.selected_ = cands[[str(c) for c in cands].index(res.chosen)]
        D = _with_intercept(X[:, list(self.selected_)], self.fit_intercept)
        theta = np.linalg.lstsq(D, y, rcond=None)[0] if D.shape[1] else np.zeros(0)
        if self.fit_intercept:
            self.intercept_, self.coef_ = float(theta[0]), theta[1:]
        else:
            self.intercept_, self.coef_ = 0.0, theta
        return self

    def transform(self, X):
        check_is_fitted(self, "selected_")
        X = check_array(X)
        return X[:, list(self.selected_)]

    def get_support(self, indices=False):
        check_is_fitted(self, "selected_")
        if indices:
            return np.array(self.selected_, dtype=int)
        mask = np.zeros(self.n_features_in_, dtype=bool)
        mask[list(self.selected_)] = True
        return mask

    def predict(self, X):
        return self.transform(X) @ self.coef_ + self.intercept_
