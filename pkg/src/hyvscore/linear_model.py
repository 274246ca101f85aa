"""Normal linear model ``Y ~ N(X theta, sigma^2 I)`` under improper priors.

Covers the marginal (improper) precision of Y, the multivariate Hyvarinen
scores for known and unknown variance, and the recursive least-squares
machinery that produces one-step-ahead predictive distributions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np

from ._rls import rls_sweep_kernel
from .exceptions import (
    DegeneratePredictiveError,
    InsufficientDataError,
    InvalidInputError,
    OrderingError,
    RankDeficiencyError,
)
from .gaussian import GaussianSpec

__all__ = [
    "LinearModelSpec",
    "ImproperFlat",
    "ProperNormal",
    "RlsState",
    "PredictiveStep",
    "RlsSweep",
    "marginal_precision",
    "residual_sum_of_squares",
    "multivariate_score_known",
    "multivariate_score_unknown",
    "rls_init",
    "rls_update",
    "rls_sweep",
    "incremental_score_known",
    "incremental_score_unknown",
    "incremental_scores_known",
    "incremental_scores_unknown",
]

RANK_TOL = 1e-10
# RSS below this fraction of y'y is treated as an exact fit
EXACT_FIT_RTOL = 1e-20


def _check_full_rank(X, what="design"):
    if X.shape[1] == 0:
        return
    sv = np.linalg.svd(X, compute_uv=False)
    if sv.size < X.shape[1] or sv[-1] <= RANK_TOL * sv[0]:
        raise RankDeficiencyError(
            f"{what} of shape {X.shape} does not have full column rank"
        )


@dataclass(frozen=True)
class LinearModelSpec:
    """One candidate model: design matrix plus variance status.

    ``sigma_sq=None`` means the variance is unknown and carries the prior
    ``pi(theta, phi) ~ 1/phi``.
    """

    design: np.ndarray
    sigma_sq: Optional[float] = None
    name: str = ""

    def __post_init__(self):
        X = np.asarray(self.design, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2:
            raise InvalidInputError("design must be a 2-D array")
        if not np.all(np.isfinite(X)):
            raise InvalidInputError("design has non-finite entries")
        if X.shape[1] > X.shape[0]:
            raise RankDeficiencyError(f"rank(X) < p: {X.shape[0]} rows, {X.shape[1]} columns")
        _check_full_rank(X)
        if self.sigma_sq is not None:
            s = float(self.sigma_sq)
            if not (math.isfinite(s) and s > 0):
                raise InvalidInputError(f"known variance must be positive, got {self.sigma_sq}")
            object.__setattr__(self, "sigma_sq", s)
        X.setflags(write=False)
        object.__setattr__(self, "design", X)

    @classmethod
    def intercept_only(cls, n, sigma_sq=None, name=""):
        return cls(np.ones((n, 1)), sigma_sq, name)

    @classmethod
    def null(cls, n, sigma_sq=None, name=""):
        """The p = 0 model: Y has mean zero."""
        return cls(np.zeros((n, 0)), sigma_sq, name)

    @property
    def n(self) -> int:
        return self.design.shape[0]

    @property
    def p(self) -> int:
        return self.design.shape[1]

    @property
    def nu(self) -> int:
        return self.n - self.p

    @property
    def variance_known(self) -> bool:
        return self.sigma_sq is not None

    def head(self, m: int) -> "LinearModelSpec":
        """The same model restricted to its first ``m`` observations."""
        return replace(self, design=self.design[:m])


@dataclass(frozen=True)
class ImproperFlat:
    """Flat prior ``pi(theta) = c`` (the limit V^{-1} -> 0)."""


@dataclass(frozen=True)
class ProperNormal:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        m = np.atleast_1d(np.asarray(self.mean, dtype=float))
        V = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if V.shape != (m.size, m.size):
            raise InvalidInputError("prior covariance shape does not match mean")
        if np.abs(V - V.T).max(initial=0.0) > 1e-12 * max(np.abs(V).max(initial=0.0), 1.0):
            raise InvalidInputError("prior covariance is not symmetric")
        try:
            np.linalg.cholesky(V)
        except np.linalg.LinAlgError:
            raise InvalidInputError("prior covariance is not positive definite") from None
        object.__setattr__(self, "mean", m)
        object.__setattr__(self, "cov", V)


PriorSpec = Union[ImproperFlat, ProperNormal]


def marginal_precision(model: LinearModelSpec, prior: PriorSpec = ImproperFlat()) -> GaussianSpec:
    """Precision of the prior-predictive distribution of Y.

    For a proper ``N(m, V)`` prior this is the Woodbury form
    ``sigma^-2 {I - X (X'X + sigma^2 V^-1)^-1 X'}``; for the flat prior it is
    ``sigma^-2`` times the residual projector ``I - X (X'X)^-1 X'``, which
    has rank ``n - p``.
    """
    if not model.variance_known:
        raise InvalidInputError("marginal_precision needs a known variance")
    X, s2, n = model.design, model.sigma_sq, model.n
    if isinstance(prior, ProperNormal):
        if prior.mean.size != model.p:
            raise InvalidInputError("prior dimension does not match design")
        inner = X.T @ X + s2 * np.linalg.inv(prior.cov)
        prec = (np.eye(n) - X @ np.linalg.solve(inner, X.T)) / s2
        mean = X @ prior.mean
    elif isinstance(prior, ImproperFlat):
        prec = _residual_projector(X) / s2
        mean = np.zeros(n)
    else:
        raise InvalidInputError(f"unsupported prior {prior!r}")
    return GaussianSpec(mean, 0.5 * (prec + prec.T))


def _residual_projector(X):
    n, p = X.shape
    if p == 0:
        return np.eye(n)
    Q, _ = np.linalg.qr(X)
    return np.eye(n) - Q @ Q.T


def residual_sum_of_squares(y, X) -> float:
    y = np.asarray(y, dtype=float)
    if X.shape[1] == 0:
        return float(y @ y)
    Q, _ = np.linalg.qr(X)
    r = y - Q @ (Q.T @ y)
    return float(r @ r)


def _check_y(y, model):
    y = np.asarray(y, dtype=float).ravel()
    if y.shape[0] != model.n:
        raise InvalidInputError(f"y has length {y.shape[0]}, design has {model.n} rows")
    if not np.all(np.isfinite(y)):
        raise InvalidInputError("y has non-finite entries")
    return y


def multivariate_score_known(y, model: LinearModelSpec) -> float:
    """Hyvarinen score of the improper marginal, ``(RSS - 2 nu sigma^2) / sigma^4``."""
    if not model.variance_known:
        raise InvalidInputError("model has unknown variance")
    y = _check_y(y, model)
    if model.nu < 1:
        raise InsufficientDataError(f"need n > p, got n={model.n}, p={model.p}")
    s2 = model.sigma_sq
    rss = residual_sum_of_squares(y, model.design)
    return (rss - 2.0 * model.nu * s2) / (s2 * s2)


def multivariate_score_unknown(y, model: LinearModelSpec) -> float:
    """Score of the improper predictive ``p(y) ~ RSS^(-nu/2)``: ``-(nu - 4) / s^2``.

    Values with ``nu <= 4`` are returned as computed; whether they are
    usable for comparison is the caller's concern.
    """
    y = _check_y(y, model)
    nu = model.nu
    if nu < 1:
        raise InsufficientDataError(f"need n > p, got n={model.n}, p={model.p}")
    rss = residual_sum_of_squares(y, model.design)
    if rss <= EXACT_FIT_RTOL * float(y @ y):
        raise DegeneratePredictiveError("RSS is zero: the data are fitted exactly")
    return -(nu - 4) * nu / rss


@dataclass(frozen=True)
class RlsState:
    """Least-squares fit to the first ``i`` observations."""

    i: int
    A: np.ndarray
    theta_hat: np.ndarray
    rss: float
    nu: int

    @property
    def p(self) -> int:
        return self.theta_hat.shape[0]

    @property
    def s_sq(self) -> Optional[float]:
        return self.rss / self.nu if self.nu > 0 else None


@dataclass(frozen=True)
class PredictiveStep:
    """One-step predictive ``Y_i ~ N(eta, k_sq * sigma^2)`` and its innovation."""

    eta: float
    k_sq: float
    z: float
    s_sq: Optional[float] = None


def rls_init(y_head, model: LinearModelSpec) -> RlsState:
    """Exact fit to the first ``p`` observations."""
    p = model.p
    y_head = np.asarray(y_head, dtype=float).ravel()
    if y_head.shape[0] != p:
        raise InvalidInputError(f"need exactly p={p} initial observations, got {y_head.shape[0]}")
    if p == 0:
        return RlsState(0, np.zeros((0, 0)), np.zeros(0), 0.0, 0)
    Xp = model.design[:p]
    sv = np.linalg.svd(Xp, compute_uv=False)
    if sv[-1] <= RANK_TOL * sv[0]:
        raise OrderingError(
            "the first p rows of the design are singular; permute the rows so "
            "that the leading p x p block is invertible"
        )
    Xinv = np.linalg.inv(Xp)
    A = Xinv @ Xinv.T
    return RlsState(p, 0.5 * (A + A.T), Xinv @ y_head, 0.0, 0)


def rls_update(state: RlsState, x_i, y_i) -> tuple[RlsState, PredictiveStep]:
    """Absorb one observation via a rank-one Woodbury downdate of ``A``."""
    x = np.atleast_1d(np.asarray(x_i, dtype=float))
    y_i = float(y_i)
    if x.shape != (state.p,):
        raise InvalidInputError(f"x_i has shape {x.shape}, expected ({state.p},)")
    if not (np.all(np.isfinite(x)) and math.isfinite(y_i)):
        raise InvalidInputError("non-finite observation")
    A = state.A
    Ax = A @ x
    eta = float(x @ state.theta_hat)
    k_sq = 1.0 + float(x @ Ax)
    resid = y_i - eta
    z = resid / math.sqrt(k_sq)
    A_new = A - np.outer(Ax, Ax) / k_sq
    A_new = 0.5 * (A_new + A_new.T)
    theta = state.theta_hat + (A_new @ x) * resid
    rss = state.rss + z * z
    nu = state.nu + 1
    new = RlsState(state.i + 1, A_new, theta, rss, nu)
    return new, PredictiveStep(eta, k_sq, z, rss / nu)


def incremental_score_known(step: PredictiveStep, sigma_sq: float) -> float:
    """Hyvarinen score of ``N(eta, k^2 sigma^2)`` at the realised ``Y_i``."""
    sigma_sq = float(sigma_sq)
    if not sigma_sq > 0:
        raise InvalidInputError(f"sigma_sq must be positive, got {sigma_sq}")
    if step.k_sq < 1.0 - 1e-10:
        raise InvalidInputError(f"k_sq must be >= 1, got {step.k_sq}")
    t = step.z * step.z / sigma_sq - 2.0
    return t / (step.k_sq * sigma_sq)


def incremental_score_unknown(step: PredictiveStep, state_after: RlsState) -> float:
    """Hyvarinen score of the Student-type predictive ``(RSS_{i-1} + z^2)^(-nu_i/2)``."""
    nu, rss = state_after.nu, state_after.rss
    if nu < 1:
        raise InsufficientDataError("need nu_i >= 1")
    if rss <= 0.0:
        raise DegeneratePredictiveError("RSS_i is zero; the predictive score is undefined")
    s_sq = rss / nu
    z2 = step.z * step.z
    return ((1.0 + 4.0 / nu) * z2 - 2.0 * s_sq) / (step.k_sq * s_sq * s_sq)


def incremental_scores_known(z, k_sq, sigma_sq):
    """Vectorised :func:`incremental_score_known`."""
    z = np.asarray(z, dtype=float)
    return (z * z / sigma_sq - 2.0) / (np.asarray(k_sq) * sigma_sq)


def incremental_scores_unknown(z, k_sq, rss, nu):
    """Vectorised :func:`incremental_score_unknown`, in the RSS form."""
    z = np.asarray(z, dtype=float)
    rss = np.asarray(rss, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if np.any(rss <= 0.0):
        raise DegeneratePredictiveError("RSS_i is zero; the predictive score is undefined")
    return nu * ((4.0 + nu) * z * z - 2.0 * rss) / (np.asarray(k_sq) * rss * rss)


@dataclass(frozen=True)
class RlsSweep:
    """Predictive quantities for observations ``p+1..n`` (arrays of length n-p).

    ``index`` holds 1-based observation indices; ``rss`` and ``nu`` are the
    values *after* absorbing each observation.
    """

    p: int
    index: np.ndarray
    eta: np.ndarray
    k_sq: np.ndarray
    z: np.ndarray
    rss: np.ndarray
    nu: np.ndarray
    final: RlsState = field(repr=False)

    def incremental_scores(self, sigma_sq: Optional[float]) -> np.ndarray:
        """Per-observation scores; ``sigma_sq=None`` uses the unknown-variance form."""
        if sigma_sq is None:
            return incremental_scores_unknown(self.z, self.k_sq, self.rss, self.nu)
        return incremental_scores_known(self.z, self.k_sq, sigma_sq)


def rls_sweep(y, model: LinearModelSpec) -> RlsSweep:
    """Run the recursion over every observation after the first ``p``.

    Equivalent to chaining :func:`rls_init` and :func:`rls_update` but uses a
    compiled loop, which matters for n in the hundreds of thousands.
    """
    y = _check_y(y, model)
    p, n = model.p, model.n
    state = rls_init(y[:p], model)
    m = n - p
    if p == 0:
        eta, k_sq, z = np.zeros(m), np.ones(m), y.copy()
        A, theta = state.A, state.theta_hat
    else:
        X = np.ascontiguousarray(model.design)
        A, theta = state.A.copy(), state.theta_hat.copy()
        eta, k_sq, z = np.empty(m), np.empty(m), np.empty(m)
        rls_sweep_kernel(X, y, A, theta, p, eta, k_sq, z)
        A = 0.5 * (A + A.T)
    rss = np.cumsum(z * z)
    nu = np.arange(1, m + 1)
    final = RlsState(n, A, theta, float(rss[-1]) if m else 0.0, m)
    return RlsSweep(p, np.arange(p + 1, n + 1), eta, k_sq, z, rss, nu, final)
