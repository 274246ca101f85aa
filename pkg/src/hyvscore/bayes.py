"""Hyvarinen scores of Bayesian predictive (posterior-mixture) distributions.

Differentiating ``log q(x) = log E_prior p(x | theta)`` moves the
derivatives inside a posterior expectation, so the score of the predictive
needs only posterior moments of ``d log p(x | theta) / dx_i`` and
``d^2 log p(x | theta) / dx_i^2``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidInputError
from .scoring import LogDensityDerivatives, hyvarinen_score

__all__ = [
    "ParticlePosterior",
    "ExpFamilyEval",
    "mixture_hyv_score",
    "mixture_hyv_score_decomposed",
    "expfam_hyv_score",
]


@dataclass(frozen=True)
class ParticlePosterior:
    """Weighted particles approximating the posterior of theta given x.

    Parameters
    ----------
    weights : (m,) array
        Nonnegative, summing to one.
    d1 : (m, k) array
        ``d log p(x | theta_j) / dx_i`` for particle j, coordinate i.
    d2 : (m, k) array
        ``d^2 log p(x | theta_j) / dx_i^2``.
    """

    weights: np.ndarray
    d1: np.ndarray
    d2: np.ndarray

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        d1 = np.asarray(self.d1, dtype=float)
        d2 = np.asarray(self.d2, dtype=float)
        if w.size == 0:
            raise InvalidInputError("particle list is empty")
        if d1.ndim == 1:
            d1 = d1[:, None]
        if d2.ndim == 1:
            d2 = d2[:, None]
        if d1.shape != d2.shape or d1.shape[0] != w.size:
            raise InvalidInputError(
                f"shape mismatch: weights {w.shape}, d1 {d1.shape}, d2 {d2.shape}"
            )
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-10:
            raise InvalidInputError("weights must be nonnegative and sum to one")
        if not (np.all(np.isfinite(d1)) and np.all(np.isfinite(d2))):
            raise InvalidInputError("non-finite derivative entries")
        for name, arr in (("weights", w), ("d1", d1), ("d2", d2)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_unnormalised(cls, log_weights, d1, d2):
        """Build from log-weights known up to an additive constant."""
        lw = np.asarray(log_weights, dtype=float)
        w = np.exp(lw - lw.max())
        return cls(w / w.sum(), d1, d2)


def mixture_hyv_score(post: ParticlePosterior) -> float:
    """Score of the predictive from raw posterior moments.

    ``sum_i E[2 d2_i + 2 d1_i^2] - (E d1_i)^2``
    """
    w = post.weights
    raw = w @ (2.0 * post.d2 + 2.0 * post.d1**2)
    mean_d1 = w @ post.d1
    return float(np.sum(raw - mean_d1**2))


def mixture_hyv_score_decomposed(post: ParticlePosterior) -> tuple[float, float]:
    """Split the predictive score into (posterior-mean score, variance term).

    The first part averages the per-theta Hyvarinen scores; the second sums
    the posterior variances of ``d log p / dx_i`` and is never negative.
    """
    w = post.weights
    per_particle = np.array(
        [hyvarinen_score(LogDensityDerivatives(g, float(np.sum(h)))) for g, h in zip(post.d1, post.d2)]
    )
    mean_d1 = w @ post.d1
    var = w @ (post.d1 - mean_d1) ** 2
    return float(w @ per_particle), float(np.sum(var))


@dataclass(frozen=True)
class ExpFamilyEval:
    """Ingredients for an exponential-family model evaluated at one point x.

    The model is ``log p(x | theta) = a(x) + b(theta) + sum_j theta_j t_j(x)``.
    ``b`` is deliberately absent: the score never depends on it.

    Parameters
    ----------
    grad_a : (k,) gradient of a at x
    lap_a : Laplacian of a at x
    d : (p,) Laplacians of each t_j at x
    J : (k, p) matrix with entries d t_j / d x_i
    mu : (p,) posterior mean of theta
    Sigma : (p, p) posterior dispersion of theta
    """

    grad_a: np.ndarray
    lap_a: float
    d: np.ndarray
    J: np.ndarray
    mu: np.ndarray
    Sigma: np.ndarray

    def __post_init__(self):
        grad_a = np.atleast_1d(np.asarray(self.grad_a, dtype=float))
        d = np.atleast_1d(np.asarray(self.d, dtype=float))
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        J = np.atleast_2d(np.asarray(self.J, dtype=float))
        Sigma = np.atleast_2d(np.asarray(self.Sigma, dtype=float))
        k, p = grad_a.size, mu.size
        if J.shape != (k, p) or d.size != p or Sigma.shape != (p, p):
            raise InvalidInputError(
                f"inconsistent shapes: grad_a {grad_a.shape}, J {J.shape}, "
                f"d {d.shape}, mu {mu.shape}, Sigma {Sigma.shape}"
            )
        if np.abs(Sigma - Sigma.T).max(initial=0.0) > 1e-12 * max(np.abs(Sigma).max(initial=0.0), 1.0):
            raise InvalidInputError("Sigma is not symmetric")
        if p and np.linalg.eigvalsh(0.5 * (Sigma + Sigma.T)).min() < -1e-10 * max(np.linalg.norm(Sigma, 2), 1.0):
            raise InvalidInputError("Sigma is not positive semi-definite")
        for name, arr in (("grad_a", grad_a), ("d", d), ("mu", mu), ("J", J), ("Sigma", Sigma)):
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "lap_a", float(self.lap_a))


def expfam_hyv_score(e: ExpFamilyEval) -> float:
    """``2 lap a + 2 d'mu + ||grad a + J mu||^2 + 2 tr(J Sigma J')``."""
    g = e.grad_a + e.J @ e.mu
    return float(
        2.0 * e.lap_a
        + 2.0 * e.d @ e.mu
        + g @ g
        + 2.0 * np.trace(e.J @ e.Sigma @ e.J.T)
    )
