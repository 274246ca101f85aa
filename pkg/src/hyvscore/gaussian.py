"""Closed-form Hyvarinen scores and discrepancies for normal distributions.

Multivariate normals are parametrised by mean and *precision*; a singular
precision is allowed and represents an improper (flat in some directions)
distribution, which is exactly what improper-prior marginals produce.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidInputError

__all__ = [
    "GaussianSpec",
    "UniGaussianSpec",
    "hyv_score_mvn",
    "hyv_disc_mvn",
    "hyv_score_uni",
    "hyv_disc_uni",
    "kl_uni",
]

ASYMMETRY_TOL = 1e-12
EIGEN_FLOOR = 1e-10


@dataclass(frozen=True)
class GaussianSpec:
    """Multivariate normal with mean ``mean`` and precision ``precision``.

    The precision must be symmetric PSD but may be singular.
    """

    mean: np.ndarray
    precision: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        prec = np.atleast_2d(np.asarray(self.precision, dtype=float))
        k = mean.shape[0]
        if mean.ndim != 1 or prec.shape != (k, k):
            raise InvalidInputError(
                f"mean has shape {mean.shape}, precision has shape {prec.shape}"
            )
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(prec))):
            raise InvalidInputError("non-finite entries in GaussianSpec")
        scale = max(np.abs(prec).max(initial=0.0), 1.0)
        if np.abs(prec - prec.T).max(initial=0.0) > ASYMMETRY_TOL * scale:
            raise InvalidInputError("precision matrix is not symmetric")
        prec = 0.5 * (prec + prec.T)
        if k and np.linalg.eigvalsh(prec).min() < -EIGEN_FLOOR * np.linalg.norm(prec, 2):
            raise InvalidInputError("precision matrix is not positive semi-definite")
        mean.setflags(write=False)
        prec.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "precision", prec)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def is_positive_definite(self) -> bool:
        try:
            np.linalg.cholesky(self.precision)
        except np.linalg.LinAlgError:
            return False
        return True


@dataclass(frozen=True)
class UniGaussianSpec:
    mean: float
    variance: float

    def __post_init__(self):
        mean, var = float(self.mean), float(self.variance)
        if not (math.isfinite(mean) and math.isfinite(var)):
            raise InvalidInputError("non-finite mean or variance")
        if var <= 0:
            raise InvalidInputError(f"variance must be positive, got {var}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "variance", var)

    def as_multivariate(self) -> GaussianSpec:
        return GaussianSpec(np.array([self.mean]), np.array([[1.0 / self.variance]]))


def hyv_score_mvn(x, q: GaussianSpec) -> float:
    """Hyvarinen score ``||Phi (x - mu)||^2 - 2 tr Phi`` of a normal forecast."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != q.mean.shape:
        raise InvalidInputError(f"x has shape {x.shape}, expected {q.mean.shape}")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("x has non-finite entries")
    g = q.precision @ (x - q.mean)
    return float(g @ g) - 2.0 * float(np.trace(q.precision))


def hyv_disc_mvn(p: GaussianSpec, q: GaussianSpec) -> float:
    """Expected Hyvarinen score excess of forecasting ``q`` when ``p`` is true.

    ``p`` needs a strictly positive-definite precision; ``q`` may be anything
    valid.
    """
    if p.dim != q.dim:
        raise InvalidInputError(f"dimension mismatch: {p.dim} vs {q.dim}")
    try:
        chol = np.linalg.cholesky(p.precision)
    except np.linalg.LinAlgError:
        raise InvalidInputError("p.precision must be strictly positive definite") from None
    # tr(Phi_P^{-1} Phi_Q^2) = ||L^{-1} Phi_Q||_F^2 with Phi_P = L L^T
    m = np.linalg.solve(chol, q.precision)
    g = q.precision @ (p.mean - q.mean)
    value = (
        float(np.trace(p.precision))
        - 2.0 * float(np.trace(q.precision))
        + float(np.sum(m * m))
        + float(g @ g)
    )
    return value


def hyv_score_uni(x: float, q: UniGaussianSpec) -> float:
    """Univariate Hyvarinen score ``((x - mu)^2 - 2 sigma^2) / sigma^4``."""
    x = float(x)
    if not math.isfinite(x):
        raise InvalidInputError("x must be finite")
    v = q.variance
    return ((x - q.mean) ** 2 - 2.0 * v) / (v * v)


def hyv_disc_uni(p: UniGaussianSpec, q: UniGaussianSpec) -> float:
    vp, vq = p.variance, q.variance
    return ((vp - vq) ** 2 / vp + (p.mean - q.mean) ** 2) / (vq * vq)


def kl_uni(p: UniGaussianSpec, q: UniGaussianSpec) -> float:
    """Kullback-Leibler divergence KL(p || q) (not twice it)."""
    # (r - 1) - log r, written to avoid cancellation for r near 1
    d = (p.variance - q.variance) / q.variance
    value = 0.5 * ((d - math.log1p(d)) + (p.mean - q.mean) ** 2 / q.variance)
    return max(value, 0.0)
