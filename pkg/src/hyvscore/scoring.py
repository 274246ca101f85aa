"""Generic scoring rules.

The Hyvarinen rule only ever sees derivatives of ``log q``; a density known
up to a positive constant therefore scores identically to its normalised
version, and improper densities are scored without special handling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidInputError

__all__ = [
    "LogDensityDerivatives",
    "hyvarinen_score",
    "log_score",
    "homogeneity_check",
]


@dataclass(frozen=True)
class LogDensityDerivatives:
    """Gradient and Laplacian of ``log q`` evaluated at one point."""

    grad_log_q: np.ndarray
    laplacian_log_q: float

    def __post_init__(self):
        grad = np.atleast_1d(np.asarray(self.grad_log_q, dtype=float))
        if grad.ndim != 1:
            raise InvalidInputError("grad_log_q must be a vector")
        if not np.all(np.isfinite(grad)):
            raise InvalidInputError("grad_log_q has non-finite entries")
        lap = float(self.laplacian_log_q)
        if not math.isfinite(lap):
            raise InvalidInputError("laplacian_log_q is not finite")
        grad.setflags(write=False)
        object.__setattr__(self, "grad_log_q", grad)
        object.__setattr__(self, "laplacian_log_q", lap)


def hyvarinen_score(d: LogDensityDerivatives) -> float:
    """Return ``2 * lap log q + ||grad log q||^2``."""
    grad = d.grad_log_q
    value = 2.0 * d.laplacian_log_q + float(grad @ grad)
    if not math.isfinite(value):
        raise InvalidInputError("score overflowed")
    return value


def log_score(log_q_at_x: float) -> float:
    """Logarithmic score, ``-log q(x)``."""
    v = float(log_q_at_x)
    if not math.isfinite(v):
        raise InvalidInputError("log density must be finite")
    return -v


def homogeneity_check(d: LogDensityDerivatives, c: float) -> bool:
    """Check that rescaling ``q`` by ``c > 0`` leaves the score unchanged.

    ``log(c q) = log c + log q`` has the same gradient and Laplacian as
    ``log q``, so the rescaled density hands the rule identical inputs.
    """
    c = float(c)
    if not (math.isfinite(c) and c > 0):
        raise InvalidInputError(f"scale factor must be positive, got {c}")
    scaled = LogDensityDerivatives(d.grad_log_q.copy(), d.laplacian_log_q)
    return hyvarinen_score(scaled) == hyvarinen_score(d)
