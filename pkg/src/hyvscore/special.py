"""Regularised incomplete gamma function and the chi-square tail.

Series expansion for x < a + 1, Lentz continued fraction otherwise.
"""
import math

from .exceptions import InvalidInputError

__all__ = ["gammainc_lower", "gammainc_upper", "chi2_sf"]

_EPS = 1e-15
_TINY = 1e-300
_MAXIT = 10_000


def _series(a, x):
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_MAXIT):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _continued_fraction(a, x):
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAXIT):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def _check(a, x):
    if not (a > 0 and math.isfinite(a)):
        raise InvalidInputError(f"shape must be positive, got {a}")
    if not (x >= 0 and not math.isnan(x)):
        raise InvalidInputError(f"argument must be nonnegative, got {x}")


def gammainc_lower(a: float, x: float) -> float:
    """P(a, x) = gamma(a, x) / Gamma(a)."""
    _check(a, x)
    if x == 0:
        return 0.0
    if math.isinf(x):
        return 1.0
    if x < a + 1.0:
        return _series(a, x)
    return 1.0 - _continued_fraction(a, x)


def gammainc_upper(a: float, x: float) -> float:
    """Q(a, x) = 1 - P(a, x), computed directly in the tail."""
    _check(a, x)
    if x == 0:
        return 1.0
    if math.isinf(x):
        return 0.0
    if x < a + 1.0:
        return 1.0 - _series(a, x)
    return _continued_fraction(a, x)


def chi2_sf(x: float, df: float) -> float:
    """Upper tail probability of a chi-square variable with ``df`` degrees of freedom."""
    if x <= 0:
        return 1.0
    return gammainc_upper(0.5 * df, 0.5 * x)
