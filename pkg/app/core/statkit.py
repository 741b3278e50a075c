"""Quantile functions used by the concentration bounds.

Each quantile is found by bracketing the root of ``cdf(x) - p`` around the
library inverse and polishing it with Brent's method, so the returned value
is pinned to the CDF evaluated through the regularized incomplete gamma and
beta functions.
"""
from __future__ import annotations
from functools import lru_cache
from typing import Callable
from scipy import optimize, special
from app.core.errors import InsufficientSamplesError
from app.models.estimates import Probability

NORMAL_ATOL = 1e-10
QUANTILE_RTOL = 1e-9
_BRENT_RTOL = 1e-13


def normal_cdf(x: float) -> float:
    return float(special.ndtr(x))


def chi2_cdf(k: int, x: float) -> float:
    if x <= 0.0:
        return 0.0
    return float(special.gammainc(0.5 * k, 0.5 * x))


def f_cdf(d1: int, d2: int, x: float) -> float:
    if x <= 0.0:
        return 0.0
    return float(special.betainc(0.5 * d1, 0.5 * d2, d1 * x / (d1 * x + d2)))


def _check_dof(name: str, value: int) -> int:
    if int(value) != value or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def _invert_cdf(
    cdf: Callable[[float], float],
    p: float,
    guess: float,
    lower_limit: float | None,
) -> float:
    """Root of cdf(x) = p, bracketed outward from guess."""
    width = 1e-6 * max(1.0, abs(guess))
    lo, hi = guess - width, guess + width
    if lower_limit is not None:
        lo = max(lo, lower_limit)
    while cdf(hi) < p:
        width *= 2.0
        hi = guess + width
    width = 1e-6 * max(1.0, abs(guess))
    while cdf(lo) > p:
        width *= 2.0
        lo = guess - width
        if lower_limit is not None and lo <= lower_limit:
            lo = lower_limit
            break
    if cdf(lo) == p:
        return lo
    return float(
        optimize.brentq(lambda x: cdf(x) - p, lo, hi, xtol=1e-300, rtol=_BRENT_RTOL, maxiter=500)
    )


@lru_cache(maxsize=4096)
def _normal_inv_cdf(p: float) -> float:
    guess = float(special.ndtri(p))
    if p == 0.5:
        return 0.0
    return _invert_cdf(normal_cdf, p, guess, None)


@lru_cache(maxsize=4096)
def _chi2_quantile(k: int, p: float) -> float:
    guess = 2.0 * float(special.gammaincinv(0.5 * k, p))
    return _invert_cdf(lambda x: chi2_cdf(k, x), p, guess, 0.0)


@lru_cache(maxsize=4096)
def _f_quantile(d1: int, d2: int, p: float) -> float:
    if d1 == d2 and p == 0.5:
        return 1.0
    x = float(special.betaincinv(0.5 * d1, 0.5 * d2, p))
    guess = d2 * x / (d1 * (1.0 - x)) if x < 1.0 else 1.0
    return _invert_cdf(lambda q: f_cdf(d1, d2, q), p, guess, 0.0)


def normal_inv_cdf(p: Probability | float) -> float:
    """Inverse CDF of the standard normal distribution."""
    return _normal_inv_cdf(Probability.coerce(p).value)


def chi2_quantile(k: int, p: Probability | float) -> float:
    """p-th quantile of the chi-squared distribution with k degrees of freedom."""
    k = _check_dof("k", k)
    return _chi2_quantile(k, Probability.coerce(p).value)


def f_quantile(d1: int, d2: int, p: Probability | float) -> float:
    """p-th quantile of the F distribution with (d1, d2) degrees of freedom."""
    d1 = _check_dof("d1", d1)
    d2 = _check_dof("d2", d2)
    return _f_quantile(d1, d2, Probability.coerce(p).value)


def hotelling_t2_quantile(n: int, m: int, p: Probability | float) -> float:
    """p-th quantile of Hotelling's T-squared distribution T^2_{n,m}.

    Evaluated through T^2_{n,m}(p) = n m / (m - n + 1) * F_{n, m-n+1}(p).
    """
    n = _check_dof("n", n)
    m = _check_dof("m", m)
    if m < n:
        raise InsufficientSamplesError(
            f"insufficient samples for dimension: Hotelling T^2 needs m >= n, got n={n}, m={m}"
        )
    d2 = m - n + 1
    return n * m / d2 * f_quantile(n, d2, p)
