"""Special functions needed by the closed-form secrecy analysis.

Provides the upper incomplete gamma function, its regularized form, and
the exponential integral Ei on the negative axis.  Each is computed by a
series or a continued fraction depending on the argument region, with the
crossover at ``x = m + 1`` for the gamma pair and ``x = -1`` for Ei.
Every evaluation carries convergence metadata; an iteration that fails to
converge raises :class:`SpecFunError` rather than returning a silently
wrong value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "SpecFunError",
    "SpecFunResult",
    "upper_incomplete_gamma",
    "regularized_gamma_q",
    "regularized_gamma_p",
    "exp_integral_ei",
    "gamma_series_p",
    "gamma_contfrac_q",
]

#: Iteration budget shared by all series/continued-fraction loops.
MAX_TERMS = 600

#: Relative increment below which an iteration is declared converged.
_TOL = 1e-15

_TINY = 1e-300
_EULER_GAMMA = 0.5772156649015328606


class SpecFunError(ArithmeticError):
    """Raised when an iteration exhausts its budget without converging."""


@dataclass(frozen=True)
class SpecFunResult:
    """Value of one special-function evaluation plus convergence metadata."""

    value: float
    converged: bool
    terms_used: int

    def unwrap(self, what: str) -> float:
        if not self.converged:
            raise SpecFunError(
                f"{what} did not converge within {self.terms_used} terms"
            )
        return self.value


def gamma_series_p(m: float, x: float) -> SpecFunResult:
    """Regularized lower incomplete gamma P(m, x) by its power series.

    P(m, x) = x^m e^-x / Gamma(m+1) * sum_n x^n / ((m+1)...(m+n)).
    Converges fastest for x < m + 1.
    """
    if x == 0.0:
        return SpecFunResult(0.0, True, 0)
    ap = m
    term = 1.0 / m
    total = term
    for n in range(1, MAX_TERMS + 1):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _TOL:
            log_pref = m * math.log(x) - x - math.lgamma(m)
            return SpecFunResult(total * math.exp(log_pref), True, n)
    return SpecFunResult(math.nan, False, MAX_TERMS)


def gamma_contfrac_q(m: float, x: float) -> SpecFunResult:
    """Regularized upper incomplete gamma Q(m, x) by Lentz's continued fraction.

    Converges fastest for x >= m + 1.
    """
    b = x + 1.0 - m
    c = 1.0 / _TINY
    d = 1.0 / b if b != 0.0 else 1.0 / _TINY
    h = d
    for n in range(1, MAX_TERMS + 1):
        an = -n * (n - m)
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
        if abs(delta - 1.0) < _TOL:
            log_pref = m * math.log(x) - x - math.lgamma(m)
            return SpecFunResult(h * math.exp(log_pref), True, n)
    return SpecFunResult(math.nan, False, MAX_TERMS)


def _check_gamma_args(m: float, x: float):
    if not (m > 0.0 and math.isfinite(m)):
        raise ValueError(f"shape m must be finite and > 0, got {m!r}")
    if not (x >= 0.0 and math.isfinite(x)):
        raise ValueError(f"argument x must be finite and >= 0, got {x!r}")


def regularized_gamma_p(m: float, x: float) -> float:
    """Regularized lower incomplete gamma P(m, x) in [0, 1]."""
    _check_gamma_args(m, x)
    if x < m + 1.0:
        return gamma_series_p(m, x).unwrap("gamma series")
    return 1.0 - gamma_contfrac_q(m, x).unwrap("gamma continued fraction")


def regularized_gamma_q(m: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(m, x) = Gamma(m, x) / Gamma(m)."""
    _check_gamma_args(m, x)
    if x < m + 1.0:
        return 1.0 - gamma_series_p(m, x).unwrap("gamma series")
    return gamma_contfrac_q(m, x).unwrap("gamma continued fraction")


def upper_incomplete_gamma(m: float, x: float) -> float:
    """Non-normalized upper incomplete gamma Gamma(m, x)."""
    return regularized_gamma_q(m, x) * math.gamma(m)


def _ei_series(x: float) -> SpecFunResult:
    """Ei via the convergent series gamma + ln|x| + sum x^k / (k k!)."""
    total = _EULER_GAMMA + math.log(abs(x))
    term = 1.0
    for k in range(1, MAX_TERMS + 1):
        term *= x / k
        contrib = term / k
        total += contrib
        if abs(contrib) < abs(total) * _TOL + 1e-308:
            return SpecFunResult(total, True, k)
    return SpecFunResult(math.nan, False, MAX_TERMS)


def _e1_contfrac(z: float) -> SpecFunResult:
    """E1(z) for z > 0 by the modified Lentz continued fraction."""
    b = z + 1.0
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for n in range(1, MAX_TERMS + 1):
        an = -(n * n)
        b += 2.0
        d = 1.0 / (an * d + b)
        c = b + an / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < _TOL:
            return SpecFunResult(h * math.exp(-z), True, n)
    return SpecFunResult(math.nan, False, MAX_TERMS)


def exp_integral_ei(x: float) -> float:
    """Exponential integral Ei(x) for strictly negative x.

    Uses the convergent series for -1 < x < 0 and the continued fraction
    of E1(-x) otherwise (Ei(x) = -E1(-x) for x < 0).  Arguments below
    roughly -700 underflow harmlessly to 0.
    """
    if not (x < 0.0):
        raise ValueError(f"exp_integral_ei requires x < 0, got {x!r}")
    if x < -700.0:
        return 0.0
    if x > -1.0:
        return _ei_series(x).unwrap("Ei series")
    return -_e1_contfrac(-x).unwrap("E1 continued fraction")
