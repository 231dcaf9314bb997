"""Scalar special functions underpinning the distance-inference routines.

Self-contained implementations of the modified Bessel function I0, the
noncentral chi-square CDF with 2 degrees of freedom, and a bisection-based
inverter for monotone CDFs. Everything here is deterministic pure-float
arithmetic; the accuracy contracts are stated per function.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

__all__ = [
    "DomainError",
    "BracketError",
    "ConvergenceError",
    "bessel_i0",
    "bessel_i0_scaled",
    "noncentral_chisq2_cdf",
    "invert_monotone",
]


class DomainError(ValueError):
    """An argument lies outside a function's mathematical domain."""


class BracketError(ValueError):
    """The target value is not bracketed by f(lo) and f(hi)."""


class ConvergenceError(RuntimeError):
    """A numerical routine failed to meet its accuracy contract."""


# exp(-x) underflows near x = 745; stay clear of it on the fast paths
_EXP_LIMIT = 700.0
# stop series when the unaccounted Poisson weight drops below this
_POISSON_TAIL = 1e-14
# [0, 1] results may stray this far outside before we call it a failure
_PROB_SLACK = 1e-9
# power series / asymptotic crossover for I0
_I0_SERIES_LIMIT = 50.0


def _require_nonnegative(name: str, value: float) -> float:
    value = float(value)
    if math.isnan(value) or math.isinf(value) or value < 0.0:
        raise DomainError(f"{name} must be a finite nonnegative number, got {value!r}")
    return value


def _i0_power_series(x: float) -> float:
    # I0(x) = sum_k (x^2/4)^k / (k!)^2; all terms positive, no cancellation
    q = 0.25 * x * x
    term = 1.0
    total = 1.0
    k = 0
    while term > total * 1e-17:
        k += 1
        term *= q / (k * k)
        total += term
        if k > 1000:
            raise ConvergenceError(f"I0 power series stalled at x={x!r}")
    return total


def bessel_i0(x: float) -> float:
    """Modified Bessel function of the first kind, order zero.

    Power series for x <= 50; exp(x) times the scaled asymptotic form above.
    Relative error <= 1e-12 over the representable range. Overflows (like
    exp does) near x = 713; use bessel_i0_scaled when that matters.
    """
    x = _require_nonnegative("x", x)
    if x <= _I0_SERIES_LIMIT:
        return _i0_power_series(x)
    scaled = bessel_i0_scaled(x)
    if x <= _EXP_LIMIT:
        return math.exp(x) * scaled
    return math.exp(x + math.log(scaled))


def bessel_i0_scaled(x: float) -> float:
    """exp(-x) * I0(x), safe for arbitrarily large x.

    For x > 50 uses the asymptotic series
    (2 pi x)^{-1/2} * sum_k a_k / x^k with a_k = ((2k-1)!!)^2 / (k! 8^k),
    truncated at the smallest term; below that, exp(-x) times the power
    series. Relative error <= 1e-12.
    """
    x = _require_nonnegative("x", x)
    if x <= _I0_SERIES_LIMIT:
        return math.exp(-x) * _i0_power_series(x)
    term = 1.0
    total = 1.0
    for k in range(1, 60):
        nxt = term * (2 * k - 1) ** 2 / (8.0 * k * x)
        if nxt >= term:
            break  # asymptotic: stop once terms grow
        term = nxt
        total += term
        if term < total * 1e-17:
            break
    return total / math.sqrt(2.0 * math.pi * x)


def _poisson_logpmf(k: int, mean: float) -> float:
    # Near k ~ mean the naive form -mean + k log(mean) - lgamma(k+1) loses
    # ~ eps * k log(mean) absolutely to cancellation; expanding lgamma by
    # Stirling keeps the log accurate to ~1e-13 for any magnitude.
    if k == 0:
        return -mean
    if k < 30:
        return -mean + k * math.log(mean) - math.lgamma(k + 1.0)
    core = k * math.log1p((mean - k) / k) + (k - mean)
    corr = 1.0 / (12.0 * k) - 1.0 / (360.0 * k ** 3) + 1.0 / (1260.0 * k ** 5)
    return core - 0.5 * math.log(2.0 * math.pi * k) - corr


def _as_probability(p: float, context: str) -> float:
    if p < 0.0:
        if p < -_PROB_SLACK:
            raise ConvergenceError(f"{context} produced {p!r}, outside [0, 1]")
        return 0.0
    if p > 1.0:
        if p > 1.0 + _PROB_SLACK:
            raise ConvergenceError(f"{context} produced {p!r}, outside [0, 1]")
        return 1.0
    return p


def _cdf_series_direct(lam: float, h: float) -> float:
    # Poisson(lam) mixture of central chi-square CDFs, both recurrences
    # started from k = 0; valid while exp(-lam) and exp(-h) are normal.
    w = math.exp(-lam)
    cumw = w
    t = math.exp(-h)
    q = t  # Poisson(h) CDF at k, i.e. upper tail of P(chi2_{2(k+1)} <= 2h)
    g = 1.0 - q
    acc = w * g
    k = 0
    while 1.0 - cumw > _POISSON_TAIL:
        k += 1
        w *= lam / k
        cumw += w
        t *= h / k
        q += t
        g = 1.0 - q
        if g <= 0.0:
            break  # remaining factors vanish at float precision
        acc += w * g
        if k > 100000:
            raise ConvergenceError(f"mixture series stalled at lam={lam!r}, h={h!r}")
    return acc


def _cdf_series_pivoted(lam: float, h: float) -> float:
    # Large-argument path: sweep Poisson(lam) weights over the +/- 9 sigma
    # window around the mean, initialized in log space, and stream the
    # Poisson(h) CDF the same way. Tail masses outside the windows are
    # < 2e-18 each (Bernstein), so classification shortcuts are exact to
    # well under the 1e-12 absolute contract.
    if lam > _EXP_LIMIT:
        k_lo = max(0, int(lam - 9.0 * math.sqrt(lam) - 10.0))
        w = math.exp(_poisson_logpmf(k_lo, lam))
    else:
        k_lo = 0
        w = math.exp(-lam)
    k_hi = int(lam + 9.0 * math.sqrt(lam) + 30.0) + 10

    g_lo_edge = h - 9.0 * math.sqrt(h) - 10.0  # below: central CDF ~ 1
    g_hi_edge = h + 9.0 * math.sqrt(h) + 10.0  # above: central CDF ~ 0
    if k_lo > g_hi_edge:
        return 0.0
    if k_hi < g_lo_edge:
        return 1.0

    j = max(0, int(g_lo_edge) - int(math.sqrt(h)) - 10)
    q = 0.0
    acc = 0.0
    cumw = 0.0
    for k in range(k_lo, k_hi + 1):
        while j <= k:
            q += math.exp(_poisson_logpmf(j, h))  # underflows harmlessly far out
            j += 1
        g = 1.0 - q
        if g <= 0.0:
            break
        acc += w * g
        cumw += w
        if 1.0 - cumw <= _POISSON_TAIL:
            break
        w *= lam / (k + 1)
    return acc


def noncentral_chisq2_cdf(x: float, nu: float) -> float:
    """CDF of the noncentral chi-square law with 2 df and noncentrality nu.

    Evaluates the Poisson mixture
        sum_k e^{-lam} lam^k / k! * P(chi2_{2(k+1)} <= x),  lam = nu / 2,
    truncating once the unaccounted Poisson weight falls below 1e-14.
    Recurrences run in ordinary arithmetic while lam and x/2 stay below 700
    and switch to a log-space sweep around the Poisson mode beyond that.
    Absolute error <= 1e-12; results are clamped to [0, 1] (straying more
    than 1e-9 outside raises ConvergenceError).
    """
    x = _require_nonnegative("x", x)
    nu = _require_nonnegative("nu", nu)
    if x == 0.0:
        return 0.0
    lam = 0.5 * nu
    h = 0.5 * x
    if lam <= _EXP_LIMIT and h <= _EXP_LIMIT:
        p = _cdf_series_direct(lam, h)
    else:
        p = _cdf_series_pivoted(lam, h)
    return _as_probability(p, f"noncentral_chisq2_cdf({x!r}, {nu!r})")


def _cdf_grid_x(xs: np.ndarray, nu: float) -> np.ndarray:
    """noncentral_chisq2_cdf at many x values for one noncentrality.

    Vector twin of the direct series; falls back to the scalar routine
    per element whenever lam or some x/2 exceeds the no-underflow window.
    """
    xs = np.asarray(xs, dtype=float)
    if xs.size == 0:
        return np.zeros(0)
    if not np.all(np.isfinite(xs)) or xs.min() < 0.0:
        raise DomainError("x values must be finite and nonnegative")
    nu = _require_nonnegative("nu", nu)
    lam = 0.5 * nu
    h = 0.5 * xs
    if lam > _EXP_LIMIT or h.max() > _EXP_LIMIT:
        return np.array([noncentral_chisq2_cdf(float(x), nu) for x in xs])

    w = math.exp(-lam)
    cumw = w
    t = np.exp(-h)
    q = t.copy()
    g = 1.0 - q
    acc = w * g
    k = 0
    while 1.0 - cumw > _POISSON_TAIL:
        k += 1
        w *= lam / k
        cumw += w
        t *= h
        t /= k
        q += t
        np.subtract(1.0, q, out=g)
        np.maximum(g, 0.0, out=g)
        if not g.any():
            break
        acc += w * g
        if k > 100000:
            raise ConvergenceError(f"vector mixture series stalled at nu={nu!r}")
    bad = (acc < -_PROB_SLACK) | (acc > 1.0 + _PROB_SLACK)
    if bad.any():
        raise ConvergenceError("vector mixture series left [0, 1]")
    np.clip(acc, 0.0, 1.0, out=acc)
    acc[xs == 0.0] = 0.0
    return acc


def _cdf_grid_nu(x: float, nus: np.ndarray) -> np.ndarray:
    """noncentral_chisq2_cdf at one x for many noncentralities."""
    nus = np.asarray(nus, dtype=float)
    if nus.size == 0:
        return np.zeros(0)
    if not np.all(np.isfinite(nus)) or nus.min() < 0.0:
        raise DomainError("nu values must be finite and nonnegative")
    x = _require_nonnegative("x", x)
    if x == 0.0:
        return np.zeros(nus.shape)
    h = 0.5 * x
    lam = 0.5 * nus
    if h > _EXP_LIMIT or lam.max() > _EXP_LIMIT:
        return np.array([noncentral_chisq2_cdf(x, float(v)) for v in nus])

    w = np.exp(-lam)
    cumw = w.copy()
    t = math.exp(-h)
    q = t
    g = 1.0 - q
    acc = w * g
    k = 0
    while g > 0.0 and cumw.min() < 1.0 - _POISSON_TAIL:
        k += 1
        w *= lam
        w /= k
        cumw += w
        t *= h / k
        q += t
        g = max(1.0 - q, 0.0)
        acc += w * g
        if k > 100000:
            raise ConvergenceError(f"vector mixture series stalled at x={x!r}")
    bad = (acc < -_PROB_SLACK) | (acc > 1.0 + _PROB_SLACK)
    if bad.any():
        raise ConvergenceError("vector mixture series left [0, 1]")
    np.clip(acc, 0.0, 1.0, out=acc)
    return acc


def invert_monotone(
    f: Callable[[float], float],
    target: float,
    lo: float,
    hi: float,
    tol: float = 1e-10,
) -> float:
    """Solve f(x) = target for a nondecreasing f on [lo, hi] by bisection.

    Raises BracketError unless f(lo) <= target <= f(hi). Stops when the
    bracket width drops below tol (or float resolution, whichever comes
    first) and returns the bracket midpoint.
    """
    lo = float(lo)
    hi = float(hi)
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo >= hi:
        raise DomainError(f"need finite lo < hi, got [{lo!r}, {hi!r}]")
    if not (math.isfinite(target) and float(tol) > 0.0):
        raise DomainError(f"target must be finite and tol positive, got {target!r}, {tol!r}")
    flo = f(lo)
    fhi = f(hi)
    if not (flo <= target <= fhi):
        raise BracketError(
            f"target {target!r} not bracketed: f({lo!r})={flo!r}, f({hi!r})={fhi!r}"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break  # bracket already at float resolution
        if f(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
