"""Posterior and confidence-distribution summaries for a two-point distance.

Two points are observed as y = theta + noise with iid N(0, sigma^2)
coordinates in the plane of their displacement; delta = |theta| is the
distance of interest. Writing G2 for the noncentral chi-square CDF with
2 degrees of freedom:

    bayes_cdf:  B(delta | y) = G2(delta^2/sigma^2, |y|^2/sigma^2)
                (flat prior on theta, posterior probability of {|theta| <= delta})
    cd_cdf:     C(delta | y) = 1 - G2(|y|^2/sigma^2, delta^2/sigma^2)
                (p-value curve of the tests H0: distance <= delta)

Both are nondecreasing in delta with C >= B pointwise; the gap is
exp(-(delta^2 + |y|^2) / (2 sigma^2)) I0(delta |y| / sigma^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal, NamedTuple

import numpy as np

from .specfun import (
    ConvergenceError,
    DomainError,
    invert_monotone,
    noncentral_chisq2_cdf,
)

__all__ = [
    "Observation",
    "Method",
    "MedianResult",
    "LevelInterval",
    "CurveTable",
    "bayes_cdf",
    "cd_cdf",
    "confidence_curve",
    "credibility_curve",
    "median",
    "level_interval",
    "collision_confidence",
    "noncollision_pvalue",
    "tabulate_curves",
]

Method = Literal["bayes", "cd"]

ROOT_TOL = 1e-10


@dataclass(frozen=True)
class Observation:
    """Measured displacement between the two objects, with known noise scale.

    y1, y2 are the displacement coordinates in the plane relevant to the
    distance; sigma is the per-coordinate noise standard deviation. Only
    the norm enters any downstream quantity.
    """

    y1: float
    y2: float
    sigma: float

    def __post_init__(self) -> None:
        for name in ("y1", "y2", "sigma"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise DomainError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)
        if self.sigma <= 0.0:
            raise DomainError(f"sigma must be positive, got {self.sigma!r}")

    @classmethod
    def from_norm(cls, norm: float, sigma: float) -> "Observation":
        norm = float(norm)
        if not math.isfinite(norm) or norm < 0.0:
            raise DomainError(f"norm must be finite and nonnegative, got {norm!r}")
        return cls(norm, 0.0, sigma)

    @property
    def norm(self) -> float:
        return math.hypot(self.y1, self.y2)


def _check_delta(delta: float) -> float:
    delta = float(delta)
    if not math.isfinite(delta) or delta < 0.0:
        raise DomainError(f"delta must be finite and nonnegative, got {delta!r}")
    return delta


def bayes_cdf(obs: Observation, delta: float) -> float:
    """Posterior probability that the distance is at most delta."""
    delta = _check_delta(delta)
    s2 = obs.sigma * obs.sigma
    return noncentral_chisq2_cdf(delta * delta / s2, obs.norm ** 2 / s2)


def cd_cdf(obs: Observation, delta: float) -> float:
    """Confidence-distribution CDF at delta: one minus the p-value of
    the test that the distance exceeds delta."""
    delta = _check_delta(delta)
    s2 = obs.sigma * obs.sigma
    return 1.0 - noncentral_chisq2_cdf(obs.norm ** 2 / s2, delta * delta / s2)


def confidence_curve(obs: Observation, delta: float) -> float:
    """|1 - 2 C(delta|y)|: the smallest confidence level whose equal-tailed
    interval excludes delta."""
    return abs(1.0 - 2.0 * cd_cdf(obs, delta))


def credibility_curve(obs: Observation, delta: float) -> float:
    """Bayesian analogue of confidence_curve, built from the posterior CDF."""
    return abs(1.0 - 2.0 * bayes_cdf(obs, delta))


def _cdf_callable(obs: Observation, method: Method) -> Callable[[float], float]:
    if method == "bayes":
        return lambda d: bayes_cdf(obs, d)
    if method == "cd":
        return lambda d: cd_cdf(obs, d)
    raise DomainError(f"method must be 'bayes' or 'cd', got {method!r}")


def _quantile(obs: Observation, method: Method, p: float) -> float:
    # p < 1 guaranteed by callers; the zero atom can cover p by itself
    cdf = _cdf_callable(obs, method)
    if cdf(0.0) >= p:
        return 0.0
    hi = obs.norm + 10.0 * obs.sigma
    for _ in range(200):
        if cdf(hi) >= p:
            break
        hi *= 2.0
    else:
        raise ConvergenceError(f"no upper bracket for {method} quantile {p!r}")
    return invert_monotone(cdf, p, 0.0, hi, tol=ROOT_TOL)


class MedianResult(NamedTuple):
    value: float
    at_boundary: bool


class LevelInterval(NamedTuple):
    lo: float
    hi: float
    lo_clipped: bool


def median(obs: Observation, method: Method) -> MedianResult:
    """Median of the chosen distribution over distances.

    The confidence distribution can place probability >= 1/2 on delta = 0
    (it has an atom at zero of size C(0|y) = exp(-|y|^2 / (2 sigma^2)));
    in that case the median sits at the boundary and the flag is set.
    """
    cdf = _cdf_callable(obs, method)
    if cdf(0.0) >= 0.5:
        return MedianResult(0.0, True)
    return MedianResult(_quantile(obs, method, 0.5), False)


def level_interval(obs: Observation, method: Method, level: float) -> LevelInterval:
    """Equal-tailed interval for the distance at the given level.

    Endpoints are the (1 -/+ level)/2 quantiles; when the lower tail mass
    at delta = 0 already exceeds (1 - level)/2 the lower endpoint is
    clipped to 0 and flagged.
    """
    level = float(level)
    if not (0.0 < level < 1.0):
        raise DomainError(f"level must lie strictly between 0 and 1, got {level!r}")
    p_lo = 0.5 * (1.0 - level)
    p_hi = 0.5 * (1.0 + level)
    cdf = _cdf_callable(obs, method)
    if cdf(0.0) >= p_lo:
        lo, clipped = 0.0, True
    else:
        lo, clipped = _quantile(obs, method, p_lo), False
    hi = _quantile(obs, method, p_hi)
    return LevelInterval(lo, hi, clipped)


def collision_confidence(obs: Observation, radius: float) -> float:
    """Confidence assigned to the distance lying within the given radius."""
    radius = float(radius)
    if not math.isfinite(radius) or radius <= 0.0:
        raise DomainError(f"radius must be finite and positive, got {radius!r}")
    return cd_cdf(obs, radius)


def noncollision_pvalue(obs: Observation, radius: float) -> float:
    """p-value of the hypothesis that the distance is at most the radius."""
    return 1.0 - collision_confidence(obs, radius)


@dataclass
class CurveTable:
    """Both cumulative curves with their derived confidence/credibility
    columns, evaluated on a common delta grid."""

    delta: np.ndarray
    b: np.ndarray
    c: np.ndarray
    cc: np.ndarray
    cred: np.ndarray

    def __post_init__(self) -> None:
        arrays = {}
        for name in ("delta", "b", "c", "cc", "cred"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.ndim != 1 or arr.size == 0 or not np.all(np.isfinite(arr)):
                raise DomainError(f"{name} must be a nonempty finite 1-d array")
            arrays[name] = arr
            setattr(self, name, arr)
        n = arrays["delta"].size
        if any(a.size != n for a in arrays.values()):
            raise DomainError("curve columns must share the grid length")
        if arrays["delta"][0] < 0.0 or np.any(np.diff(arrays["delta"]) <= 0.0):
            raise DomainError("delta grid must be nonnegative and strictly increasing")
        for name in ("b", "c"):
            col = arrays[name]
            if col.min() < -1e-12 or col.max() > 1.0 + 1e-12:
                raise DomainError(f"{name} must stay within [0, 1]")
            if np.any(np.diff(col) < -1e-9):
                raise DomainError(f"{name} must be nondecreasing along the grid")
        # derived columns must match their definitions (loose enough to
        # survive a 10-significant-digit round trip through CSV)
        if np.max(np.abs(arrays["cc"] - np.abs(1.0 - 2.0 * arrays["c"]))) > 1e-8:
            raise DomainError("cc column is inconsistent with the c column")
        if np.max(np.abs(arrays["cred"] - np.abs(1.0 - 2.0 * arrays["b"]))) > 1e-8:
            raise DomainError("cred column is inconsistent with the b column")


def tabulate_curves(obs: Observation, grid) -> CurveTable:
    """Evaluate both CDFs and both centered curves over a delta grid."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise DomainError("grid must be a nonempty 1-d array")
    if not np.all(np.isfinite(grid)) or grid[0] < 0.0:
        raise DomainError("grid values must be finite and nonnegative")
    if np.any(np.diff(grid) <= 0.0):
        raise DomainError("grid must be strictly increasing")
    b = np.array([bayes_cdf(obs, d) for d in grid])
    c = np.array([cd_cdf(obs, d) for d in grid])
    return CurveTable(
        delta=grid,
        b=b,
        c=c,
        cc=np.abs(1.0 - 2.0 * c),
        cred=np.abs(1.0 - 2.0 * b),
    )
