"""De-noising post-processors for vector mechanism output."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from logcalib.errors import DomainError
from logcalib.noise import NoiseFamily


@dataclass(frozen=True)
class ThresholdSpec:
    value: float
    source: str = "analytic-gaussian"

    def __post_init__(self):
        if math.isnan(self.value) or self.value < 0:
            raise DomainError(f"threshold must be >= 0, got {self.value!r}")
        if self.source not in ("analytic-gaussian", "monte-carlo", "fixed"):
            raise DomainError(f"unknown threshold source {self.source!r}")


def james_stein(y, scale: float) -> np.ndarray:
    """Positive-part James-Stein shrinkage ``max(0, 1 - (m-2) s^2 / ||y||^2) * y``."""
    y = np.asarray(y, dtype=float)
    m = y.size
    if m <= 2:
        raise DomainError(f"James-Stein needs dimension m > 2, got {m}")
    # hypot rescales internally, so tiny vectors do not underflow to norm 0
    norm = math.hypot(*y.ravel())
    if norm == 0:
        raise DomainError("James-Stein is undefined for the zero vector")
    ratio = scale / norm
    factor = max(0.0, 1.0 - (m - 2) * ratio * ratio)
    return factor * y


def soft_threshold(y, t) -> np.ndarray:
    """Coordinatewise ``sign(y) max(0, |y| - t)``."""
    value = t.value if isinstance(t, ThresholdSpec) else float(t)
    if value < 0:
        raise DomainError(f"threshold must be >= 0, got {value!r}")
    y = np.asarray(y, dtype=float)
    return np.sign(y) * np.maximum(0.0, np.abs(y) - value)


def gaussian_threshold(scale: float, m: int) -> ThresholdSpec:
    """``scale * sqrt(2 log m)``, the usual bound on the expected Gaussian maximum."""
    if m < 2:
        raise DomainError(f"gaussian_threshold needs m >= 2, got {m!r}")
    return ThresholdSpec(scale * math.sqrt(2.0 * math.log(m)), "analytic-gaussian")


def monte_carlo_threshold(family: NoiseFamily, scale: float, m: int,
                          rng: np.random.Generator, trials: int = 300) -> ThresholdSpec:
    """``scale`` times the average over ``trials`` of the largest of ``m`` standard variates.

    Uses the signed maximum, not the maximum absolute value.
    """
    if m < 1 or trials < 1:
        raise DomainError("m and trials must be positive")
    draws = family.sample(m * trials, rng).reshape(trials, m)
    return ThresholdSpec(scale * float(draws.max(axis=1).mean()), "monte-carlo")
