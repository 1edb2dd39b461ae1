"""Vector mechanisms with iid Subbotin_p coordinates.

Adding ``s (X_1, ..., X_m)`` with iid Subbotin_p coordinates to a query whose
sensitivity is measured in the p-norm is calibrated with the one-dimensional
Subbotin_p scale at the same sensitivity. The dimension enters only through
the sensitivity itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from logcalib.calibrate import PrivacyBudget, SensitivitySpec, scale_for_budget
from logcalib.errors import DomainError
from logcalib.noise import NoiseFamily, subbotin_family


@dataclass(frozen=True)
class VectorMechanism:
    family: NoiseFamily
    scale: float
    sensitivity: SensitivitySpec

    def __post_init__(self):
        if self.family.index is None:
            raise DomainError(f"vector mechanisms need a Subbotin family, got {self.family.name}")
        if self.family.index != self.sensitivity.norm_order:
            raise DomainError(
                f"Subbotin index {self.family.index:g} does not match sensitivity "
                f"norm order {self.sensitivity.norm_order:g}")
        if math.isnan(self.scale) or self.scale < 0:
            raise DomainError(f"scale must be >= 0, got {self.scale!r}")

    @property
    def p(self) -> float:
        return self.family.index


def calibrate_vector(p: float, budget: PrivacyBudget, delta_q_p: float,
                     dimension: int = 1, **kwargs) -> VectorMechanism:
    """Calibrate an iid Subbotin_p mechanism for p-norm sensitivity ``delta_q_p``."""
    family = subbotin_family(p)
    result = scale_for_budget(family, budget, delta_q_p, **kwargs)
    spec = SensitivitySpec(delta_q=delta_q_p, norm_order=family.index, dimension=dimension)
    return VectorMechanism(family=family, scale=result.scale, sensitivity=spec)


def apply(mechanism: VectorMechanism, query_value, rng: np.random.Generator) -> np.ndarray:
    """Return ``query_value + scale * X`` with iid standard Subbotin_p ``X``."""
    q = np.asarray(query_value, dtype=float)
    noise = mechanism.family.sample(q.size, rng).reshape(q.shape)
    return q + mechanism.scale * noise


def p_norm(v, p: float) -> float:
    if p < 1:
        raise DomainError(f"norm order must be >= 1, got {p!r}")
    a = np.abs(np.asarray(v, dtype=float)).ravel()
    if a.size == 0:
        return 0.0
    top = a.max()
    if top == 0:
        return 0.0
    # Scale by the max entry so large p does not overflow.
    return float(top * np.sum((a / top) ** p) ** (1.0 / p))


def linear_sensitivity_bound(m: int, nu_abs: float, range_inf_diameter: float,
                             p: float) -> float:
    """p-norm sensitivity bound ``m^(1/p) |ν(n)| diam_∞`` for linear queries.

    Tight when the per-record image is an l∞ ball, as for the mean of records
    drawn from a unit cube.
    """
    if m < 1:
        raise DomainError(f"query dimension must be positive, got {m!r}")
    if nu_abs < 0 or range_inf_diameter < 0:
        raise DomainError("nu_abs and range_inf_diameter must be >= 0")
    if p < 1:
        raise DomainError(f"norm order must be >= 1, got {p!r}")
    return m ** (1.0 / p) * nu_abs * range_inf_diameter
