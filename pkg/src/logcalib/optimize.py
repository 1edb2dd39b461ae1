"""Choice of the Subbotin index that minimizes mean squared error."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from logcalib.calibrate import PrivacyBudget, scale_for_budget
from logcalib.errors import ConvergenceError, DomainError
from logcalib.mech import linear_sensitivity_bound
from logcalib.noise import subbotin_family, subbotin_variance

DEFAULT_GRID = tuple(float(r) for r in np.arange(1.0, 14.0 + 0.25, 0.5))


@dataclass(frozen=True)
class GridPoint:
    r: float
    scale: float
    mse: float


@dataclass(frozen=True)
class OptimizationOutcome:
    r_star: float
    scale_star: float
    mse_star: float
    grid_evaluations: list[GridPoint]
    failures: list[tuple[float, str]] = field(default_factory=list)


def mse_of(r: float, scale: float) -> float:
    """Per-coordinate MSE ``scale^2 Var(X_r)`` of the Subbotin_r mechanism."""
    return scale * scale * subbotin_variance(r)


def optimize_p(budget: PrivacyBudget, m: int, nu_abs: float, range_inf_diameter: float,
               grid=DEFAULT_GRID, **calibration_kwargs) -> OptimizationOutcome:
    """Grid search over Subbotin indices for a linear query of dimension ``m``.

    Each grid index ``r`` is calibrated at its own r-norm sensitivity
    ``m^(1/r) |ν| diam``. Ties go to the smaller index. Grid points whose
    calibration fails are recorded in ``failures`` and skipped.
    """
    grid = [float(r) for r in grid]
    if not grid:
        raise DomainError("grid must not be empty")
    if any(r < 1 for r in grid):
        raise DomainError("grid entries must all be >= 1")

    evaluations, failures = [], []
    for r in grid:
        delta_r = linear_sensitivity_bound(m, nu_abs, range_inf_diameter, r)
        try:
            res = scale_for_budget(subbotin_family(r), budget, delta_r, **calibration_kwargs)
        except (ConvergenceError, DomainError) as err:
            failures.append((r, str(err)))
            continue
        evaluations.append(GridPoint(r=r, scale=res.scale, mse=mse_of(r, res.scale)))
    if not evaluations:
        raise ConvergenceError(
            "calibration failed at every grid point: "
            + "; ".join(f"r={r:g}: {msg}" for r, msg in failures))
    best = min(evaluations, key=lambda g: (g.mse, g.r))
    return OptimizationOutcome(r_star=best.r, scale_star=best.scale, mse_star=best.mse,
                               grid_evaluations=evaluations, failures=failures)
