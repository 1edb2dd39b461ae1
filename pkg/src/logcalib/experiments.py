"""Comparative studies: variance-ratio surfaces and the mean-vector experiment."""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import asdict, dataclass, field, fields
from typing import Optional, Sequence

import numpy as np

from logcalib import __version__
from logcalib.calibrate import (SCALE_RTOL, THRESHOLD_ATOL, PrivacyBudget,
                                gaussian_scale, scale_for_budget)
from logcalib.errors import ConvergenceError, DomainError
from logcalib.mech import linear_sensitivity_bound
from logcalib.noise import NoiseFamily, gaussian_family, subbotin_family
from logcalib.optimize import DEFAULT_GRID, optimize_p
from logcalib.postprocess import (gaussian_threshold, james_stein, monte_carlo_threshold,
                                  soft_threshold)

DEFAULT_SEED = 1729
SEED_ENV = "LOGCALIB_SEED"
MECHANISMS = ("Gauss", "Sub(r)", "Gauss-t", "Sub(r)-t", "Gauss-JS")
CSV_HEADER = ("epsilon", "m", "mechanism", "mean_l2_error", "stderr", "r", "scale", "seed")


def default_seed() -> int:
    """The fixed default seed, overridable through ``LOGCALIB_SEED``."""
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw.strip() == "":
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError:
        raise DomainError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


# -- Variance ratios --------------------------------------------------------

@dataclass(frozen=True)
class RatioRow:
    epsilon: float
    delta: float
    rho: float
    v: float
    feasible: bool = True
    note: str = ""


@dataclass
class VarianceRatioTable:
    family_a: str
    family_b: str
    rows: list[RatioRow]
    # (delta, epsilon) points where v crosses 1 along each delta row.
    crossings: list[tuple[float, float]] = field(default_factory=list)


def _unit_scale(family, eps, delta):
    return scale_for_budget(family, PrivacyBudget(eps, delta), 1.0).scale


def variance_ratio(family_a: NoiseFamily, family_b: NoiseFamily,
                   epsilon: float, delta: float) -> tuple[float, float]:
    """Return ``(ρ, v)``: the scale ratio and variance ratio of two mechanisms."""
    rho = _unit_scale(family_a, epsilon, delta) / _unit_scale(family_b, epsilon, delta)
    return rho, rho * rho * family_a.variance / family_b.variance


def variance_ratio_table(pair: tuple[NoiseFamily, NoiseFamily],
                         epsilon_grid: Sequence[float], delta_grid: Sequence[float],
                         crossing_rtol: float = 1e-6) -> VarianceRatioTable:
    """Tabulate ``ρ_{a,b}`` and ``v_{a,b}`` over an (ε, δ) grid.

    Along each δ row, every sign change of ``v - 1`` between adjacent ε grid
    points is refined by bisection in ``log ε`` and reported in ``crossings``.
    Points where either family cannot be calibrated are kept with
    ``feasible=False`` and NaN values.
    """
    fa, fb = pair
    eps_sorted = sorted(float(e) for e in epsilon_grid)
    rows = []
    crossings = []
    for delta in delta_grid:
        row_vals = []
        for eps in eps_sorted:
            try:
                rho, v = variance_ratio(fa, fb, eps, delta)
                rows.append(RatioRow(eps, delta, rho, v))
                row_vals.append((eps, v))
            except (DomainError, ConvergenceError) as err:
                rows.append(RatioRow(eps, delta, math.nan, math.nan, False, str(err)))
        for (e0, v0), (e1, v1) in zip(row_vals[:-1], row_vals[1:]):
            if (v0 - 1.0) * (v1 - 1.0) < 0:
                crossings.append((delta, _crossing(fa, fb, delta, e0, e1, v0, crossing_rtol)))
    return VarianceRatioTable(fa.name, fb.name, rows, crossings)


def _crossing(fa, fb, delta, lo, hi, v_lo, rtol):
    below = v_lo < 1.0
    if lo <= 0:
        lo = min(hi * 1e-6, 1e-12)
    while hi / lo - 1.0 > rtol:
        mid = math.sqrt(lo * hi)
        _, v = variance_ratio(fa, fb, mid, delta)
        if (v < 1.0) == below:
            lo = mid
        else:
            hi = mid
    return math.sqrt(lo * hi)


# -- Mean-vector experiment -------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    epsilon_list: tuple = (0.01, 0.1, 1.0)
    delta: float = 1e-4
    m_list: tuple = (10, 100, 500, 1000, 2000)
    n: int = 500
    databases_per_cell: int = 100
    seed: int = field(default_factory=default_seed)
    grid: tuple = DEFAULT_GRID
    mc_trials: int = 300
    # Forces every mechanism to this noise scale; used for pipeline checks.
    scale_override: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "epsilon_list", tuple(float(e) for e in self.epsilon_list))
        object.__setattr__(self, "m_list", tuple(int(m) for m in self.m_list))
        object.__setattr__(self, "grid", tuple(float(r) for r in self.grid))
        if not self.epsilon_list or any(e <= 0 for e in self.epsilon_list):
            raise DomainError("epsilon_list must be non-empty with positive entries")
        if not 0.0 < self.delta < 1.0:
            raise DomainError(f"delta must lie in (0, 1), got {self.delta!r}")
        if not self.m_list or any(m < 3 for m in self.m_list):
            raise DomainError("m_list entries must be >= 3 (James-Stein needs m > 2)")
        for name in ("n", "databases_per_cell", "mc_trials"):
            if getattr(self, name) < 1:
                raise DomainError(f"{name} must be a positive integer")
        if not self.grid or any(r < 1 for r in self.grid):
            raise DomainError("grid must be non-empty with entries >= 1")
        if self.scale_override is not None and self.scale_override < 0:
            raise DomainError("scale_override must be >= 0")

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise DomainError(f"unknown experiment config keys: {', '.join(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class TrialRecord:
    epsilon: float
    m: int
    mechanism_label: str
    l2_error: float
    r_used: float
    scale_used: float
    seed: int
    database: int


@dataclass(frozen=True)
class SummaryRow:
    epsilon: float
    m: int
    mechanism: str
    mean_l2_error: float
    stderr: float
    r: float
    scale: float
    seed: int


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: list[TrialRecord]
    summary: list[SummaryRow]

    def mean_error(self, epsilon: float, m: int, mechanism: str) -> SummaryRow:
        for row in self.summary:
            if row.epsilon == epsilon and row.m == m and row.mechanism == mechanism:
                return row
        raise KeyError((epsilon, m, mechanism))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in self.summary:
            writer.writerow([_fmt(row.epsilon), row.m, row.mechanism, _fmt(row.mean_l2_error),
                             _fmt(row.stderr), _fmt(row.r), _fmt(row.scale), row.seed])
        return buf.getvalue()

    def metadata(self) -> dict:
        cfg = asdict(self.config)
        return {
            "tool": "logcalib",
            "version": __version__,
            "config": cfg,
            "error_metric": "l2 norm of (mechanism output - true query), not divided by m",
            "tolerances": {"scale_rtol": SCALE_RTOL, "threshold_atol": THRESHOLD_ATOL},
            "mechanisms": list(MECHANISMS),
        }


def _fmt(x):
    return format(float(x), ".15g")


def _cell_rng(seed, *key):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def _cell_scales(config, eps, m):
    budget = PrivacyBudget(eps, config.delta)
    nu = 1.0 / config.n
    outcome = optimize_p(budget, m, nu, 1.0, config.grid)
    sigma = gaussian_scale(budget, linear_sensitivity_bound(m, nu, 1.0, 2.0)).scale
    r, s = outcome.r_star, outcome.scale_star
    if config.scale_override is not None:
        sigma = s = config.scale_override
    return r, s, sigma


def mean_vector_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Run the five mechanisms on random mean-vector queries.

    For each (ε, m) cell a center ``v ~ N(0, I_m)`` is drawn once; each of
    the ``databases_per_cell`` databases holds ``n`` records uniform on
    ``v + [-1/2, 1/2]^m`` and the query is the record mean. Every database
    gets its own generator derived from ``(seed, cell, database)``, so the
    output does not depend on evaluation order.
    """
    gauss = gaussian_family()
    records = []
    summary = []
    for ie, eps in enumerate(config.epsilon_list):
        for im, m in enumerate(config.m_list):
            r, s, sigma = _cell_scales(config, eps, m)
            sub = subbotin_family(r)
            cell_rng = _cell_rng(config.seed, ie, im, 0)
            center = cell_rng.standard_normal(m)
            t_sub = monte_carlo_threshold(sub, s, m, cell_rng, config.mc_trials)
            t_gauss = gaussian_threshold(sigma, m)
            errors = {label: [] for label in MECHANISMS}
            for k in range(config.databases_per_cell):
                rng = _cell_rng(config.seed, ie, im, k + 1)
                db = center + (rng.random((config.n, m)) - 0.5)
                truth = db.mean(axis=0)
                y_gauss = truth + sigma * gauss.sample(m, rng)
                y_sub = truth + s * sub.sample(m, rng)
                outputs = {
                    "Gauss": y_gauss,
                    "Sub(r)": y_sub,
                    "Gauss-t": soft_threshold(y_gauss, t_gauss),
                    "Sub(r)-t": soft_threshold(y_sub, t_sub),
                    "Gauss-JS": james_stein(y_gauss, sigma),
                }
                for label in MECHANISMS:
                    err = float(np.linalg.norm(outputs[label] - truth))
                    errors[label].append(err)
                    uses_sub = label.startswith("Sub")
                    records.append(TrialRecord(
                        epsilon=eps, m=m, mechanism_label=label, l2_error=err,
                        r_used=r if uses_sub else 2.0,
                        scale_used=s if uses_sub else sigma,
                        seed=config.seed, database=k))
            for label in MECHANISMS:
                vals = np.asarray(errors[label])
                stderr = float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else 0.0
                uses_sub = label.startswith("Sub")
                summary.append(SummaryRow(
                    epsilon=eps, m=m, mechanism=label, mean_l2_error=float(vals.mean()),
                    stderr=stderr, r=r if uses_sub else 2.0,
                    scale=s if uses_sub else sigma, seed=config.seed))
    return ExperimentResult(config=config, records=records, summary=summary)
