"""Privacy criterion for additive log-concave noise and its inversion in scale.

For noise ``s X`` with ``X ~ exp(-psi)`` symmetric and log-concave, the
mechanism ``q(d) + s X`` at sensitivity ``Δ`` achieves exactly

    δ(ε, Δ, s) = F((Δ - t) / s) - e^ε F(-t / s),

where ``t`` is the last point below ``a s`` at which the log-likelihood ratio
``psi(z/s) - psi((z - Δ)/s)`` is still at most ``ε``. :func:`privacy_profile`
evaluates this tight δ and :func:`scale_for_budget` finds the smallest scale
whose profile meets a budget, relying on the profile being decreasing in
``s``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from logcalib.errors import ConvergenceError, DomainError
from logcalib.noise import INF, NoiseFamily, gaussian_family
from logcalib.specfun import std_normal_cdf

# Defaults pinned by the acceptance tests; pass overrides per call.
THRESHOLD_ATOL = 1e-12
SCALE_RTOL = 1e-9
MAX_DOUBLINGS = 200
ORACLE_TOL = 1e-10


@dataclass(frozen=True)
class PrivacyBudget:
    """An (ε, δ) pair with ``ε >= 0`` and ``0 <= δ < 1``."""

    epsilon: float
    delta: float

    def __post_init__(self):
        if math.isnan(self.epsilon) or self.epsilon < 0:
            raise DomainError(f"epsilon must be >= 0, got {self.epsilon!r}")
        if math.isnan(self.delta) or not 0.0 <= self.delta < 1.0:
            raise DomainError(f"delta must lie in [0, 1), got {self.delta!r}")


@dataclass(frozen=True)
class SensitivitySpec:
    """Global sensitivity ``delta_q`` measured in the ``norm_order``-norm."""

    delta_q: float
    norm_order: float = 1.0
    dimension: int = 1

    def __post_init__(self):
        if math.isnan(self.delta_q) or self.delta_q < 0:
            raise DomainError(f"sensitivity must be >= 0, got {self.delta_q!r}")
        if math.isnan(self.norm_order) or self.norm_order < 1:
            raise DomainError(f"norm order must be >= 1, got {self.norm_order!r}")
        if self.dimension < 1:
            raise DomainError(f"dimension must be a positive integer, got {self.dimension!r}")


@dataclass(frozen=True)
class CalibrationResult:
    scale: float
    threshold: float
    achieved_delta: float
    converged: bool
    iterations: int
    method: str = "bisection"


def solve_threshold(family: NoiseFamily, epsilon: float, delta_q: float, scale: float,
                    atol: float = THRESHOLD_ATOL) -> float:
    """Locate ``t`` by bracketed bisection, ignoring any analytic shortcut.

    On ``(Δ/2, a s)`` the log-likelihood ratio is non-decreasing in ``z`` and
    equals 0 at ``Δ/2``, so bisection on the sign of ``ratio - ε`` converges
    to the supremum. The search runs in standardized units ``u = z / s`` so
    the support edge is represented exactly.
    """
    a = family.support_radius
    if delta_q == 0:
        return a * scale
    if math.isinf(a) and family.mlr_limit(delta_q, scale) <= epsilon:
        return INF
    if math.isfinite(a) and delta_q >= 2.0 * a * scale:
        # Disjoint supports: every z inside the support qualifies.
        return a * scale

    psi = family.psi
    d = delta_q / scale

    def excess(u):
        return psi(u) - psi(u - d) - epsilon

    lo = 0.5 * d
    if math.isfinite(a):
        hi = math.nextafter(a, -INF)
        if not excess(hi) > 0:
            return a * scale
    else:
        hi = max(d, 1.0)
        for _ in range(2000):
            if excess(hi) > 0:
                break
            lo, hi = hi, 2.0 * hi
        else:
            raise ConvergenceError(
                f"could not bracket the threshold for {family.name} "
                f"(eps={epsilon!r}, delta_q={delta_q!r}, scale={scale!r})")

    tol = atol * max(1.0, delta_q, scale) / scale
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if excess(mid) > 0:
            hi = mid
        else:
            lo = mid
    # t >= Δ/2 always; the clamp only undoes rounding in u * s
    return max(lo * scale, 0.5 * delta_q)


def threshold_t(family: NoiseFamily, epsilon: float, delta_q: float, scale: float,
                atol: float = THRESHOLD_ATOL) -> float:
    """Supremum of ``{z < a s : psi(z/s) - psi((z - Δ)/s) <= ε}``.

    Uses the family's analytic threshold when it has one, otherwise
    :func:`solve_threshold`. Returns ``inf`` when the log-likelihood ratio of
    an unbounded-support family never exceeds ``ε``.
    """
    if scale <= 0:
        raise DomainError(f"scale must be > 0, got {scale!r}")
    if epsilon < 0:
        raise DomainError(f"epsilon must be >= 0, got {epsilon!r}")
    if family.threshold is not None and delta_q > 0:
        return family.threshold(epsilon, delta_q, scale)
    return solve_threshold(family, epsilon, delta_q, scale, atol)


def _hockey(family, epsilon, delta_q, scale, t):
    a = family.support_radius
    if math.isinf(t):
        return 0.0
    if math.isfinite(a) and t >= a * scale:
        value = family.cdf(delta_q / scale - a)
    else:
        # F((Δ-t)/s) - e^ε F(-t/s), regrouped so large scales do not cancel
        lo, hi = (t - delta_q) / scale, t / scale
        tail = family.sf(hi)
        value = family.mass_between(lo, hi) - (math.expm1(epsilon) * tail if tail > 0 else 0.0)
    return min(max(value, 0.0), 1.0)


def privacy_profile(family: NoiseFamily, epsilon: float, delta_q: float, scale: float,
                    atol: float = THRESHOLD_ATOL) -> float:
    """Smallest δ for which ``q(d) + scale * X`` is (ε, δ)-DP at sensitivity ``delta_q``."""
    if delta_q < 0:
        raise DomainError(f"sensitivity must be >= 0, got {delta_q!r}")
    if delta_q == 0:
        return 0.0
    t = threshold_t(family, epsilon, delta_q, scale, atol)
    return _hockey(family, epsilon, delta_q, scale, t)


def oracle_delta(family: NoiseFamily, epsilon: float, delta_q: float, scale: float,
                 tol: float = ORACLE_TOL) -> float:
    """Tight δ by direct quadrature of ``∫ max(0, f_shifted - e^ε f)``.

    This is a verification route: it integrates the two densities directly
    (in standardized units ``u = x / s``) and never touches the distribution
    functions or the threshold solver.
    """
    from scipy import integrate, optimize

    if scale <= 0:
        raise DomainError(f"scale must be > 0, got {scale!r}")
    if delta_q == 0:
        return 0.0
    shift = delta_q / scale
    a = family.support_radius
    log_e = epsilon

    def shifted(u):
        return family.density(u - shift)

    def base(u):
        return family.density(u)

    def integrand(u):
        return max(0.0, shifted(u) - math.exp(log_e) * base(u))

    # The positive part lives to the right of the midpoint of the two modes.
    start = 0.5 * shift
    stop = a + shift if math.isfinite(a) else INF
    breaks = [start]

    def gap(u):
        return (-family.psi(u - shift)) - (log_e - family.psi(u))

    if math.isfinite(a):
        right = math.nextafter(a, -INF)
        if right > start and gap(right) > 0 and gap(start) <= 0:
            breaks.append(optimize.brentq(gap, start, right, xtol=1e-14, rtol=1e-14))
        breaks += [a]
    else:
        hi = max(start + 1.0, 2.0 * start)
        for _ in range(200):
            if gap(hi) > 0:
                break
            hi *= 2.0
        if gap(hi) > 0 and gap(start) <= 0:
            breaks.append(optimize.brentq(gap, start, hi, xtol=1e-14, rtol=1e-14))
        breaks += [shift, shift + 1.0, shift + 4.0, shift + 12.0]

    breaks = sorted(b for b in set(breaks) if b >= start and b < stop)
    total = 0.0
    edges = breaks + [stop]
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi <= lo:
            continue
        val, _ = integrate.quad(integrand, lo, hi, epsabs=tol * 1e-2, epsrel=tol,
                                limit=500)
        total += val
    return min(max(total, 0.0), 1.0)


def _delta_zero_scale(family, eps, delta_q, rtol):
    # Pure ε-DP needs a bounded likelihood ratio on an unbounded support.
    if math.isfinite(family.support_radius):
        raise DomainError(
            f"{family.name} has finite support and cannot achieve delta = 0 "
            "for a positive sensitivity")
    if eps == 0 or math.isinf(family.mlr_limit(delta_q, 1.0)):
        raise DomainError(
            f"{family.name} cannot achieve delta = 0 at epsilon = {eps!r}; "
            "its log-likelihood ratio is unbounded or epsilon is zero")
    hi = delta_q / eps
    iterations = 0
    while family.mlr_limit(delta_q, hi) > eps:
        hi *= 2.0
        iterations += 1
    lo = hi
    while family.mlr_limit(delta_q, lo) <= eps and iterations < 4 * MAX_DOUBLINGS:
        lo *= 0.5
        iterations += 1
    while hi / lo - 1.0 > rtol * 1e-3:
        mid = math.sqrt(lo * hi)
        if family.mlr_limit(delta_q, mid) <= eps:
            hi = mid
        else:
            lo = mid
        iterations += 1
    return hi, iterations


def scale_for_budget(family: NoiseFamily, budget: PrivacyBudget, delta_q: float, *,
                     method: str = "auto", rtol: float = SCALE_RTOL,
                     threshold_atol: float = THRESHOLD_ATOL,
                     max_doublings: int = MAX_DOUBLINGS) -> CalibrationResult:
    """Smallest noise scale meeting ``budget`` at sensitivity ``delta_q``.

    Args:
      family: Standard noise family.
      budget: Target (ε, δ); (0, 0) is rejected.
      delta_q: Global sensitivity, ``>= 0``. Zero sensitivity needs no noise.
      method: ``"auto"`` uses a closed form when the family has one and
        bisection otherwise; ``"bisection"`` forces the numeric search;
        ``"closed"`` requires a closed form.
      rtol: Relative width of the final scale bracket.
      threshold_atol: Absolute tolerance for the threshold solver.
      max_doublings: Bracket expansions allowed before giving up.

    Returns:
      A :class:`CalibrationResult` whose ``scale`` is the feasible end of the
      final bracket, with ``achieved_delta`` recomputed there.

    Raises:
      DomainError: Invalid inputs, or δ = 0 for a family that cannot reach it.
      ConvergenceError: The bracket could not be established.
    """
    eps, delta = budget.epsilon, budget.delta
    if eps == 0 and delta == 0:
        raise DomainError("budget (epsilon, delta) = (0, 0) admits no finite scale")
    if math.isnan(delta_q) or delta_q < 0:
        raise DomainError(f"sensitivity must be >= 0, got {delta_q!r}")
    if method not in ("auto", "bisection", "closed"):
        raise DomainError(f"unknown calibration method {method!r}")

    def profile(s):
        return privacy_profile(family, eps, delta_q, s, threshold_atol)

    def finish(s, iterations, how):
        t = threshold_t(family, eps, delta_q, s, threshold_atol)
        return CalibrationResult(scale=s, threshold=t, achieved_delta=profile(s),
                                 converged=True, iterations=iterations, method=how)

    if delta_q == 0:
        return CalibrationResult(scale=0.0, threshold=INF, achieved_delta=0.0,
                                 converged=True, iterations=0, method="trivial")

    if method == "closed" or (method == "auto" and family.closed_form_scale is not None):
        if family.closed_form_scale is None:
            raise DomainError(f"{family.name} has no closed-form scale")
        return finish(family.closed_form_scale(eps, delta, delta_q), 0, "closed")

    if delta == 0:
        s, iterations = _delta_zero_scale(family, eps, delta_q, rtol)
        return finish(s, iterations, "mlr-limit")

    iterations = 0
    hi = delta_q * (1.0 + 1.0 / max(eps, 1e-6))
    while profile(hi) > delta:
        iterations += 1
        if iterations > max_doublings:
            raise ConvergenceError(
                f"no feasible scale for {family.name} within {max_doublings} doublings "
                f"(eps={eps!r}, delta={delta!r}, delta_q={delta_q!r})",
                CalibrationResult(scale=hi, threshold=INF, achieved_delta=profile(hi),
                                  converged=False, iterations=iterations))
        hi *= 2.0
    lo = 0.5 * hi
    halvings = 0
    while profile(lo) <= delta:
        hi = lo
        lo *= 0.5
        halvings += 1
        iterations += 1
        if halvings > 4 * max_doublings:
            raise ConvergenceError(
                f"profile of {family.name} stays below delta={delta!r} as the scale "
                "shrinks; no positive minimum",
                CalibrationResult(scale=hi, threshold=INF, achieved_delta=profile(hi),
                                  converged=False, iterations=iterations))
    while hi / lo - 1.0 > rtol:
        mid = math.sqrt(lo * hi)
        if mid <= lo or mid >= hi:
            break
        if profile(mid) <= delta:
            hi = mid
        else:
            lo = mid
        iterations += 1
    return finish(hi, iterations, "bisection")


def gaussian_scale(budget: PrivacyBudget, delta_q: float, **kwargs) -> CalibrationResult:
    """Minimal Gaussian σ for ``budget``; δ must be positive."""
    if budget.delta == 0:
        raise DomainError(
            "the Gaussian mechanism cannot achieve delta = 0: its log-likelihood "
            "ratio is unbounded, so the scale diverges as delta -> 0")
    if delta_q <= 0:
        raise DomainError(f"Gaussian calibration needs sensitivity > 0, got {delta_q!r}")
    return scale_for_budget(gaussian_family(), budget, delta_q, **kwargs)


def gaussian_condition(epsilon: float, delta_q: float, sigma: float) -> float:
    """Left side of the analytic Gaussian condition.

    ``Φ(Δ/2σ - εσ/Δ) - e^ε Φ(-Δ/2σ - εσ/Δ)``, which equals the tight δ.
    """
    u = delta_q / (2.0 * sigma)
    v = epsilon * sigma / delta_q
    return std_normal_cdf(u - v) - math.exp(epsilon) * std_normal_cdf(-u - v)
