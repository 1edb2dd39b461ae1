"""Symmetric log-concave noise families.

A :class:`NoiseFamily` bundles everything calibration needs about the
standard (unit-scale) noise variable ``X``: the negative log-density ``psi``,
distribution and survival functions, quantile, variance, support radius and
the limit of the log-likelihood ratio of a shifted copy. Built-in members are
the Subbotin (exponential power) family, which includes Laplace at ``r = 1``
and Gaussian at ``r = 2``, the Logistic distribution, and a Laplace
distribution truncated to ``(-a, a)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from logcalib import specfun
from logcalib.errors import DomainError

INF = math.inf


@dataclass(frozen=True)
class NoiseFamily:
    """A standard symmetric log-concave noise distribution.

    Attributes:
      name: Family label as accepted by :func:`parse_family`.
      psi: Negative log-density; ``+inf`` outside the support.
      cdf: Distribution function.
      sf: Survival function ``1 - cdf(x)``, evaluated without cancellation.
      quantile: Inverse of ``cdf`` on ``(0, 1)``.
      variance: Variance of the standard member.
      support_radius: ``a`` such that the support is ``(-a, a)``; may be inf.
      mlr_limit: ``(delta_q, scale) -> lim psi(z/s) - psi((z - delta_q)/s)``.
      sampler: ``(rng, count) -> ndarray`` of iid standard variates.
      index: Subbotin index ``r`` for Subbotin members, else ``None``.
      threshold: Optional analytic ``(eps, delta_q, scale) -> t``.
      closed_form_scale: Optional analytic ``(eps, delta, delta_q) -> s``.
      central: Optional ``x -> P(0 < X < x)`` for ``x >= 0``, accurate for
        small ``x`` where ``cdf(x) - 1/2`` would cancel.
    """

    name: str
    psi: Callable[[float], float]
    cdf: Callable[[float], float]
    sf: Callable[[float], float]
    quantile: Callable[[float], float]
    variance: float
    support_radius: float
    mlr_limit: Callable[[float, float], float]
    sampler: Optional[Callable[[np.random.Generator, int], np.ndarray]] = field(
        default=None, repr=False)
    index: Optional[float] = None
    threshold: Optional[Callable[[float, float, float], float]] = field(
        default=None, repr=False)
    closed_form_scale: Optional[Callable[[float, float, float], float]] = field(
        default=None, repr=False)
    central: Optional[Callable[[float], float]] = field(default=None, repr=False)

    def density(self, x: float) -> float:
        v = self.psi(x)
        return 0.0 if v == INF else math.exp(-v)

    def mass_between(self, lo: float, hi: float) -> float:
        """``P(lo < X <= hi)`` without cancellation near the center."""
        if hi <= lo:
            return 0.0
        if hi <= 0:
            return self.mass_between(-hi, -lo)
        half = self.central or (lambda x: self.cdf(x) - 0.5)
        if lo < 0:
            return half(hi) + half(-lo)
        if self.sf(lo) <= 0.25:
            return self.sf(lo) - self.sf(hi)
        return half(hi) - half(lo)

    @property
    def is_subbotin(self) -> bool:
        return self.index is not None

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        return sample(self, count, rng)


# -- Subbotin ---------------------------------------------------------------

def subbotin_log_normalizer(r: float) -> float:
    """``log C(r)`` with ``C(r) = 2 Γ(1/r) r^(1/r - 1)``."""
    return math.log(2.0) + specfun.log_gamma(1.0 / r) + (1.0 / r - 1.0) * math.log(r)


def subbotin_variance(r: float) -> float:
    """Variance ``r^(2/r) Γ(3/r) / Γ(1/r)`` of the standard Subbotin_r variable."""
    _check_index(r)
    return math.exp(2.0 / r * math.log(r)
                    + specfun.log_gamma(3.0 / r) - specfun.log_gamma(1.0 / r))


def _check_index(r):
    if math.isnan(r) or r < 1:
        raise DomainError(f"Subbotin index must satisfy r >= 1, got {r!r}")


def _laplace_threshold(eps, delta_q, scale):
    if delta_q > eps * scale:
        return 0.5 * (eps * scale + delta_q)
    return INF


def _gaussian_threshold(eps, delta_q, scale):
    if delta_q == 0:
        return INF
    return (2.0 * eps * scale * scale + delta_q * delta_q) / (2.0 * delta_q)


def laplace_closed_form_scale(eps: float, delta: float, delta_q: float) -> float:
    """Minimal Laplace scale ``Δ / (ε - 2 log(1 - δ))``."""
    return delta_q / (eps - 2.0 * math.log1p(-delta))


def logistic_closed_form_scale(eps: float, delta: float, delta_q: float) -> float:
    """Minimal Logistic scale for (ε, δ)-DP at sensitivity ``delta_q``."""
    root = math.sqrt(delta * (math.expm1(eps) + delta))
    # log(e^{ε/2} + root) as ε/2 + log1p(root e^{-ε/2}) keeps small δ accurate
    log_num = 0.5 * eps + math.log1p(root * math.exp(-0.5 * eps))
    return delta_q / (2.0 * (log_num - math.log1p(-delta)))


def subbotin_family(r: float) -> NoiseFamily:
    """The standard Subbotin_r family, density ``exp(-|x|^r / r) / C(r)``.

    ``r = 1`` and ``r = 2`` use exact exponential and erfc tails and carry
    analytic thresholds; ``r = 1`` also carries the closed-form scale.
    """
    _check_index(r)
    r = float(r)
    log_c = subbotin_log_normalizer(r)
    shape = 1.0 / r

    def psi(x):
        return abs(x) ** r / r + log_c

    if r == 1.0:
        def sf(x):
            return 0.5 * math.exp(-x) if x >= 0 else 1.0 - 0.5 * math.exp(x)
    elif r == 2.0:
        sf = specfun.std_normal_sf
    else:
        def sf(x):
            tail = 0.5 * specfun.reg_gamma_upper(shape, abs(x) ** r / r)
            return tail if x >= 0 else 1.0 - tail

    if r == 1.0:
        def central(x):
            return -0.5 * math.expm1(-x)
    elif r == 2.0:
        def central(x):
            return 0.5 * math.erf(x / math.sqrt(2.0))
    else:
        def central(x):
            return 0.5 * specfun.reg_gamma_lower(shape, x ** r / r)

    def cdf(x):
        return sf(-x)

    def quantile(p):
        if not 0.0 < p < 1.0:
            raise DomainError(f"quantile requires p in (0, 1), got {p!r}")
        if p == 0.5:
            return 0.0
        g = specfun.inv_reg_gamma_upper(2.0 * min(p, 1.0 - p), shape)
        return math.copysign((r * g) ** shape, p - 0.5)

    def mlr_limit(delta_q, scale):
        if delta_q == 0:
            return 0.0
        return delta_q / scale if r == 1.0 else INF

    def sampler(rng, count):
        # |X|^r / r ~ Gamma(1/r, 1), so |X| = (Gamma(1/r, scale=r))^(1/r).
        g = rng.gamma(shape, r, size=count)
        signs = rng.integers(0, 2, size=count) * 2 - 1
        return signs * g ** shape

    if r == 1.0:
        name = "laplace"
    elif r == 2.0:
        name = "gaussian"
    else:
        name = f"subbotin:{r:g}"
    return NoiseFamily(
        name=name,
        psi=psi,
        cdf=cdf,
        sf=sf,
        quantile=quantile,
        variance=subbotin_variance(r),
        support_radius=INF,
        mlr_limit=mlr_limit,
        sampler=sampler,
        index=r,
        threshold={1.0: _laplace_threshold, 2.0: _gaussian_threshold}.get(r),
        closed_form_scale=laplace_closed_form_scale if r == 1.0 else None,
        central=central,
    )


def laplace_family() -> NoiseFamily:
    return subbotin_family(1.0)


def gaussian_family() -> NoiseFamily:
    return subbotin_family(2.0)


# -- Logistic ---------------------------------------------------------------

def _logistic_cdf(x):
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def logistic_family() -> NoiseFamily:
    """Standard Logistic noise, density ``e^-x / (1 + e^-x)^2``."""

    def psi(x):
        # x + 2 log(1 + e^-x), written in the even, overflow-free form.
        ax = abs(x)
        return ax + 2.0 * math.log1p(math.exp(-ax))

    def quantile(p):
        if not 0.0 < p < 1.0:
            raise DomainError(f"quantile requires p in (0, 1), got {p!r}")
        return math.log(p) - math.log1p(-p)

    def mlr_limit(delta_q, scale):
        return delta_q / scale

    def sampler(rng, count):
        return rng.logistic(0.0, 1.0, size=count)

    return NoiseFamily(
        name="logistic",
        psi=psi,
        cdf=_logistic_cdf,
        sf=lambda x: _logistic_cdf(-x),
        quantile=quantile,
        variance=math.pi ** 2 / 3.0,
        support_radius=INF,
        mlr_limit=mlr_limit,
        sampler=sampler,
        closed_form_scale=logistic_closed_form_scale,
        central=lambda x: 0.5 * math.tanh(0.5 * x),
    )


# -- Truncated Laplace ------------------------------------------------------

def truncated_laplace_family(a: float) -> NoiseFamily:
    """Laplace density restricted to ``(-a, a)`` and renormalized to mass 1."""
    if math.isnan(a) or a <= 0:
        raise DomainError(f"truncation radius must be > 0, got {a!r}")
    a = float(a)
    edge = math.exp(-a)
    norm = -2.0 * math.expm1(-a)
    log_norm = math.log(norm)

    def psi(x):
        return abs(x) + log_norm if abs(x) < a else INF

    def sf(x):
        if x >= a:
            return 0.0
        if x <= -a:
            return 1.0
        # e^{-x} - e^{-a} written as e^{-x}(1 - e^{x-a}) so sf(0) is exactly 1/2
        if x >= 0:
            return -math.exp(-x) * math.expm1(x - a) / norm
        return 1.0 + math.exp(x) * math.expm1(-x - a) / norm

    def quantile(p):
        if not 0.0 < p < 1.0:
            raise DomainError(f"quantile requires p in (0, 1), got {p!r}")
        tail = min(p, 1.0 - p)
        x = -math.log(tail * norm + edge)
        return math.copysign(x, p - 0.5) if p != 0.5 else 0.0

    def mlr_limit(delta_q, scale):
        # Supremum of the log-likelihood ratio inside the support.
        u = delta_q / scale
        if u >= 2.0 * a:
            return INF
        return a - abs(a - u)

    def sampler(rng, count):
        u = rng.random(count)
        tail = np.minimum(u, 1.0 - u)
        x = -np.log(tail * norm + edge)
        return np.where(u < 0.5, -x, x)

    variance = 2.0 * (2.0 - edge * (a * a + 2.0 * a + 2.0)) / norm
    return NoiseFamily(
        name=f"truncated-laplace:{a:g}",
        psi=psi,
        cdf=lambda x: sf(-x),
        sf=sf,
        quantile=quantile,
        variance=variance,
        support_radius=a,
        mlr_limit=mlr_limit,
        sampler=sampler,
        central=lambda x: math.expm1(-min(x, a)) / (2.0 * math.expm1(-a)),
    )


# -- User-supplied families -------------------------------------------------

def custom_family(name, psi, cdf, quantile, variance, support_radius, mlr_limit,
                  sf=None, sampler=None, validate=True) -> NoiseFamily:
    """Wrap user-supplied callables as a :class:`NoiseFamily`.

    With ``validate=True`` the grid checks of :func:`check_family` run and a
    :class:`DomainError` lists any violations.
    """
    if sf is None:
        def sf(x):
            return cdf(-x)
    fam = NoiseFamily(name=name, psi=psi, cdf=cdf, sf=sf, quantile=quantile,
                      variance=float(variance), support_radius=float(support_radius),
                      mlr_limit=mlr_limit, sampler=sampler)
    if validate:
        problems = check_family(fam)
        if problems:
            raise DomainError(f"family {name!r} failed validation: " + "; ".join(problems))
    return fam


def check_family(family: NoiseFamily, points: int = 41, tol: float = 1e-8) -> list[str]:
    """Grid checks for evenness, convexity, symmetry and normalization.

    Returns a list of human-readable violations (empty when all pass).
    """
    from scipy import integrate

    a = family.support_radius
    half = min(a, 8.0) * (1.0 - 1e-6)
    xs = np.linspace(-half, half, points)
    problems = []
    for x in xs:
        px, pm = family.psi(x), family.psi(-x)
        if abs(px - pm) > tol * max(1.0, abs(px)):
            problems.append(f"psi not even at x={x:g}")
            break
    for x, y in zip(xs[:-2], xs[2:]):
        mid = family.psi(0.5 * (x + y))
        if mid > 0.5 * (family.psi(x) + family.psi(y)) + tol:
            problems.append(f"psi not midpoint-convex on [{x:g}, {y:g}]")
            break
    for x in xs:
        if abs(family.cdf(-x) - (1.0 - family.cdf(x))) > tol:
            problems.append(f"cdf not symmetric at x={x:g}")
            break
    for x in np.linspace(-0.9 * half, 0.9 * half, points):
        p = family.cdf(x)
        # Upper-tail cdf values near 1 carry no digits to invert.
        if x > 0 and 1.0 - p < 1e-6:
            continue
        if 0.0 < p < 1.0 and abs(family.quantile(p) - x) > 1e-6 * max(1.0, abs(x)):
            problems.append(f"quantile does not invert cdf at x={x:g}")
            break
    lim = a if math.isfinite(a) else INF
    mass = 2.0 * integrate.quad(family.density, 0.0, lim, epsabs=1e-12, epsrel=1e-12,
                                limit=200)[0]
    if abs(mass - 1.0) > tol:
        problems.append(f"density integrates to {mass!r}")
    return problems


# -- Sampling and parsing ---------------------------------------------------

def sample(family: NoiseFamily, count: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``count`` iid standard variates from ``family`` using ``rng``."""
    if count < 0:
        raise DomainError(f"count must be non-negative, got {count!r}")
    if family.sampler is not None:
        return np.asarray(family.sampler(rng, count), dtype=float)
    u = rng.random(count)
    # Guard the open interval required by the quantile.
    u = np.clip(u, np.finfo(float).tiny, 1.0 - np.finfo(float).epsneg)
    return np.array([family.quantile(p) for p in u])


def parse_family(spec: str) -> NoiseFamily:
    """Build a family from ``laplace``, ``logistic``, ``gaussian``,
    ``subbotin:R`` or ``truncated-laplace:A``."""
    text = spec.strip().lower()
    if text == "laplace":
        return laplace_family()
    if text == "gaussian":
        return gaussian_family()
    if text == "logistic":
        return logistic_family()
    kind, sep, arg = text.partition(":")
    if sep and kind in ("subbotin", "truncated-laplace", "truncated_laplace"):
        try:
            value = float(arg)
        except ValueError:
            raise DomainError(f"family parameter must be a number, got {arg!r}") from None
        if kind == "subbotin":
            return subbotin_family(value)
        return truncated_laplace_family(value)
    raise DomainError(
        f"unknown family {spec!r}; expected laplace, logistic, gaussian, "
        "subbotin:R or truncated-laplace:A")
