"""Normal and chi-squared distribution functions, truncated normal sampling.

Everything here is built on :func:`math.erfc` plus Wichura's AS 241 rational
approximation for the normal quantile. The private ``_``-prefixed scalar
kernels use only :mod:`math` so they can be compiled with numba and reused
inside the simulation kernels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ._accel import jitable
from .errors import DegenerateTruncation, DomainError

SQRT2 = math.sqrt(2.0)
INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

# AS 241 (PPND16) coefficients, Wichura (1988).
_A = (
    3.3871328727963666080e0,
    1.3314166789178437745e2,
    1.9715909503065514427e3,
    1.3731693765509461125e4,
    4.5921953931549871457e4,
    6.7265770927008700853e4,
    3.3430575583588128105e4,
    2.5090809287301226727e3,
)
_B = (
    1.0,
    4.2313330701600911252e1,
    6.8718700749205790830e2,
    5.3941960214247511077e3,
    2.1213794301586595867e4,
    3.9307895800092710610e4,
    2.8729085735721942674e4,
    5.2264952788528545610e3,
)
_C = (
    1.42343711074968357734e0,
    4.63033784615654529590e0,
    5.76949722146069140550e0,
    3.64784832476320460504e0,
    1.27045825245236838258e0,
    2.41780725177450611770e-1,
    2.27238449892691845833e-2,
    7.74545014278341407640e-4,
)
_D = (
    1.0,
    2.05319162663775882187e0,
    1.67638483018380384940e0,
    6.89767334985100004550e-1,
    1.48103976427480074590e-1,
    1.51986665636164571966e-2,
    5.47593808499534494600e-4,
    1.05075007164441684324e-9,
)
_E = (
    6.65790464350110377720e0,
    5.46378491116411436990e0,
    1.78482653991729133580e0,
    2.96560571828504891230e-1,
    2.65321895265761230930e-2,
    1.24266094738807843860e-3,
    2.71155556874348757815e-5,
    2.01033439929228813265e-7,
)
_F = (
    1.0,
    5.99832206555887937690e-1,
    1.36929880922735805310e-1,
    1.48753612908506148525e-2,
    7.86869131145613259100e-4,
    1.84631831751005468180e-5,
    1.42151175831644588870e-7,
    2.04426310338993978564e-15,
)


@jitable
def _poly(c, x):
    acc = c[7]
    for i in range(6, -1, -1):
        acc = acc * x + c[i]
    return acc


@jitable
def _ndtr(x):
    return 0.5 * math.erfc(-x / SQRT2)


@jitable
def _ndtr_upper(x):
    return 0.5 * math.erfc(x / SQRT2)


@jitable
def _npdf(x):
    return INV_SQRT_2PI * math.exp(-0.5 * x * x)


@jitable
def _ndtri_lower(p):
    # p <= 0.5; AS 241 followed by one Newton step on the erfc-based cdf
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        x = q * _poly(_A, r) / _poly(_B, r)
    else:
        r = math.sqrt(-math.log(p))
        if r <= 5.0:
            r -= 1.6
            x = -_poly(_C, r) / _poly(_D, r)
        else:
            r -= 5.0
            x = -_poly(_E, r) / _poly(_F, r)
    dens = _npdf(x)
    if dens > 0.0:
        x -= (_ndtr(x) - p) / dens
    return x


@jitable
def _ndtri(p):
    if p > 0.5:
        return -_ndtri_lower(1.0 - p)
    return _ndtri_lower(p)


@jitable
def _ndtri_upper(q):
    """z with 1 - Phi(z) = q, accurate for tiny q."""
    if q > 0.5:
        return _ndtri_lower(1.0 - q)
    return -_ndtri_lower(q)


@jitable
def _truncnorm_ppf_std(a, b, u):
    """Inverse cdf of the standard normal truncated to [a, b], at u in (0, 1)."""
    if a > 0.0:
        sa = _ndtr_upper(a)
        sb = _ndtr_upper(b)
        x = _ndtri_upper(sa - u * (sa - sb))
    else:
        ca = _ndtr(a)
        cb = _ndtr(b)
        x = _ndtri(ca + u * (cb - ca))
    if x <= a:
        x = a + 1e-15 * max(1.0, abs(a))
    if x >= b:
        x = b - 1e-15 * max(1.0, abs(b))
    return x


def _check_finite(x: float, name: str = "x") -> None:
    if not math.isfinite(x):
        raise DomainError(f"{name} must be finite, got {x!r}")


def _check_prob(p: float, name: str = "p") -> None:
    if not (0.0 < p < 1.0):
        raise DomainError(f"{name} must lie in (0, 1), got {p!r}")


def std_normal_cdf(x: float) -> float:
    """Standard normal cdf. Raises :class:`DomainError` for non-finite input."""
    _check_finite(x)
    return _ndtr(x)


def std_normal_sf(x: float) -> float:
    """Upper tail ``1 - Phi(x)`` without cancellation for large ``x``."""
    _check_finite(x)
    return _ndtr_upper(x)


def std_normal_pdf(x: float) -> float:
    return _npdf(x)


def std_normal_quantile(p: float) -> float:
    """Inverse of :func:`std_normal_cdf` on (0, 1)."""
    _check_prob(p)
    return _ndtri(p)


def std_normal_isf(q: float) -> float:
    """Upper quantile ``z_{1-q}``; more precise than ``quantile(1 - q)`` for tiny q."""
    _check_prob(q, "q")
    return _ndtri_upper(q)


def one_sided_p(z: float) -> float:
    """One-sided p-value ``1 - Phi(z)`` for the alternative of a positive effect."""
    return std_normal_sf(z)


def _chi2_4_isf(q: float) -> float:
    # solve exp(-x/2)(1 + x/2) = q on the log scale; the residual is concave
    # and decreasing, so Newton from x0 = -2 log q converges monotonically
    log_q = math.log(q)
    x = max(-2.0 * log_q, 1e-300)
    for _ in range(100):
        g = -0.5 * x + math.log1p(0.5 * x) - log_q
        dg = -x / (2.0 * (2.0 + x))
        if dg == 0.0:
            break
        step = g / dg
        x -= step
        if abs(step) <= 1e-15 * max(1.0, x):
            break
    return x


def chi2_isf(q: float, df: int) -> float:
    """Upper quantile of the chi-squared distribution: ``P(X >= x) = q``.

    Only ``df`` in {1, 2, 4} is supported, each via a closed form or a
    one-dimensional Newton iteration.
    """
    _check_prob(q, "q")
    if df == 1:
        z = _ndtri_upper(0.5 * q)
        return z * z
    if df == 2:
        return -2.0 * math.log(q)
    if df == 4:
        return _chi2_4_isf(q)
    raise DomainError(f"chi-squared quantile is only implemented for df in (1, 2, 4), got {df!r}")


def chi2_quantile(p: float, df: int) -> float:
    """Lower quantile of the chi-squared distribution with ``df`` degrees of freedom."""
    _check_prob(p)
    if df < 1:
        raise DomainError(f"df must be >= 1, got {df!r}")
    if df == 1:
        z = _ndtri(0.5 * (1.0 + p))
        return z * z
    return chi2_isf(1.0 - p, df)


def chi2_sf(x: float, df: int) -> float:
    """Survival function ``P(X >= x)`` for ``df`` in {1, 2, 4}."""
    if x <= 0.0:
        return 1.0
    if df == 1:
        return math.erfc(math.sqrt(0.5 * x))
    if df == 2:
        return math.exp(-0.5 * x)
    if df == 4:
        return math.exp(-0.5 * x) * (1.0 + 0.5 * x)
    raise DomainError(f"chi-squared survival is only implemented for df in (1, 2, 4), got {df!r}")


@dataclass(frozen=True)
class TruncNormParams:
    """Normal(mean, sd**2) conditioned on ``lower < X < upper``."""

    mean: float
    sd: float = 1.0
    lower: float = -math.inf
    upper: float = math.inf

    def __post_init__(self):
        if not (self.sd > 0.0 and math.isfinite(self.sd)):
            raise DomainError(f"sd must be positive and finite, got {self.sd!r}")
        _check_finite(self.mean, "mean")
        if not self.lower < self.upper:
            raise DomainError(f"need lower < upper, got [{self.lower!r}, {self.upper!r}]")
        if self.mass <= 0.0:
            raise DegenerateTruncation(
                f"interval [{self.lower}, {self.upper}] has zero mass under N({self.mean}, {self.sd}^2)"
            )

    @property
    def a(self) -> float:
        return (self.lower - self.mean) / self.sd

    @property
    def b(self) -> float:
        return (self.upper - self.mean) / self.sd

    @property
    def mass(self) -> float:
        a, b = self.a, self.b
        if a > 0.0:
            return _ndtr_upper(a) - _ndtr_upper(b)
        return _ndtr(b) - _ndtr(a)


def truncnorm_ppf(params: TruncNormParams, u: float) -> float:
    """Map ``u`` in (0, 1) to the truncated normal by inverse-cdf transform."""
    _check_prob(u, "u")
    return params.mean + params.sd * _truncnorm_ppf_std(params.a, params.b, u)


def truncnorm_sample(params: TruncNormParams, rng) -> float:
    """Draw one value from the truncated normal.

    Args:
        params: Distribution parameters.
        rng: A :class:`numpy.random.Generator`; exactly one uniform is consumed.

    Returns:
        A draw strictly inside ``(params.lower, params.upper)``.
    """
    u = rng.random()
    while u == 0.0:
        u = rng.random()
    return truncnorm_ppf(params, u)


def truncnorm_pdf(x: float, params: TruncNormParams) -> float:
    if not (params.lower <= x <= params.upper):
        return 0.0
    return _npdf((x - params.mean) / params.sd) / (params.sd * params.mass)


def truncnorm_cdf(x: float, params: TruncNormParams) -> float:
    if x <= params.lower:
        return 0.0
    if x >= params.upper:
        return 1.0
    a, z = params.a, (x - params.mean) / params.sd
    if a > 0.0:
        return (_ndtr_upper(a) - _ndtr_upper(z)) / params.mass
    return (_ndtr(z) - _ndtr(a)) / params.mass


def truncnorm_mean(params: TruncNormParams) -> float:
    """Closed-form mean ``mean + sd * (phi(a) - phi(b)) / mass``."""
    a, b = params.a, params.b
    pa = _npdf(a) if math.isfinite(a) else 0.0
    pb = _npdf(b) if math.isfinite(b) else 0.0
    return params.mean + params.sd * (pa - pb) / params.mass


def arcsine_z_from_proportions(prop_a: float, n_a: float, prop_b: float, n_b: float) -> tuple[float, float]:
    """Arcsine-square-root z-test comparing two proportions.

    The transformed difference ``asin(sqrt(pa)) - asin(sqrt(pb))`` has
    approximate standard error ``0.5 * sqrt(1/n_a + 1/n_b)``.

    Returns:
        ``(z, p_one_sided)`` with ``p = 1 - Phi(z)``.
    """
    if n_a < 1 or n_b < 1:
        raise DomainError("group sizes must be at least 1")
    for prop in (prop_a, prop_b):
        if not 0.0 <= prop <= 1.0:
            raise DomainError(f"proportion must lie in [0, 1], got {prop!r}")
    effect = math.asin(math.sqrt(prop_a)) - math.asin(math.sqrt(prop_b))
    se = 0.5 * math.sqrt(1.0 / n_a + 1.0 / n_b)
    z = effect / se
    return z, _ndtr_upper(z)


def arcsine_z(events_a: int, n_a: int, events_b: int, n_b: int) -> tuple[float, float]:
    """:func:`arcsine_z_from_proportions` from event counts."""
    if n_a < 1 or n_b < 1:
        raise DomainError("group sizes must be at least 1")
    if not (0 <= events_a <= n_a and 0 <= events_b <= n_b):
        raise DomainError("event counts must satisfy 0 <= events <= n")
    return arcsine_z_from_proportions(events_a / n_a, n_a, events_b / n_b, n_b)
