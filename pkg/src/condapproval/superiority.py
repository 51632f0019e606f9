"""When does the harmonic mean test beat the two-trials rule?

Given a significant pre-market result, both methods size the post-market
trial by the variance-ratio formula and differ only in the threshold the
post-market z-value must reach. With equal true effects in both trials and no
shrinkage, the harmonic test needs the smaller trial iff ``z1 > b`` and has
the larger power to detect the true effect iff ``z1 > mu``, where ``mu`` is
the mean of the (untruncated) pre-market z-value. The outcome is classified
by where ``z1`` falls relative to ``mu`` and ``b``:

=========================  ================================
superior                   smaller trial and larger power
inferior                   larger trial and smaller power
inconclusive_smaller_n     smaller trial, smaller power
inconclusive_larger_power  larger trial, larger power
=========================  ================================

Region probabilities are taken under the truncated normal distribution of
``z1`` and computed twice: by integrating over the closed-form regions, and
by integrating the pointwise classification from :func:`compare_powers`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.optimize import brentq

from . import design, evidence
from .errors import DomainError, NecessaryConditionViolated, QuadratureError
from .evidence import DEFAULT_ALPHA, UNWEIGHTED, WeightPair
from .quadrature import integrate
from .specialfn import _ndtr_upper, _ndtri, _ndtri_upper, _npdf

REGIONS = ("superior", "inferior", "inconclusive_smaller_n", "inconclusive_larger_power")

# the truncated density is integrated numerically on [z_alpha, mu + TAIL_SPAN]
TAIL_SPAN = 10.0
QUAD_TOL = 1e-9


def crossover_b(alpha: float = DEFAULT_ALPHA, gamma: float | None = None, weights: WeightPair = UNWEIGHTED) -> float:
    """Pre-market z-value above which the harmonic threshold is below ``z_{1-alpha}``.

    Unweighted this is ``1 / sqrt(4 / c_H - 1 / z_{1-alpha}**2)``.
    """
    gamma = alpha * alpha if gamma is None else gamma
    c_h = evidence.harmonic_critical_value(gamma)
    z_alpha = _ndtri_upper(alpha)
    denom = weights.w**2 / c_h - weights.w2 / (z_alpha * z_alpha)
    if denom <= 0.0:
        raise DomainError(f"no crossover for alpha={alpha}, gamma={gamma}: the harmonic threshold never drops below z_(1-alpha)")
    return math.sqrt(weights.w1 / denom)


def mu_from_power(power_pre: float, alpha: float = DEFAULT_ALPHA) -> float:
    """Pre-market mean ``z_{1-alpha} + z_{power}``."""
    if not 0.0 < power_pre < 1.0:
        raise DomainError(f"power_pre must lie in (0, 1), got {power_pre!r}")
    return _ndtri_upper(alpha) + _ndtri(power_pre)


@dataclass(frozen=True)
class PowerComparison:
    n_hu: float
    n_2tr: float
    pow_hu: float
    pow_2tr: float

    @property
    def region(self) -> str:
        smaller = self.n_hu < self.n_2tr
        stronger = self.pow_hu > self.pow_2tr
        if smaller and stronger:
            return "superior"
        if not smaller and not stronger and self.n_hu > self.n_2tr:
            return "inferior"
        if smaller:
            return "inconclusive_smaller_n"
        return "inconclusive_larger_power"


def compare_powers(
    z1: float,
    power_pre: float,
    alpha: float = DEFAULT_ALPHA,
    gamma: float | None = None,
    power: float = 0.9,
    weights: WeightPair = UNWEIGHTED,
    n1: float = 1.0,
) -> PowerComparison:
    """Sample sizes (unrounded, ``c * n1``) and true powers under both methods.

    The true effect is the one implied by ``power_pre``: the pre-market z-value
    has mean ``mu = z_{1-alpha} + z_{power_pre}``, so a post-market trial of
    relative size ``c`` has power ``1 - Phi(threshold - mu * sqrt(c))``.
    """
    z_alpha = _ndtri_upper(alpha)
    if not z1 > z_alpha:
        raise DomainError(f"z1 must exceed z_(1-alpha)={z_alpha:.6g}, got {z1!r}")
    gamma = alpha * alpha if gamma is None else gamma
    mu = mu_from_power(power_pre, alpha)
    try:
        z_bar = evidence.harmonic_post_bound(z1, weights, gamma)[0]
    except NecessaryConditionViolated as exc:
        raise DomainError(f"harmonic test cannot succeed at z1={z1}") from exc
    c_hu = design.variance_ratio(z1, z_bar, power)
    c_2tr = design.variance_ratio(z1, z_alpha, power)
    return PowerComparison(
        n_hu=c_hu * n1,
        n_2tr=c_2tr * n1,
        pow_hu=_ndtr_upper(z_bar - mu * math.sqrt(c_hu)),
        pow_2tr=_ndtr_upper(z_alpha - mu * math.sqrt(c_2tr)),
    )


@dataclass(frozen=True)
class ComparisonRegions:
    power_pre: float
    mu: float
    b: float
    p_superior: float
    p_inferior: float
    p_inconclusive_smaller_n: float
    p_inconclusive_larger_power: float
    pointwise: dict[str, float]
    max_discrepancy: float

    @property
    def p_inconclusive(self) -> float:
        return self.p_inconclusive_smaller_n + self.p_inconclusive_larger_power

    def as_row(self) -> dict[str, float]:
        return {
            "power_pre": self.power_pre,
            "p_superior": self.p_superior,
            "p_inferior": self.p_inferior,
            "p_inconclusive_smaller_n": self.p_inconclusive_smaller_n,
            "p_inconclusive_larger_power": self.p_inconclusive_larger_power,
        }


def _tn_density(mu: float, z_alpha: float):
    mass = _ndtr_upper(z_alpha - mu)

    def density(z: float) -> float:
        return _npdf(z - mu) / mass

    return density, mass


def _region_bounds(mu: float, b: float, z_alpha: float) -> dict[str, tuple[float, float]]:
    inf = math.inf
    lo_hi = {
        "superior": (max(mu, b), inf),
        "inferior": (mu, b),
        "inconclusive_smaller_n": (b, mu),
        "inconclusive_larger_power": (z_alpha, min(mu, b)),
    }
    return {k: (max(lo, z_alpha), hi) for k, (lo, hi) in lo_hi.items()}


def _integrate_tn(density, mu: float, mass: float, lo: float, hi: float) -> float:
    if hi <= lo:
        return 0.0
    cut = mu + TAIL_SPAN
    value = 0.0
    if lo < cut:
        value, _ = integrate(density, lo, min(hi, cut), tol=QUAD_TOL)
    if hi > cut:
        # analytic tail beyond the numerical window
        upper = 0.0 if math.isinf(hi) else _ndtr_upper(hi - mu)
        value += (_ndtr_upper(max(lo, cut) - mu) - upper) / mass
    return value


def superiority_probabilities(
    power_pre: float,
    alpha: float = DEFAULT_ALPHA,
    gamma: float | None = None,
    weights: WeightPair = UNWEIGHTED,
    agreement_tol: float = 1e-6,
) -> ComparisonRegions:
    """Region probabilities for a pre-market trial with true power ``power_pre``.

    Raises:
        QuadratureError: if the closed-form and pointwise integrations disagree
            by more than ``agreement_tol`` or either fails to converge.
    """
    gamma = alpha * alpha if gamma is None else gamma
    z_alpha = _ndtri_upper(alpha)
    mu = mu_from_power(power_pre, alpha)
    b = crossover_b(alpha, gamma, weights)
    density, mass = _tn_density(mu, z_alpha)

    closed = {name: _integrate_tn(density, mu, mass, lo, hi) for name, (lo, hi) in _region_bounds(mu, b, z_alpha).items()}

    cut = mu + TAIL_SPAN
    edges = sorted({z_alpha, cut, *(x for x in (mu, b) if z_alpha < x < cut)})
    pointwise = {}
    for name in REGIONS:
        def indicator(z, name=name):
            if z <= z_alpha:
                return 0.0
            return density(z) if compare_powers(z, power_pre, alpha, gamma, weights=weights).region == name else 0.0

        # panels meet at mu and b so a sliver between them is never stepped over
        value = math.fsum(integrate(indicator, lo, hi, tol=QUAD_TOL)[0] for lo, hi in zip(edges, edges[1:]))
        if name == "superior":
            value += _ndtr_upper(TAIL_SPAN) / mass
        pointwise[name] = value

    discrepancy = max(abs(closed[k] - pointwise[k]) for k in REGIONS)
    if discrepancy > agreement_tol:
        raise QuadratureError(
            "closed-form and pointwise region probabilities disagree",
            estimate=closed["superior"],
            error=discrepancy,
            intervals=0,
        )
    return ComparisonRegions(
        power_pre=power_pre,
        mu=mu,
        b=b,
        p_superior=closed["superior"],
        p_inferior=closed["inferior"],
        p_inconclusive_smaller_n=closed["inconclusive_smaller_n"],
        p_inconclusive_larger_power=closed["inconclusive_larger_power"],
        pointwise=pointwise,
        max_discrepancy=discrepancy,
    )


def crossover_p1(alpha: float = DEFAULT_ALPHA, gamma: float | None = None, weights: WeightPair = UNWEIGHTED) -> float:
    """Pre-market p-value below which the harmonic test needs the smaller trial."""
    return _ndtr_upper(crossover_b(alpha, gamma, weights))


def zero_inferior_power(alpha: float = DEFAULT_ALPHA, gamma: float | None = None, weights: WeightPair = UNWEIGHTED) -> float:
    """Pre-market power above which the harmonic test is never inferior (``mu >= b``)."""
    return _ndtr_upper(_ndtri_upper(alpha) - crossover_b(alpha, gamma, weights))


def _p_inferior_closed(power_pre: float, alpha: float, gamma: float, weights: WeightPair) -> float:
    z_alpha = _ndtri_upper(alpha)
    mu = mu_from_power(power_pre, alpha)
    b = crossover_b(alpha, gamma, weights)
    lo = max(mu, z_alpha)
    if b <= lo:
        return 0.0
    return (_ndtr_upper(lo - mu) - _ndtr_upper(b - mu)) / _ndtr_upper(z_alpha - mu)


def inferior_power_threshold(
    level: float = 0.5, alpha: float = DEFAULT_ALPHA, gamma: float | None = None, weights: WeightPair = UNWEIGHTED
) -> float:
    """Pre-market power at which ``P(inferior)`` equals ``level``."""
    gamma = alpha * alpha if gamma is None else gamma
    hi = zero_inferior_power(alpha, gamma, weights)
    return brentq(lambda p: _p_inferior_closed(p, alpha, gamma, weights) - level, 1e-6, hi - 1e-9, xtol=1e-12)
