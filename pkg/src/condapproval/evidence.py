"""Combining a pre-market and a post-market trial result.

Four rules are provided: the two-trials rule, the (optionally weighted)
harmonic mean chi-squared test, Fisher's criterion and Stouffer's method.
Each rule yields an overall decision, a combined p-value where one is
defined, and the largest post-market p-value that still gives overall
significance for a given pre-market result (the adaptive level ``p2_bar``).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .errors import DirectionViolation, DomainError, NecessaryConditionViolated
from .specialfn import (
    SQRT2,
    _ndtr_upper,
    _ndtri_upper,
    chi2_isf,
    std_normal_isf,
)

DEFAULT_ALPHA = 0.025


class _NoTrialRequired:
    """Sentinel bound: overall significance holds for any post-market result."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "NO_TRIAL_REQUIRED"

    def __reduce__(self):
        return (_NoTrialRequired, ())


NO_TRIAL_REQUIRED = _NoTrialRequired()


class Method(str, enum.Enum):
    TWO_TRIALS = "twotrials"
    HARMONIC_UNWEIGHTED = "harmonic"
    HARMONIC_WEIGHTED = "harmonic-weighted"
    FISHER = "fisher"
    STOUFFER = "stouffer"

    @property
    def is_harmonic(self) -> bool:
        return self in (Method.HARMONIC_UNWEIGHTED, Method.HARMONIC_WEIGHTED)


@dataclass(frozen=True)
class WeightPair:
    """Weights of the pre-market (``w1``) and post-market (``w2``) trial."""

    w1: float = 1.0
    w2: float = 1.0
    w: float = field(init=False)

    def __post_init__(self):
        if not (self.w1 > 0.0 and self.w2 > 0.0):
            raise DomainError(f"weights must be positive, got ({self.w1}, {self.w2})")
        object.__setattr__(self, "w", math.sqrt(self.w1) + math.sqrt(self.w2))

    def swapped(self) -> WeightPair:
        return WeightPair(self.w2, self.w1)


UNWEIGHTED = WeightPair(1.0, 1.0)
# 60% of the weight on the pre-market trial
WEIGHTED_3_2 = WeightPair(3.0, 2.0)


@dataclass(frozen=True)
class TrialSummary:
    """Result of one trial on the z-scale.

    ``p`` is the one-sided p-value ``1 - Phi(z)``. Use :meth:`from_z` or
    :meth:`from_p` to fill in the other member.
    """

    z: float
    p: float
    n_per_group: float | None = None
    sd: float | None = None

    def __post_init__(self):
        if not math.isfinite(self.z):
            raise DomainError(f"z must be finite, got {self.z!r}")
        if not 0.0 <= self.p <= 1.0:
            raise DomainError(f"p must lie in [0, 1], got {self.p!r}")
        if abs(self.p - _ndtr_upper(self.z)) > 1e-10:
            raise DomainError(f"inconsistent trial summary: p={self.p!r} but 1 - Phi(z={self.z!r}) = {_ndtr_upper(self.z)!r}")
        if self.n_per_group is not None and self.n_per_group < 1:
            raise DomainError("n_per_group must be at least 1")
        if self.sd is not None and not self.sd > 0.0:
            raise DomainError("sd must be positive")

    @classmethod
    def from_z(cls, z: float, n_per_group: float | None = None, sd: float | None = None) -> TrialSummary:
        return cls(z, _ndtr_upper(z), n_per_group, sd)

    @classmethod
    def from_p(cls, p: float, n_per_group: float | None = None, sd: float | None = None) -> TrialSummary:
        return cls(std_normal_isf(p), p, n_per_group, sd)

    @property
    def se(self) -> float | None:
        """Standard error ``sqrt(2) * sd / sqrt(n)`` when both are known."""
        if self.n_per_group is None or self.sd is None:
            return None
        return SQRT2 * self.sd / math.sqrt(self.n_per_group)

    @property
    def estimate(self) -> float | None:
        se = self.se
        return None if se is None else self.z * se


@dataclass(frozen=True)
class CombinationOutcome:
    method: Method
    significant: bool
    combined_p: float | None
    bound_p2: float | _NoTrialRequired
    note: str | None = None

    @property
    def trial_required(self) -> bool:
        return self.bound_p2 is not NO_TRIAL_REQUIRED


def _default_gamma(gamma: float | None, alpha: float) -> float:
    return alpha * alpha if gamma is None else gamma


def harmonic_statistic(z1: float, z2: float, weights: WeightPair = UNWEIGHTED) -> float:
    """Weighted harmonic mean statistic ``w**2 / (w1/z1**2 + w2/z2**2)``.

    Returns 0 when either z-value is 0, the continuous limit.
    """
    a, b = z1 * z1, z2 * z2
    # tiny z-values square to 0; the statistic then vanishes
    if a == 0.0 or b == 0.0:
        return 0.0
    return weights.w**2 / (weights.w1 / a + weights.w2 / b)


def harmonic_pvalue(z1: float, z2: float, weights: WeightPair = UNWEIGHTED) -> float:
    """One-sided p-value ``[1 - Phi(X)] / 2`` of the harmonic mean test.

    Only defined when both z-values are positive.

    Raises:
        DirectionViolation: if ``z1 <= 0`` or ``z2 <= 0``.
    """
    if not (z1 > 0.0 and z2 > 0.0):
        raise DirectionViolation(f"harmonic p-value needs z1 > 0 and z2 > 0, got ({z1}, {z2})")
    x = math.sqrt(harmonic_statistic(z1, z2, weights))
    return 0.5 * _ndtr_upper(x)


def harmonic_critical_value(gamma: float = DEFAULT_ALPHA**2) -> float:
    """Critical value ``c_H`` with ``P(chi2_1 >= c_H) / 4 = gamma``."""
    if not 0.0 < gamma < 0.25:
        raise DomainError(f"gamma must lie in (0, 0.25), got {gamma!r}")
    return chi2_isf(4.0 * gamma, 1)


def harmonic_post_bound(
    z1: float, weights: WeightPair = UNWEIGHTED, gamma: float = DEFAULT_ALPHA**2
) -> tuple[float, float]:
    """Smallest post-market z-value (and largest p-value) giving overall significance.

    Args:
        z1: Pre-market z-value; ``math.inf`` gives the limiting bound.
        weights: Trial weights.
        gamma: Overall significance level.

    Returns:
        ``(z2_bar, p2_bar)``.

    Raises:
        NecessaryConditionViolated: when ``p1`` exceeds :func:`harmonic_pre_bound`.
    """
    if not z1 > 0.0:
        raise DomainError(f"z1 must be positive, got {z1!r}")
    c_h = harmonic_critical_value(gamma)
    z1_sq = z1 * z1
    denom = weights.w**2 / c_h - weights.w1 / z1_sq if z1_sq > 0.0 else -math.inf
    if denom <= 0.0:
        raise NecessaryConditionViolated(
            f"z1={z1} is too small: p1 must not exceed {harmonic_pre_bound(weights, gamma):.6g}"
        )
    z2_bar = math.sqrt(weights.w2) / math.sqrt(denom)
    return z2_bar, _ndtr_upper(z2_bar)


def harmonic_pre_bound(weights: WeightPair = UNWEIGHTED, gamma: float = DEFAULT_ALPHA**2) -> float:
    """Necessary bound on ``p1``: larger pre-market p-values can never be rescued."""
    c_h = harmonic_critical_value(gamma)
    return _ndtr_upper(math.sqrt(weights.w1 * c_h) / weights.w)


def harmonic_post_limit(weights: WeightPair = UNWEIGHTED, gamma: float = DEFAULT_ALPHA**2) -> float:
    """Limit of ``p2_bar`` as ``z1`` grows without bound."""
    return harmonic_post_bound(math.inf, weights, gamma)[1]


def fisher_critical_value(gamma: float = DEFAULT_ALPHA**2) -> float:
    """``c_F = exp(-chi2_4(1 - gamma) / 2)``; significance iff ``p1 * p2 <= c_F``."""
    if not 0.0 < gamma < 1.0:
        raise DomainError(f"gamma must lie in (0, 1), got {gamma!r}")
    return math.exp(-0.5 * chi2_isf(gamma, 4))


def fisher_bound(p1: float, gamma: float = DEFAULT_ALPHA**2) -> float | _NoTrialRequired:
    """Adaptive level ``c_F / p1``, or :data:`NO_TRIAL_REQUIRED` once it reaches 1."""
    if not 0.0 < p1 < 1.0:
        raise DomainError(f"p1 must lie in (0, 1), got {p1!r}")
    bound = fisher_critical_value(gamma) / p1
    if bound >= 1.0:
        return NO_TRIAL_REQUIRED
    return bound


def fisher_pvalue(p1: float, p2: float) -> float:
    """Combined p-value ``P(chi2_4 >= -2 log(p1 p2)) = p1 p2 (1 - log(p1 p2))``."""
    prod = p1 * p2
    if prod <= 0.0:
        return 0.0
    return min(1.0, prod * (1.0 - math.log(prod)))


def stouffer_bound(z1: float, gamma: float = DEFAULT_ALPHA**2) -> float:
    """Adaptive level ``1 - Phi(sqrt(2) z_{1-gamma} - z1)``."""
    if not math.isfinite(z1):
        raise DomainError(f"z1 must be finite, got {z1!r}")
    return _ndtr_upper(SQRT2 * _ndtri_upper(gamma) - z1)


def stouffer_pvalue(z1: float, z2: float) -> float:
    return _ndtr_upper((z1 + z2) / SQRT2)


def two_trials_decision(p1: float, p2: float, alpha: float = DEFAULT_ALPHA) -> bool:
    """Both trials significant at one-sided level ``alpha``."""
    return p1 <= alpha and p2 <= alpha


def two_trials_bound(p1: float, alpha: float = DEFAULT_ALPHA) -> float:
    """``alpha`` if the pre-market trial is significant, else 0 (nothing suffices)."""
    return alpha if p1 <= alpha else 0.0


def combine(
    method: Method | str,
    trial1: TrialSummary,
    trial2: TrialSummary,
    weights: WeightPair | None = None,
    gamma: float | None = None,
    alpha: float = DEFAULT_ALPHA,
) -> CombinationOutcome:
    """Apply one combination rule to a pair of trial results.

    ``gamma`` defaults to ``alpha**2``. ``weights`` defaults to (1, 1) for the
    unweighted harmonic test and (3, 2) for the weighted one; other methods
    ignore it. The two-trials rule reports ``max(p1, p2)**2`` as its combined
    p-value, which is compared against ``alpha**2``.
    """
    method = Method(method)
    gamma = _default_gamma(gamma, alpha)
    z1, z2, p1, p2 = trial1.z, trial2.z, trial1.p, trial2.p

    if method is Method.TWO_TRIALS:
        return CombinationOutcome(
            method,
            two_trials_decision(p1, p2, alpha),
            max(p1, p2) ** 2,
            two_trials_bound(p1, alpha),
        )

    if method.is_harmonic:
        if weights is None:
            weights = UNWEIGHTED if method is Method.HARMONIC_UNWEIGHTED else WEIGHTED_3_2
        note = None
        try:
            bound = harmonic_post_bound(z1, weights, gamma)[1]
        except (NecessaryConditionViolated, DomainError):
            bound = 0.0
            note = "necessary condition on p1 violated; no post-market result suffices"
        if not (z1 > 0.0 and z2 > 0.0):
            return CombinationOutcome(
                method,
                False,
                None,
                bound,
                "direction violation: harmonic test needs both z-values positive",
            )
        p_h = harmonic_pvalue(z1, z2, weights)
        return CombinationOutcome(method, p_h <= gamma, p_h, bound, note)

    if method is Method.FISHER:
        bound = fisher_bound(p1, gamma)
        c_f = fisher_critical_value(gamma)
        note = None
        if bound is NO_TRIAL_REQUIRED:
            note = "post-market trial not required: p1 alone meets Fisher's criterion"
        return CombinationOutcome(method, p1 * p2 <= c_f, fisher_pvalue(p1, p2), bound, note)

    combined = stouffer_pvalue(z1, z2)
    return CombinationOutcome(method, combined <= gamma, combined, stouffer_bound(z1, gamma))
