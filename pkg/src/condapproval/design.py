"""Sample size of the post-market trial.

The required variance ratio ``c = se1**2 / se2**2`` follows from asking for
power ``1 - beta`` to detect the (optionally shrunken) pre-market estimate at
the post-market threshold ``target_z``:

    c = (z_{1-beta} + target_z)**2 / ((1 - s)**2 * z1**2)

``target_z`` is ``z_{1-alpha}`` for the two-trials rule and the adaptive
threshold of the chosen combination rule otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import evidence
from .errors import DomainError, NoTrialRequired
from .evidence import DEFAULT_ALPHA, Method, WeightPair
from .specialfn import _ndtr_upper, _ndtri, _ndtri_upper

# guards integer ceilings against representation error (2.2 * 85 = 187.00000000000003)
_CEIL_SLACK = 1e-9


def ceil_count(x: float) -> int:
    """Ceiling that ignores floating-point noise just above an integer."""
    return math.ceil(x - _CEIL_SLACK)


@dataclass(frozen=True)
class DesignParams:
    alpha: float = DEFAULT_ALPHA
    gamma: float | None = None
    power: float = 0.9
    shrinkage: float = 0.0
    sd_ratio_sq: float = 1.0
    dropout: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.alpha < 0.5:
            raise DomainError(f"alpha must lie in (0, 0.5), got {self.alpha!r}")
        if self.gamma is None:
            object.__setattr__(self, "gamma", self.alpha**2)
        if not 0.0 < self.power < 1.0:
            raise DomainError(f"power must lie in (0, 1), got {self.power!r}")
        if not 0.0 <= self.shrinkage < 1.0:
            raise DomainError(f"shrinkage must lie in [0, 1), got {self.shrinkage!r}")
        if not self.sd_ratio_sq > 0.0:
            raise DomainError("sd_ratio_sq must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise DomainError(f"dropout must lie in [0, 1), got {self.dropout!r}")


def variance_ratio(z1: float, target_z: float, power: float = 0.9, shrinkage: float = 0.0) -> float:
    """Relative size ``c`` of the post-market trial for the given power.

    Args:
        z1: Pre-market z-value, must be positive.
        target_z: z-value the post-market trial has to reach.
        power: Target power ``1 - beta`` against the shrunken pre-market effect.
        shrinkage: Shrinkage factor ``s`` in [0, 1).
    """
    if not z1 > 0.0:
        raise DomainError(f"z1 must be positive, got {z1!r}")
    if not 0.0 <= shrinkage < 1.0:
        raise DomainError(f"shrinkage must lie in [0, 1), got {shrinkage!r}")
    if not 0.0 < power < 1.0:
        raise DomainError(f"power must lie in (0, 1), got {power!r}")
    if not math.isfinite(target_z):
        raise DomainError("target_z must be finite")
    margin = _ndtri(power) + target_z
    if not margin > 0.0:
        # the requested power is already reached by an empty trial
        raise DomainError(f"need z_power + target_z > 0, got {margin!r}")
    return margin**2 / ((1.0 - shrinkage) ** 2 * z1 * z1)


def achieved_power(z1: float, target_z: float, c: float, shrinkage: float = 0.0) -> float:
    """Power ``1 - Phi(target_z - (1 - s) z1 sqrt(c))``, the inverse of :func:`variance_ratio`."""
    return _ndtr_upper(target_z - (1.0 - shrinkage) * z1 * math.sqrt(c))


def post_market_n(c: float, n1: float, sd_ratio_sq: float = 1.0) -> int:
    """Absolute post-market size ``ceil(c * n1 * sd2**2 / sd1**2)``, at least 1."""
    if not c > 0.0:
        raise DomainError(f"c must be positive, got {c!r}")
    if not n1 >= 1:
        raise DomainError(f"n1 must be at least 1, got {n1!r}")
    return max(1, ceil_count(c * n1 * sd_ratio_sq))


def n_from_effect(d: float, level: float, power: float = 0.9) -> int:
    """Per-group size ``ceil(2 (z_power + z_{1-level})**2 / d**2)`` for a standardized effect."""
    if not d > 0.0:
        raise DomainError(f"effect size must be positive, got {d!r}")
    if not (0.0 < level < 1.0 and 0.0 < power < 1.0):
        raise DomainError("level and power must lie in (0, 1)")
    return ceil_count(2.0 * (_ndtri(power) + _ndtri_upper(level)) ** 2 / (d * d))


def dropout_adjust(n_total: int, dropout: float) -> int:
    """Inflate a total for dropout, rounded up to an even (balanced) total."""
    if not 0.0 <= dropout < 1.0:
        raise DomainError(f"dropout must lie in [0, 1), got {dropout!r}")
    if dropout == 0.0:
        return n_total
    n = ceil_count(n_total / (1.0 - dropout))
    return n + (n % 2)


def post_market_threshold(
    method: Method | str,
    z1: float,
    weights: WeightPair | None = None,
    alpha: float = DEFAULT_ALPHA,
    gamma: float | None = None,
) -> float:
    """z-value the post-market trial must reach under ``method`` given ``z1``.

    Raises:
        NoTrialRequired: Fisher's criterion is already met by ``p1`` alone.
        NecessaryConditionViolated: harmonic test with too large ``p1``.
    """
    method = Method(method)
    gamma = alpha * alpha if gamma is None else gamma
    if method is Method.TWO_TRIALS:
        return _ndtri_upper(alpha)
    if method.is_harmonic:
        if weights is None:
            weights = evidence.UNWEIGHTED if method is Method.HARMONIC_UNWEIGHTED else evidence.WEIGHTED_3_2
        return evidence.harmonic_post_bound(z1, weights, gamma)[0]
    if method is Method.FISHER:
        bound = evidence.fisher_bound(_ndtr_upper(z1), gamma)
        if bound is evidence.NO_TRIAL_REQUIRED:
            raise NoTrialRequired("Fisher's criterion is met by the pre-market trial alone; refusing to size a trial")
        return _ndtri_upper(bound)
    return math.sqrt(2.0) * _ndtri_upper(gamma) - z1


def adaptive_level(
    method: Method | str,
    z1: float,
    weights: WeightPair | None = None,
    alpha: float = DEFAULT_ALPHA,
    gamma: float | None = None,
) -> float:
    """Post-market significance level ``p2_bar`` implied by :func:`post_market_threshold`."""
    return _ndtr_upper(post_market_threshold(method, z1, weights, alpha, gamma))


@dataclass(frozen=True)
class SizingResult:
    method: Method
    level: float
    target_z: float
    c: float | None
    n_per_group: int
    n_total: int
    n_total_dropout: int


def size_post_market(
    method: Method | str,
    z1: float,
    params: DesignParams = DesignParams(),
    weights: WeightPair | None = None,
    n1: float | None = None,
    effect_size: float | None = None,
) -> SizingResult:
    """Size the post-market trial from either ``n1`` (variance ratio) or a standardized effect.

    Exactly one of ``n1`` and ``effect_size`` must be given.
    """
    if (n1 is None) == (effect_size is None):
        raise DomainError("give exactly one of n1 and effect_size")
    method = Method(method)
    target = post_market_threshold(method, z1, weights, params.alpha, params.gamma)
    level = _ndtr_upper(target)
    if n1 is not None:
        c = variance_ratio(z1, target, params.power, params.shrinkage)
        n = post_market_n(c, n1, params.sd_ratio_sq)
    else:
        c = None
        n = n_from_effect(effect_size, level, params.power)
    total = 2 * n
    return SizingResult(method, level, target, c, n, total, dropout_adjust(total, params.dropout))
