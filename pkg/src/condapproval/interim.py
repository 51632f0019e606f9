"""Power at an interim look of the post-market trial.

Notation: the final post-market z-value decomposes as
``z2 = sqrt(f) * z2i + sqrt(1 - f) * z_rest`` where ``z_rest`` is the z-value
of the ``n_rest = (1 - f) * n2`` patients per group still to come. With a
normal belief ``tau ~ N(m, v)`` about the standardized effect ``theta/sigma``,
``z_rest ~ N(m * sqrt(n_rest/2), 1 + v * n_rest/2)``, which gives the closed
form used by :func:`interim_power`. The three beliefs are

* conditional (CPi): the shrunken pre-market estimate as a point mass,
* informed predictive (IPPi): pre-market estimate combined with interim data,
* predictive (PPi): interim data only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError
from .specialfn import _ndtr_upper

DEFAULT_FUTILITY = 0.20


@dataclass(frozen=True)
class InterimState:
    """Interim z-value ``z2i`` after a fraction ``f`` of the planned ``n2`` per group."""

    z2i: float
    f: float
    n2: float
    sigma: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.f < 1.0:
            raise DomainError(f"information fraction must lie in (0, 1), got {self.f!r}")
        if not self.n2 >= 2:
            raise DomainError(f"n2 must be at least 2, got {self.n2!r}")
        if not self.sigma > 0.0:
            raise DomainError("sigma must be positive")
        if not math.isfinite(self.z2i):
            raise DomainError("z2i must be finite")

    @classmethod
    def at_half(cls, z2i: float, n2: int, sigma: float = 1.0) -> InterimState:
        """State for a look after ``floor(n2 / 2)`` patients per group."""
        n2i = n2 // 2
        return cls(z2i, n2i / n2, n2, sigma)

    @property
    def n_interim(self) -> float:
        return self.f * self.n2

    @property
    def n_remaining(self) -> float:
        return (1.0 - self.f) * self.n2


@dataclass(frozen=True)
class EffectBelief:
    """Normal belief about the standardized effect; ``variance == 0`` is a point mass."""

    mean: float
    variance: float = 0.0

    def __post_init__(self):
        if not self.variance >= 0.0:
            raise DomainError(f"variance must be nonnegative, got {self.variance!r}")


def interim_power(state: InterimState, belief: EffectBelief, final_threshold_z: float) -> float:
    """Probability that the completed trial ends with ``z2 >= final_threshold_z``."""
    if not math.isfinite(final_threshold_z):
        raise DomainError("final_threshold_z must be finite")
    f = state.f
    half_rest = 0.5 * state.n_remaining
    needed = (final_threshold_z - math.sqrt(f) * state.z2i) / math.sqrt(1.0 - f)
    return _ndtr_upper((needed - belief.mean * math.sqrt(half_rest)) / math.sqrt(1.0 + belief.variance * half_rest))


def belief_conditional(z1: float, n1: float, shrinkage: float = 0.0) -> EffectBelief:
    """Point belief at the shrunken pre-market estimate ``(1 - s) z1 sqrt(2 / n1)``."""
    if not n1 >= 1:
        raise DomainError("n1 must be at least 1")
    if not 0.0 <= shrinkage <= 1.0:
        raise DomainError("shrinkage must lie in [0, 1]")
    return EffectBelief((1.0 - shrinkage) * z1 * math.sqrt(2.0 / n1), 0.0)


def belief_predictive(state: InterimState) -> EffectBelief:
    """Flat-prior posterior from the interim data alone."""
    n2i = state.n_interim
    return EffectBelief(state.z2i * math.sqrt(2.0 / n2i), 2.0 / n2i)


def belief_informed_predictive(z1: float, n1: float, state: InterimState) -> EffectBelief:
    """Precision-weighted combination of the pre-market and the interim estimate.

    No shrinkage is applied to the pre-market estimate here.
    """
    if not n1 >= 1:
        raise DomainError("n1 must be at least 1")
    n2i = state.n_interim
    tau1 = z1 * math.sqrt(2.0 / n1)
    tau2i = state.z2i * math.sqrt(2.0 / n2i)
    return EffectBelief((n1 * tau1 + n2i * tau2i) / (n1 + n2i), 2.0 / (n1 + n2i))


def futility_decision(power: float, threshold: float = DEFAULT_FUTILITY) -> bool:
    """True (stop for futility) iff ``power < threshold``."""
    if not (0.0 <= power <= 1.0 and 0.0 <= threshold <= 1.0):
        raise DomainError("power and threshold must lie in [0, 1]")
    return power < threshold


BELIEFS = ("cp", "ipp", "pp")


def belief_for(kind: str, state: InterimState, z1: float | None = None, n1: float | None = None, shrinkage: float = 0.0) -> EffectBelief:
    """Dispatch on ``kind`` in ``("cp", "ipp", "pp")``."""
    if kind == "pp":
        return belief_predictive(state)
    if z1 is None or n1 is None:
        raise DomainError(f"belief {kind!r} needs the pre-market z1 and n1")
    if kind == "cp":
        return belief_conditional(z1, n1, shrinkage)
    if kind == "ipp":
        return belief_informed_predictive(z1, n1, state)
    raise DomainError(f"unknown belief {kind!r}; expected one of {BELIEFS}")
