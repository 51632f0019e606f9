"""Figure-ready curves as lists of flat rows (no plotting)."""

from __future__ import annotations

import numpy as np

from . import design, evidence, superiority
from .errors import NecessaryConditionViolated, NoTrialRequired
from .evidence import DEFAULT_ALPHA, NO_TRIAL_REQUIRED, UNWEIGHTED, WEIGHTED_3_2, Method
from .specialfn import _ndtri_upper

FIGURES = ("bounds", "ratios", "superiority")

Row = dict[str, float | str]


def default_p1_grid(lo: float = 1e-5, hi: float = 0.1, num: int = 101) -> list[float]:
    return [float(x) for x in np.geomspace(lo, hi, num)]


def bound_curves(p1_grid: list[float] | None = None, alpha: float = DEFAULT_ALPHA, gamma: float | None = None) -> list[Row]:
    """Largest sufficient post-market p-value as a function of ``p1``, per method.

    Fisher's bound is reported as 1 once no post-market trial is required;
    a bound of 0 means no post-market result can rescue the pre-market one.
    """
    gamma = alpha * alpha if gamma is None else gamma
    rows = []
    for p1 in p1_grid or default_p1_grid():
        z1 = _ndtri_upper(p1)
        row: Row = {"p1": p1, "twotrials": evidence.two_trials_bound(p1, alpha)}
        for name, weights in (("harmonic", UNWEIGHTED), ("harmonic-weighted", WEIGHTED_3_2)):
            try:
                row[name] = evidence.harmonic_post_bound(z1, weights, gamma)[1]
            except NecessaryConditionViolated:
                row[name] = 0.0
        fisher = evidence.fisher_bound(p1, gamma)
        row["fisher"] = 1.0 if fisher is NO_TRIAL_REQUIRED else fisher
        row["stouffer"] = evidence.stouffer_bound(z1, gamma)
        rows.append(row)
    return rows


def ratio_curves(
    p1_grid: list[float] | None = None,
    shrinkages: tuple[float, ...] = (0.0, 0.5),
    power: float = 0.9,
    alpha: float = DEFAULT_ALPHA,
    gamma: float | None = None,
) -> list[Row]:
    """Variance ratio ``c`` against ``p1`` for each method and shrinkage."""
    rows = []
    for s in shrinkages:
        for p1 in p1_grid or default_p1_grid(hi=alpha):
            z1 = _ndtri_upper(p1)
            for method in (Method.TWO_TRIALS, Method.HARMONIC_UNWEIGHTED, Method.HARMONIC_WEIGHTED, Method.STOUFFER):
                try:
                    target = design.post_market_threshold(method, z1, alpha=alpha, gamma=gamma)
                except (NecessaryConditionViolated, NoTrialRequired):
                    continue
                rows.append({
                    "shrinkage": s,
                    "p1": p1,
                    "method": method.value,
                    "c": design.variance_ratio(z1, target, power, s),
                })
    return rows


def superiority_curves(
    power_grid: list[float] | None = None, alpha: float = DEFAULT_ALPHA, gamma: float | None = None
) -> list[Row]:
    """Region probabilities against pre-market power, unweighted and 3:2 weighted."""
    grid = power_grid or [round(x, 4) for x in np.linspace(0.01, 0.99, 99)]
    rows = []
    for label, weights in (("harmonic", UNWEIGHTED), ("harmonic-weighted", WEIGHTED_3_2)):
        for p in grid:
            regions = superiority.superiority_probabilities(p, alpha, gamma, weights)
            rows.append({"weights": label, **regions.as_row()})
    return rows


def figure_rows(which: str, **kwargs) -> list[Row]:
    if which == "bounds":
        return bound_curves(**kwargs)
    if which == "ratios":
        return ratio_curves(**kwargs)
    if which == "superiority":
        return superiority_curves(**kwargs)
    raise ValueError(f"unknown figure {which!r}; expected one of {FIGURES}")
