"""Monte Carlo study of post-market trials designed from a significant pre-market trial.

Each scenario fixes the true standardized effects of both trials. A
replication draws the pre-market z-value from a normal truncated to
``[z_{1-alpha}, inf)``, sizes the post-market trial for 90% power to detect
the pre-market estimate under each method, simulates the interim and final
post-market z-values, and records significance and the informed predictive
power at the interim look.

Random numbers: replication ``r`` of scenario ``k`` consumes the four
uniforms produced by Philox counter ``r`` under the key derived from
``(seed, k)``. All methods share those draws, and any split of the
replications over workers reproduces the same numbers.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _kernels, design, evidence, interim
from .errors import DomainError, NecessaryConditionViolated
from .evidence import WeightPair
from .specialfn import TruncNormParams, _ndtr_upper, _ndtri, _ndtri_upper, truncnorm_ppf

SCHEMA_VERSION = 1
DRAWS_PER_REPLICATION = 4

METHODS = ("T", "H_u", "H_w")
QUANTILES = (0.1, 0.25, 0.5, 0.75, 0.9)


def planning_n1(theta: float = 0.5, alpha: float = 0.025, power: float = 0.9, sigma: float = 1.0) -> float:
    """Unrounded per-group size giving ``power`` to detect ``theta`` at level ``alpha``.

    For the defaults this is 84.06, i.e. 85 patients after rounding up. The
    simulation uses the unrounded value so that the pre-market mean equals
    ``z_{1-alpha} + z_{1-beta}`` exactly for ``theta = 0.5``.
    """
    return 2.0 * sigma**2 * (_ndtri_upper(alpha) + _ndtri(power)) ** 2 / theta**2


@dataclass(frozen=True)
class Scenario:
    label: str
    theta1: float
    theta2: float
    n1: float = field(default_factory=planning_n1)
    sigma: float = 1.0
    alpha: float = 0.025
    target_power: float = 0.9

    def __post_init__(self):
        if not self.n1 >= 1:
            raise DomainError("n1 must be at least 1")
        if not self.sigma > 0.0:
            raise DomainError("sigma must be positive")
        if not 0.0 < self.alpha < 0.5:
            raise DomainError("alpha must lie in (0, 0.5)")
        if not 0.0 < self.target_power < 1.0:
            raise DomainError("target_power must lie in (0, 1)")

    @property
    def mu(self) -> float:
        """Mean of the untruncated pre-market z-value."""
        return self.theta1 * math.sqrt(self.n1) / (math.sqrt(2.0) * self.sigma)

    @property
    def pre_market_power(self) -> float:
        return _ndtr_upper(_ndtri_upper(self.alpha) - self.mu)


DEFAULT_SCENARIOS = (
    Scenario("S1", 0.0, 0.0),
    Scenario("S2", 0.25, 0.25),
    Scenario("S3", 0.5, 0.5),
    Scenario("S4", 0.5, 0.25),
)


@dataclass(frozen=True)
class SimulationConfig:
    n_sim: int = 10_000
    seed: int = 1
    methods: tuple[str, ...] = METHODS
    weights: WeightPair = evidence.WEIGHTED_3_2
    shrinkage: float = 0.0
    interim_fraction: float = 0.5
    futility_threshold: float = interim.DEFAULT_FUTILITY
    gamma: float | None = None
    scenarios: tuple[Scenario, ...] = DEFAULT_SCENARIOS

    def __post_init__(self):
        if self.n_sim < 1:
            raise DomainError("n_sim must be at least 1")
        if not self.methods:
            raise DomainError("at least one method is required")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise DomainError(f"unknown methods {sorted(unknown)}; expected a subset of {METHODS}")
        if not 0.0 <= self.shrinkage < 1.0:
            raise DomainError("shrinkage must lie in [0, 1)")
        if not 0.0 < self.interim_fraction < 1.0:
            raise DomainError("interim_fraction must lie in (0, 1)")
        if not 0.0 <= self.futility_threshold <= 1.0:
            raise DomainError("futility_threshold must lie in [0, 1]")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        if not self.scenarios:
            raise DomainError("at least one scenario is required")

    def method_weights(self, method: str) -> WeightPair:
        return self.weights if method == "H_w" else evidence.UNWEIGHTED

    def gamma_for(self, scenario: Scenario) -> float:
        return scenario.alpha**2 if self.gamma is None else self.gamma

    def to_dict(self) -> dict:
        return {
            "n_sim": self.n_sim,
            "seed": self.seed,
            "methods": list(self.methods),
            "weights": [self.weights.w1, self.weights.w2],
            "shrinkage": self.shrinkage,
            "interim_fraction": self.interim_fraction,
            "futility_threshold": self.futility_threshold,
            "gamma": self.gamma,
            "scenarios": [asdict(s) for s in self.scenarios],
        }

    @classmethod
    def from_dict(cls, data: dict) -> SimulationConfig:
        """Build a config from parsed JSON, rejecting unknown keys."""
        allowed = {"n_sim", "seed", "methods", "weights", "shrinkage", "interim_fraction", "futility_threshold", "gamma", "scenarios"}
        unknown = set(data) - allowed
        if unknown:
            raise DomainError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(data)
        if "methods" in kwargs:
            kwargs["methods"] = tuple(kwargs["methods"])
        if "weights" in kwargs:
            w = kwargs["weights"]
            kwargs["weights"] = WeightPair(*w) if isinstance(w, (list, tuple)) else WeightPair(**w)
        if "scenarios" in kwargs:
            scenarios = []
            for s in kwargs["scenarios"]:
                extra = set(s) - {"label", "theta1", "theta2", "n1", "sigma", "alpha", "target_power"}
                if extra:
                    raise DomainError(f"unknown scenario keys: {sorted(extra)}")
                scenarios.append(Scenario(**s))
            kwargs["scenarios"] = tuple(scenarios)
        return cls(**kwargs)


def scenario_key(seed: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, index])


def replication_rng(seed: int, scenario_index: int, replication: int) -> np.random.Generator:
    """Generator positioned at the substream of one replication."""
    bitgen = np.random.Philox(scenario_key(seed, scenario_index))
    bitgen.advance(replication)
    return np.random.Generator(bitgen)


def draw_uniforms(seed: int, scenario_index: int, start: int, stop: int) -> np.ndarray:
    """Uniforms in (0, 1) for replications ``start..stop - 1``, one row each."""
    rng = replication_rng(seed, scenario_index, start)
    return _open_unit(rng.random((stop - start, DRAWS_PER_REPLICATION)))


def _open_unit(u):
    # Generator.random() lies in [0, 1); map the single excluded endpoint inside
    return np.where(u == 0.0, 2.0**-54, u)


def _pre_market_params(scenario: Scenario) -> TruncNormParams:
    return TruncNormParams(scenario.mu, 1.0, _ndtri_upper(scenario.alpha), math.inf)


def draw_pre_market(scenario: Scenario, rng: np.random.Generator) -> float:
    """One pre-market z-value given significance at level ``alpha``."""
    u = float(_open_unit(rng.random()))
    return truncnorm_ppf(_pre_market_params(scenario), u)


@dataclass(frozen=True)
class ReplicationRecord:
    z1: float
    n2: int
    c: float
    z2: float
    z2i: float
    significant: bool
    futility_stop: bool
    interim_power: float


def run_replication(scenario: Scenario, method: str, config: SimulationConfig, rng: np.random.Generator) -> ReplicationRecord:
    """Scalar reference implementation of one replication.

    Consumes one row of four uniforms from ``rng``; with the generator from
    :func:`replication_rng` it reproduces the corresponding row of
    :func:`run_study` through the public design, evidence and interim modules.
    """
    u = _open_unit(rng.random(DRAWS_PER_REPLICATION))
    z1 = truncnorm_ppf(_pre_market_params(scenario), float(u[0]))
    e_int, e_rest = _ndtri(float(u[1])), _ndtri(float(u[2]))

    gamma = config.gamma_for(scenario)
    if method == "T":
        target = design.post_market_threshold("twotrials", z1, alpha=scenario.alpha)
    else:
        try:
            target = evidence.harmonic_post_bound(z1, config.method_weights(method), gamma)[0]
        except NecessaryConditionViolated:
            nan = math.nan
            return ReplicationRecord(z1, 0, nan, nan, nan, False, False, nan)
    c = design.variance_ratio(z1, target, scenario.target_power, config.shrinkage)
    n2 = design.post_market_n(c, scenario.n1)
    n2i = min(max(int(math.floor(config.interim_fraction * n2)), 1), n2 - 1)
    state = interim.InterimState(0.0, n2i / n2, n2, scenario.sigma)
    delta2 = scenario.theta2 / (math.sqrt(2.0) * scenario.sigma)
    z2i = delta2 * math.sqrt(n2i) + e_int
    z_rest = delta2 * math.sqrt(n2 - n2i) + e_rest
    z2 = math.sqrt(state.f) * z2i + math.sqrt(1.0 - state.f) * z_rest
    state = interim.InterimState(z2i, state.f, n2, scenario.sigma)
    belief = interim.belief_informed_predictive(z1, scenario.n1, state)
    power = interim.interim_power(state, belief, target)
    return ReplicationRecord(
        z1, n2, c, z2, z2i, z2 >= target, interim.futility_decision(power, config.futility_threshold), power
    )


def required_nsim(expected_power: float, target_mc_se: float) -> int:
    """Replications needed for a Monte Carlo standard error of ``target_mc_se``."""
    if not (0.0 < expected_power < 1.0 and 0.0 < target_mc_se < 1.0):
        raise DomainError("inputs must lie in (0, 1)")
    return design.ceil_count(expected_power * (1.0 - expected_power) / target_mc_se**2)


@dataclass(frozen=True)
class CellSummary:
    scenario: str
    method: str
    n_sim: int
    rejection_rate: float
    mc_se: float
    median_n2: float
    median_n2_exact: float
    median_n2_ceiled: float
    median_c: float
    max_n2: int
    futility_stop_rate: float
    interim_power_quantiles: tuple[tuple[float, float], ...]
    mean_z1: float
    necessary_condition_failures: int

    def metrics(self) -> dict[str, float]:
        out = {
            "rejection_rate": self.rejection_rate,
            "mc_se": self.mc_se,
            "median_n2": self.median_n2,
            "median_n2_exact": self.median_n2_exact,
            "median_n2_ceiled": self.median_n2_ceiled,
            "median_c": self.median_c,
            "max_n2": self.max_n2,
            "futility_stop_rate": self.futility_stop_rate,
            "mean_z1": self.mean_z1,
            "necessary_condition_failures": self.necessary_condition_failures,
        }
        for q, v in self.interim_power_quantiles:
            out[f"interim_power_q{q:g}"] = v
        return out


@dataclass
class CellData:
    """Per-replication arrays of one (scenario, method) cell."""

    z1: np.ndarray
    target: np.ndarray
    c: np.ndarray
    n2: np.ndarray
    n2i: np.ndarray
    z2i: np.ndarray
    z2: np.ndarray
    significant: np.ndarray
    interim_power: np.ndarray


@dataclass
class SimulationReport:
    config: SimulationConfig
    cells: list[CellSummary]
    data: dict[tuple[str, str], CellData] = field(default_factory=dict, repr=False)

    def cell(self, scenario: str, method: str) -> CellSummary:
        for c in self.cells:
            if c.scenario == scenario and c.method == method:
                return c
        raise KeyError((scenario, method))

    def to_json(self) -> str:
        payload = {
            "schema_version": SCHEMA_VERSION,
            "config": self.config.to_dict(),
            "cells": [
                {
                    **{k: v for k, v in asdict(c).items() if k != "interim_power_quantiles"},
                    "interim_power_quantiles": [[q, v] for q, v in c.interim_power_quantiles],
                }
                for c in self.cells
            ],
        }
        return json.dumps(payload, indent=2) + "\n"

    def to_csv(self) -> str:
        """Tidy CSV: one row per scenario, method and metric."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["scenario", "method", "metric", "value"])
        for c in self.cells:
            for name, value in c.metrics().items():
                writer.writerow([c.scenario, c.method, name, repr(float(value))])
        return buf.getvalue()

    def replications_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["scenario", "method", "replication", "z1", "target_z", "c", "n2", "n2i", "z2i", "z2", "significant", "interim_power"])
        for (scen, meth), d in self.data.items():
            for r in range(d.z1.shape[0]):
                writer.writerow([
                    scen, meth, r, repr(float(d.z1[r])), repr(float(d.target[r])), repr(float(d.c[r])),
                    int(d.n2[r]), int(d.n2i[r]), repr(float(d.z2i[r])), repr(float(d.z2[r])),
                    int(bool(d.significant[r])), repr(float(d.interim_power[r])),
                ])
        return buf.getvalue()


def _chunks(n: int, workers: int) -> list[tuple[int, int]]:
    workers = max(1, min(workers, n))
    bounds = np.linspace(0, n, workers + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def _run_chunk(config: SimulationConfig, index: int, scenario: Scenario, start: int, stop: int, backend):
    u = draw_uniforms(config.seed, index, start, stop)
    z_alpha = _ndtri_upper(scenario.alpha)
    z1 = _kernels.truncnorm_z1(u[:, 0], z_alpha - scenario.mu, scenario.mu, backend)
    e_int = _kernels.normal_from_uniform(u[:, 1], backend)
    e_rest = _kernels.normal_from_uniform(u[:, 2], backend)
    c_h = evidence.harmonic_critical_value(config.gamma_for(scenario))
    delta2 = scenario.theta2 / (math.sqrt(2.0) * scenario.sigma)
    out = {}
    for method in config.methods:
        w = config.method_weights(method)
        out[method] = (z1,) + _kernels.simulate_cell(
            z1, e_int, e_rest,
            n1=scenario.n1, delta2=delta2, z_power=_ndtri(scenario.target_power),
            shrinkage=config.shrinkage, fraction=config.interim_fraction,
            method=_kernels.TWO_TRIALS if method == "T" else _kernels.HARMONIC,
            w1=w.w1, w2=w.w2, c_h=c_h, z_alpha=z_alpha, backend=backend,
        )
    return out


def _summarize(scenario: Scenario, method: str, d: CellData, config: SimulationConfig) -> CellSummary:
    n = d.z1.shape[0]
    ok = d.n2 > 0
    rate = float(np.count_nonzero(d.significant)) / n
    stops = np.count_nonzero(ok & (d.interim_power < config.futility_threshold))
    valid_power = d.interim_power[ok]
    # median of the real-valued size c * n1 before the per-replication ceiling
    median_exact = float(np.median(d.c[ok] * scenario.n1)) if ok.any() else math.nan
    quantiles = tuple(
        (q, float(np.quantile(valid_power, q))) if valid_power.size else (q, math.nan) for q in QUANTILES
    )
    return CellSummary(
        scenario=scenario.label,
        method=method,
        n_sim=n,
        rejection_rate=rate,
        mc_se=math.sqrt(rate * (1.0 - rate) / n),
        median_n2=float(np.round(median_exact)),
        median_n2_exact=median_exact,
        median_n2_ceiled=float(np.median(d.n2[ok])) if ok.any() else math.nan,
        median_c=float(np.median(d.c[ok])) if ok.any() else math.nan,
        max_n2=int(d.n2.max()),
        futility_stop_rate=float(stops) / n,
        interim_power_quantiles=quantiles,
        mean_z1=float(np.mean(d.z1)),
        necessary_condition_failures=int(n - np.count_nonzero(ok)),
    )


def run_study(config: SimulationConfig = SimulationConfig(), workers: int = 1, backend: str | None = None, keep_data: bool = True) -> SimulationReport:
    """Run every (scenario, method) cell of ``config``.

    Args:
        config: Study configuration.
        workers: Number of threads; results do not depend on it.
        backend: ``"numba"``, ``"numpy"`` or None for the environment default.
        keep_data: Keep per-replication arrays on the report.
    """
    tasks = [
        (index, scenario, start, stop)
        for index, scenario in enumerate(config.scenarios)
        for start, stop in _chunks(config.n_sim, workers)
    ]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda t: _run_chunk(config, *t, backend), tasks))
    else:
        results = [_run_chunk(config, *t, backend) for t in tasks]

    cells, data = [], {}
    for index, scenario in enumerate(config.scenarios):
        parts = [r for t, r in zip(tasks, results) if t[0] == index]
        for method in config.methods:
            arrays = [np.concatenate([p[method][j] for p in parts]) for j in range(9)]
            z1, target, c, n2, n2i, z2i, z2, sig, power = arrays
            d = CellData(z1, target, c, n2, n2i, z2i, z2, sig, power)
            cells.append(_summarize(scenario, method, d, config))
            if keep_data:
                data[(scenario.label, method)] = d
    return SimulationReport(config, cells, data)


def analytic_max_n2(method: str, scenario: Scenario, weights: WeightPair = evidence.WEIGHTED_3_2, gamma: float | None = None, shrinkage: float = 0.0) -> int:
    """Largest possible post-market size, reached as ``p1`` approaches ``alpha``."""
    z_alpha = _ndtri_upper(scenario.alpha)
    gamma = scenario.alpha**2 if gamma is None else gamma
    if method == "T":
        target = z_alpha
    else:
        w = weights if method == "H_w" else evidence.UNWEIGHTED
        target = evidence.harmonic_post_bound(z_alpha, w, gamma)[0]
    return design.post_market_n(design.variance_ratio(z_alpha, target, scenario.target_power, shrinkage), scenario.n1)
