import dataclasses
import json
import math

import numpy as np
import pytest
from scipy import stats

from condapproval import simulate
from condapproval._accel import NUMBA_AVAILABLE
from condapproval.errors import DomainError
from condapproval.simulate import DEFAULT_SCENARIOS, Scenario, SimulationConfig, run_study

SMALL = SimulationConfig(n_sim=400, seed=7)


@pytest.fixture(scope="module")
def small_report():
    return run_study(SMALL, backend="numpy")


class TestScenarios:
    def test_planning_size(self):
        assert simulate.planning_n1() == pytest.approx(84.06, abs=0.005)
        assert math.ceil(simulate.planning_n1()) == 85

    def test_pre_market_powers(self):
        s1, s2, s3, _ = DEFAULT_SCENARIOS
        assert s3.pre_market_power == pytest.approx(0.9, abs=1e-12)
        assert s2.pre_market_power == pytest.approx(0.37, abs=0.01)
        assert s1.pre_market_power == pytest.approx(0.025, abs=1e-12)

    def test_invalid_scenario(self):
        with pytest.raises(DomainError):
            Scenario("bad", 0.5, 0.5, n1=0)


class TestDraws:
    def test_pre_market_above_threshold(self):
        rng = np.random.default_rng(3)
        draws = [simulate.draw_pre_market(DEFAULT_SCENARIOS[0], rng) for _ in range(2000)]
        assert min(draws) > 1.959963984540054

    def test_pre_market_distribution(self):
        # KS against scipy's truncated normal
        s2 = DEFAULT_SCENARIOS[1]
        rng = np.random.default_rng(4)
        draws = [simulate.draw_pre_market(s2, rng) for _ in range(4000)]
        a = 1.959963984540054 - s2.mu
        assert stats.kstest(draws, stats.truncnorm(a, np.inf, loc=s2.mu).cdf).pvalue > 1e-3

    def test_uniform_rows_are_counter_blocks(self):
        block = simulate.draw_uniforms(5, 2, 0, 30)
        assert block.shape == (30, simulate.DRAWS_PER_REPLICATION)
        np.testing.assert_array_equal(block[17:23], simulate.draw_uniforms(5, 2, 17, 23))
        assert ((block > 0) & (block < 1)).all()

    def test_streams_differ_by_scenario_and_seed(self):
        a = simulate.draw_uniforms(1, 0, 0, 5)
        assert not np.array_equal(a, simulate.draw_uniforms(1, 1, 0, 5))
        assert not np.array_equal(a, simulate.draw_uniforms(2, 0, 0, 5))


class TestScalarReference:
    @pytest.mark.parametrize("backend", ["numpy", pytest.param("numba", marks=pytest.mark.skipif(not NUMBA_AVAILABLE, reason="numba"))])
    def test_rows_match_run_replication(self, backend):
        config = SimulationConfig(n_sim=60, seed=11)
        report = run_study(config, backend=backend)
        for k, scenario in enumerate(config.scenarios):
            for method in config.methods:
                d = report.data[(scenario.label, method)]
                for r in range(0, config.n_sim, 7):
                    rec = simulate.run_replication(scenario, method, config, simulate.replication_rng(config.seed, k, r))
                    assert rec.z1 == pytest.approx(d.z1[r], abs=1e-12)
                    assert rec.n2 == d.n2[r]
                    assert rec.c == pytest.approx(d.c[r], rel=1e-12)
                    assert rec.z2i == pytest.approx(d.z2i[r], abs=1e-12)
                    assert rec.z2 == pytest.approx(d.z2[r], abs=1e-12)
                    assert rec.significant == bool(d.significant[r])
                    assert rec.interim_power == pytest.approx(d.interim_power[r], abs=1e-10)


class TestDeterminism:
    def test_workers_do_not_matter(self, small_report):
        for workers in (3, 4):
            other = run_study(SMALL, workers=workers, backend="numpy")
            assert other.to_json() == small_report.to_json()
            assert other.to_csv() == small_report.to_csv()
            assert other.replications_csv() == small_report.replications_csv()

    @pytest.mark.skipif(not NUMBA_AVAILABLE, reason="numba not installed")
    def test_backends_agree(self, small_report):
        other = run_study(SMALL, backend="numba")
        for a, b in zip(other.cells, small_report.cells):
            assert a.rejection_rate == b.rejection_rate
            assert a.median_n2 == b.median_n2
            assert a.max_n2 == b.max_n2
            assert a.futility_stop_rate == b.futility_stop_rate

    def test_seed_changes_results(self, small_report):
        other = run_study(dataclasses.replace(SMALL, seed=8), backend="numpy")
        assert other.to_json() != small_report.to_json()

    def test_common_random_numbers(self, small_report):
        for s in ("S1", "S2", "S3", "S4"):
            z1 = [small_report.data[(s, m)].z1 for m in simulate.METHODS]
            assert all(np.array_equal(z1[0], z) for z in z1[1:])


class TestReport:
    def test_support(self, small_report):
        for d in small_report.data.values():
            ok = d.n2 > 0
            assert (d.z1 > 1.959963984540054).all()
            assert (d.n2[ok] >= 1).all() and (d.c[ok] > 0).all()

    def test_mc_se(self, small_report):
        for c in small_report.cells:
            assert c.mc_se == pytest.approx(math.sqrt(c.rejection_rate * (1 - c.rejection_rate) / c.n_sim), rel=1e-14)

    def test_max_below_suprema(self, small_report):
        for c in small_report.cells:
            scenario = next(s for s in DEFAULT_SCENARIOS if s.label == c.scenario)
            assert c.max_n2 <= simulate.analytic_max_n2(c.method, scenario)

    def test_analytic_suprema(self):
        s = DEFAULT_SCENARIOS[0]
        assert [simulate.analytic_max_n2(m, s) for m in simulate.METHODS] == [230, 293, 326]

    def test_winners_curse(self, small_report):
        for s in DEFAULT_SCENARIOS:
            assert small_report.cell(s.label, "T").mean_z1 > s.mu

    def test_median_is_pre_ceiling(self, small_report):
        c = small_report.cell("S2", "H_u")
        d = small_report.data[("S2", "H_u")]
        assert c.median_n2_exact == pytest.approx(np.median(d.c * DEFAULT_SCENARIOS[1].n1), rel=1e-14)
        assert c.median_n2 == np.round(c.median_n2_exact)
        assert c.median_n2_ceiled == np.median(d.n2)

    def test_json_round_trip(self, small_report):
        payload = json.loads(small_report.to_json())
        assert payload["schema_version"] == simulate.SCHEMA_VERSION
        restored = SimulationConfig.from_dict(payload["config"])
        assert restored == SMALL
        first = payload["cells"][0]
        assert first["rejection_rate"] == small_report.cells[0].rejection_rate

    def test_csv_round_trip(self, small_report):
        rows = small_report.to_csv().splitlines()[1:]
        values = {(s, m, k): float(v) for s, m, k, v in (r.split(",") for r in rows)}
        for c in small_report.cells:
            for k, v in c.metrics().items():
                assert values[(c.scenario, c.method, k)] == float(v)

    def test_null_calibration(self):
        # no true post-market effect, a very large post-market trial: only
        # the threshold matters and rejection stays at the nominal level
        config = SimulationConfig(n_sim=20_000, seed=2, scenarios=(Scenario("null", 0.5, 0.0),))
        report = run_study(config, backend="numpy", keep_data=False)
        t = report.cell("null", "T")
        assert t.rejection_rate == pytest.approx(0.025, abs=4 * math.sqrt(0.025 * 0.975 / 20_000))
        # harmonic thresholds are above z_alpha for most z1 and below for large z1
        assert report.cell("null", "H_u").rejection_rate < 0.05


class TestConfig:
    def test_rejects_unknown_keys(self):
        with pytest.raises(DomainError, match="unknown config keys"):
            SimulationConfig.from_dict({"n_sim": 10, "nsims": 10})

    def test_rejects_unknown_scenario_keys(self):
        with pytest.raises(DomainError):
            SimulationConfig.from_dict({"scenarios": [{"label": "x", "theta1": 0.5, "theta2": 0.5, "power": 0.8}]})

    @pytest.mark.parametrize("bad", [{"n_sim": 0}, {"methods": ["Z"]}, {"shrinkage": 1.0}, {"interim_fraction": 1.0}, {"seed": -1}])
    def test_validation(self, bad):
        with pytest.raises(DomainError):
            SimulationConfig.from_dict(bad)

    def test_shrinkage_quadruples_c(self):
        base = run_study(SimulationConfig(n_sim=50, seed=3, methods=("T",)), backend="numpy")
        half = run_study(SimulationConfig(n_sim=50, seed=3, methods=("T",), shrinkage=0.5), backend="numpy")
        np.testing.assert_allclose(half.data[("S3", "T")].c, 4 * base.data[("S3", "T")].c, rtol=1e-13)


class TestRequiredNsim:
    def test_values(self):
        assert simulate.required_nsim(0.5, 0.005) == 10_000
        assert simulate.required_nsim(0.5, 0.05) == 100

    def test_domain(self):
        with pytest.raises(DomainError):
            simulate.required_nsim(1.0, 0.01)
