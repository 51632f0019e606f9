import csv
import io
import json
import math

import pytest

from condapproval import cli, superiority
from condapproval.errors import QuadratureError


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, _ = run(capsys, *argv, "--format", "json")
    assert code == 0
    return json.loads(out)


class TestCombine:
    def test_harmonic_fampridine(self, capsys):
        data = run_json(capsys, "combine", "--method", "harmonic", "--z1", "8.6", "--z2", "2.49")
        assert data["significant"] is True
        assert data["bound_p2"] == pytest.approx(0.062, abs=0.001)
        assert data["schema_version"] == 1

    def test_fisher_no_trial_needed(self, capsys):
        data = run_json(capsys, "combine", "--method", "fisher", "--p1", "0.00001", "--p2", "0.9")
        assert data["significant"] is True
        assert data["trial_required"] is False
        assert "not required" in data["note"]

    def test_twotrials_fails(self, capsys):
        data = run_json(capsys, "combine", "--method", "twotrials", "--p1", "0.03", "--p2", "0.001")
        assert data["significant"] is False

    def test_direction_violation_is_reported(self, capsys):
        data = run_json(capsys, "combine", "--method", "harmonic", "--z1", "3", "--z2", "-1")
        assert data["significant"] is False
        assert data["note"]

    def test_table_has_four_significant_digits(self, capsys):
        code, out, _ = run(capsys, "combine", "--method", "harmonic", "--z1", "8.6", "--z2", "2.49")
        assert code == 0
        assert "0.06232" in out

    @pytest.mark.parametrize("argv", [
        ["combine", "--method", "harmonic", "--z1", "3"],
        ["combine", "--method", "harmonic", "--z1", "3", "--p1", "0.4", "--z2", "2"],
        ["combine", "--method", "nope", "--z1", "3", "--z2", "2"],
        ["combine", "--method", "harmonic", "--p1", "1.5", "--z2", "2"],
    ])
    def test_usage_errors(self, capsys, argv):
        with pytest.raises(SystemExit) as info:
            cli.main(argv)
        assert info.value.code == 2


class TestDesign:
    ARGS = ("--z1", "8.6", "--effect-size", "0.29", "--dropout", "0.15")

    @pytest.mark.parametrize("method,total,reduction", [("harmonic", 444, 0.25), ("harmonic-weighted", 400, 0.32)])
    def test_fampridine(self, capsys, method, total, reduction):
        data = run_json(capsys, "design", "--method", method, *self.ARGS)
        assert abs(data["n_total_dropout"] - total) <= 2
        assert data["reduction_vs_twotrials"] == pytest.approx(reduction, abs=0.01)

    def test_fisher_refused(self, capsys):
        code, out, err = run(capsys, "design", "--method", "fisher", *self.ARGS)
        assert code == 3
        assert out == "" and "refused" in err

    def test_shrinkage_quadruples_c(self, capsys):
        base = run_json(capsys, "design", "--method", "harmonic", "--z1", "3.2", "--n1", "85")
        half = run_json(capsys, "design", "--method", "harmonic", "--z1", "3.2", "--n1", "85", "--shrinkage", "0.5")
        assert half["c"] == pytest.approx(4 * base["c"], rel=1e-14)

    def test_harmonic_too_weak(self, capsys):
        code, _, err = run(capsys, "design", "--method", "harmonic", "--z1", "1.2", "--n1", "85")
        assert code == 3


class TestInterim:
    def test_runs(self, capsys):
        data = run_json(capsys, "interim", "--z1", "3", "--n1", "85", "--z2i", "1.5", "--n2", "100")
        assert 0.0 <= data["interim_power"] <= 1.0
        assert data["decision"] == ("stop" if data["interim_power"] < 0.2 else "continue")

    def test_weak_interim_stops(self, capsys):
        data = run_json(capsys, "interim", "--z1", "2.1", "--n1", "85", "--z2i", "-1.5", "--n2", "200", "--belief", "cp")
        assert data["decision"] == "stop"

    @pytest.mark.parametrize("f", ["0", "1", "1.2"])
    def test_bad_fraction(self, capsys, f):
        with pytest.raises(SystemExit) as info:
            cli.main(["interim", "--z1", "3", "--n1", "85", "--z2i", "1", "--n2", "100", "--f", f])
        assert info.value.code == 2


class TestSimulate:
    def test_mc_se_reported(self, capsys):
        data = run_json(capsys, "simulate", "--nsim", "100", "--seed", "1")
        for cell in data["rows"]:
            p = cell["rejection_rate"]
            assert cell["mc_se"] == pytest.approx(math.sqrt(p * (1 - p) / 100), rel=1e-14)

    def test_byte_identical(self, capsys):
        argv = ("simulate", "--nsim", "200", "--seed", "5", "--format", "csv")
        first = run(capsys, *argv)[1]
        assert run(capsys, *argv)[1] == first
        assert run(capsys, *argv, "--workers", "3")[1] == first

    def test_report_files(self, capsys, tmp_path):
        code, _, _ = run(capsys, "simulate", "--nsim", "50", "--report-dir", str(tmp_path), "--replications", str(tmp_path / "reps.csv"))
        assert code == 0
        payload = json.loads((tmp_path / "report.json").read_text())
        assert payload["schema_version"] == 1
        assert (tmp_path / "report.csv").read_text().startswith("scenario,method,metric,value")
        assert len((tmp_path / "reps.csv").read_text().splitlines()) == 1 + 50 * 12

    def test_config_file_and_override(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"n_sim": 30, "seed": 4, "methods": ["T"]}))
        code, _, _ = run(capsys, "simulate", "--config", str(cfg), "--nsim", "40", "--report-dir", str(tmp_path))
        assert code == 0
        data = json.loads((tmp_path / "report.json").read_text())
        assert data["config"]["n_sim"] == 40 and data["config"]["seed"] == 4
        assert {c["method"] for c in data["cells"]} == {"T"}

    def test_unknown_config_key(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"n_sims": 30}))
        code, out, err = run(capsys, "simulate", "--config", str(cfg))
        assert code == 2
        assert out == "" and "n_sims" in err


class TestCurves:
    def test_superiority_spot_rows(self, capsys):
        rows = run_json(capsys, "superiority", "--powers", "0.166,0.5,0.7")["rows"]
        by_power = {r["power_pre"]: r for r in rows}
        assert by_power[0.166]["p_inferior"] == pytest.approx(0.5, abs=0.005)
        assert by_power[0.5]["p_inconclusive_smaller_n"] == 0.0
        assert by_power[0.7]["p_inferior"] == 0.0

    def test_superiority_thresholds(self, capsys):
        data = run_json(capsys, "superiority", "--num", "3")
        t = data["thresholds"]
        assert t["crossover_p1"] == pytest.approx(0.009, abs=0.0005)
        assert t["zero_inferior_power"] == pytest.approx(0.661, abs=0.003)
        assert t["half_inferior_power"] == pytest.approx(0.166, abs=0.005)

    def test_bound_curve_rows(self, capsys):
        rows = run_json(capsys, "figures", "--which", "bounds")["rows"]
        assert all(r["twotrials"] == 0.025 for r in rows if r["p1"] <= 0.025)
        last = rows[-1]
        assert last["p1"] == pytest.approx(0.1) and last["twotrials"] == 0.0
        assert last["harmonic"] == 0.0  # p1 above the necessary bound
        first = rows[0]
        assert first["fisher"] == 1.0  # no trial needed at p1 = 1e-5

    def test_ratio_curve_rows(self, capsys):
        rows = run_json(capsys, "figures", "--which", "ratios")["rows"]
        t = {(r["shrinkage"], r["p1"]): r["c"] for r in rows if r["method"] == "twotrials"}
        for (s, p1), c in t.items():
            if s == 0.5:
                assert c == pytest.approx(4 * t[(0.0, p1)], rel=1e-13)
        assert {r["shrinkage"] for r in rows} == {0.0, 0.5}

    def test_superiority_curve_rows(self, capsys):
        rows = run_json(capsys, "figures", "--which", "superiority")["rows"]
        assert {r["weights"] for r in rows} == {"harmonic", "harmonic-weighted"}
        for r in rows:
            total = r["p_superior"] + r["p_inferior"] + r["p_inconclusive_smaller_n"] + r["p_inconclusive_larger_power"]
            assert total == pytest.approx(1.0, abs=1e-8)

    def test_csv_matches_json(self, capsys):
        data = run_json(capsys, "superiority", "--powers", "0.2,0.4,0.8")["rows"]
        _, out, _ = run(capsys, "superiority", "--powers", "0.2,0.4,0.8", "--format", "csv")
        rows = list(csv.DictReader(io.StringIO(out)))
        assert len(rows) == len(data)
        for a, b in zip(rows, data):
            assert {k: float(v) for k, v in a.items()} == b

    def test_numerical_failure_exit_4(self, capsys, monkeypatch):
        def boom(*args, **kwargs):
            raise QuadratureError("forced", estimate=0.0, error=1.0, intervals=1)

        monkeypatch.setattr(superiority, "superiority_probabilities", boom)
        code, out, err = run(capsys, "superiority", "--powers", "0.5")
        assert code == 4
        assert out == "" and "forced" in err


class TestCaseStudyCommand:
    def test_json(self, capsys):
        data = run_json(capsys, "casestudy")
        assert data["z1"] == pytest.approx(8.6, abs=0.1)
        assert data["verdicts"]["stouffer"]["bound_p2"] == pytest.approx(0.999976, abs=1e-5)
        assert [data["sizing"][m]["n_total_dropout"] for m in ("twotrials", "harmonic", "harmonic-weighted")] == [590, 446, 400]

    def test_csv_values_match_json(self, capsys):
        data = run_json(capsys, "casestudy")
        _, out, _ = run(capsys, "casestudy", "--format", "csv")
        rows = dict(tuple(r) for r in csv.reader(io.StringIO(out)))
        assert float(rows["z1"]) == data["z1"]
        assert float(rows["sizing.harmonic.level"]) == data["sizing"]["harmonic"]["level"]

    def test_out_path(self, capsys, tmp_path):
        target = tmp_path / "case.json"
        code, out, _ = run(capsys, "casestudy", "--format", "json", "--out", str(target))
        assert code == 0 and out == ""
        assert json.loads(target.read_text())["schema_version"] == 1

    def test_repeatable(self, capsys):
        assert run(capsys, "casestudy")[1] == run(capsys, "casestudy")[1]
