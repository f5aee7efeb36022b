"""End-to-end runs of every subcommand through the console entry point."""

import json
import math

import numpy as np
import pytest

from zenometry.cli import main


def run(tmp_path, command, config_text=None, extra=(), name="exp.ini"):
    argv = [command, "--out", str(tmp_path / "out")]
    if config_text is not None:
        path = tmp_path / name
        path.write_text(config_text)
        argv += ["--config", str(path)]
    argv += list(extra)
    rc = main(argv)
    summary = None
    summary_path = tmp_path / "out" / "summary.json"
    if summary_path.is_file():
        summary = json.loads(summary_path.read_text())
    return rc, summary


def read_csv(path):
    lines = path.read_text().splitlines()
    comments = [l[2:] for l in lines if l.startswith("# ")]
    body = [l for l in lines if not l.startswith("# ")]
    header = body[0].split(",")
    rows = [dict(zip(header, line.split(","))) for line in body[1:]]
    return comments, header, rows


class TestFringe:
    def test_analytic(self, tmp_path):
        rc, summary = run(tmp_path, "fringe",
                          "[fringe]\nn_values = 1, 2\nvisibilities = 0.9\n")
        assert rc == 0
        assert summary["subcommand"] == "fringe"
        assert summary["mode"] == "analytic"
        for n in (1, 2):
            comments, header, rows = read_csv(
                tmp_path / "out" / f"fringe_n{n}.csv")
            assert header == ["theta", "n_plus", "n_total", "estimate",
                              "stderr"]
            assert all(r["n_total"] == "0" for r in rows)
            assert all(float(r["stderr"]) == 0.0 for r in rows)
            assert any(c.startswith("config_sha256=") for c in comments)
        fit2 = summary["per_n"]["2"]
        t = fit2["interrogation_time"]
        assert t == pytest.approx(math.sqrt(1.0 / 8.0), rel=1e-12)
        assert fit2["amplitude"] == pytest.approx(
            0.9 * math.exp(-2.0 * t**2), abs=1e-9)

    def test_montecarlo_counts_present(self, tmp_path):
        rc, summary = run(
            tmp_path, "fringe",
            "[fringe]\nn_values = 2\nmode = montecarlo\nseed = 5\n"
            "shots_per_setting = 2000\n")
        assert rc == 0
        _, _, rows = read_csv(tmp_path / "out" / "fringe_n2.csv")
        assert sum(int(r["n_total"]) for r in rows) > 0
        assert summary["seed"] == 5

    def test_seed_flag_changes_samples(self, tmp_path):
        text = ("[fringe]\nn_values = 2\nmode = montecarlo\nseed = 5\n"
                "shots_per_setting = 2000\n")
        run(tmp_path, "fringe", text)
        first = (tmp_path / "out" / "fringe_n2.csv").read_text()
        rc = main(["fringe", "--config", str(tmp_path / "exp.ini"),
                   "--out", str(tmp_path / "out2"), "--seed", "6"])
        assert rc == 0
        second = (tmp_path / "out2" / "fringe_n2.csv").read_text()
        assert first != second

    def test_rerun_is_byte_identical(self, tmp_path):
        text = ("[fringe]\nn_values = 1, 2\nmode = montecarlo\nseed = 11\n"
                "shots_per_setting = 3000\n")
        run(tmp_path, "fringe", text)
        rc = main(["fringe", "--config", str(tmp_path / "exp.ini"),
                   "--out", str(tmp_path / "out2")])
        assert rc == 0
        for name in ("fringe_n1.csv", "fringe_n2.csv", "summary.json"):
            assert (tmp_path / "out" / name).read_bytes() == \
                (tmp_path / "out2" / name).read_bytes()


class TestScaling:
    def test_analytic_closed_forms(self, tmp_path):
        rc, summary = run(tmp_path, "scaling", "[scaling]\nn_values = 1..6\n")
        assert rc == 0
        _, header, rows = read_csv(tmp_path / "out" / "resolution_raw.csv")
        assert header == ["N", "strategy", "t_opt", "d2omegaT", "fisher",
                          "stderr_fisher"]
        for row in rows:
            n = int(row["N"])
            expected = 2.0 * math.sqrt(math.e) / n**1.5
            assert float(row["d2omegaT"]) == pytest.approx(expected,
                                                           rel=1e-12)
            assert row["stderr_fisher"] == ""
        assert summary["slope_raw"]["slope"] == pytest.approx(-1.5,
                                                              abs=1e-9)
        # quadratic model: the bounds table is emitted and ordered
        _, _, bounds = read_csv(tmp_path / "out" / "bounds.csv")
        for row in bounds:
            assert float(row["bound_hl"]) <= float(row["bound_zl"]) \
                <= float(row["bound_sql"])

    def test_markovian_model(self, tmp_path):
        rc, summary = run(
            tmp_path, "scaling",
            "[scaling]\nmodel_kind = markovian\nmodel_coefficient = 0.5\n")
        assert rc == 0
        assert summary["slope_raw"]["slope"] == pytest.approx(-1.0, abs=1e-9)
        assert not (tmp_path / "out" / "bounds.csv").exists()

    def test_montecarlo_with_subtraction(self, tmp_path):
        rc, summary = run(
            tmp_path, "scaling",
            "[scaling]\nn_values = 1, 2, 3\nmode = montecarlo\nseed = 3\n"
            "shots_per_setting = 20000\ntrials = 100\n"
            "visibilities = 0.95, 0.9, 0.85\n")
        assert rc == 0
        _, _, raw = read_csv(tmp_path / "out" / "resolution_raw.csv")
        _, _, sub = read_csv(tmp_path / "out" / "resolution_subtracted.csv")
        assert len(raw) == len(sub) == 3
        for row in raw + sub:
            assert float(row["stderr_fisher"]) > 0.0
        # subtraction removes the visibility penalty
        for r_raw, r_sub in zip(raw, sub):
            assert float(r_sub["d2omegaT"]) < float(r_raw["d2omegaT"])
        assert summary["slope_subtracted"]["slope"] == pytest.approx(
            -1.5, abs=0.1)


class TestCompare:
    def test_analytic_sqrt_n(self, tmp_path):
        rc, summary = run(tmp_path, "compare-markovian",
                          "[compare-markovian]\nn_values = 1..6\n")
        assert rc == 0
        _, _, rows = read_csv(tmp_path / "out" / "relative_resolution.csv")
        for row in rows:
            n = int(row["N"])
            assert float(row["r_squared"]) == pytest.approx(math.sqrt(n),
                                                            rel=1e-12)
            assert float(row["r_squared_stderr"]) == 0.0
        assert summary["r_squared"]["4"] == pytest.approx(2.0, rel=1e-12)

    def test_montecarlo(self, tmp_path):
        rc, _ = run(
            tmp_path, "compare-markovian",
            "[compare-markovian]\nn_values = 2\nmode = montecarlo\nseed = 9\n"
            "shots_per_setting = 100000\ntrials = 100\n")
        assert rc == 0
        _, _, rows = read_csv(tmp_path / "out" / "relative_resolution.csv")
        row = rows[0]
        stderr = float(row["r_squared_stderr"])
        assert stderr > 0.0
        assert abs(float(row["r_squared"]) - math.sqrt(2.0)) < 5.0 * stderr

    def test_markovian_test_channel_rejected(self, tmp_path):
        rc, _ = run(tmp_path, "compare-markovian",
                    "[compare-markovian]\nmodel_kind = markovian\n")
        assert rc == 2


class TestNoiseSweep:
    def test_crossings(self, tmp_path):
        rc, summary = run(
            tmp_path, "noise-sweep",
            "[noise-sweep]\nfusion_visibilities = 0.99, 1.0\nn_max = 300\n")
        assert rc == 0
        assert summary["crossings"] == {"0.99": 280, "1.0": None}
        _, header, rows = read_csv(tmp_path / "out" / "noise_sweep.csv")
        assert header == ["fusion_visibility", "N", "d2omegaT_ghz",
                          "bound_sql", "bound_hl", "beats_sql"]
        assert len(rows) == 600
        flags = {(r["fusion_visibility"], int(r["N"])): r["beats_sql"]
                 for r in rows}
        assert flags[("0.99", 280)] == "true"
        assert flags[("0.99", 281)] == "false"

    def test_requires_quadratic(self, tmp_path):
        rc, _ = run(tmp_path, "noise-sweep",
                    "[noise-sweep]\nmodel_kind = markovian\n")
        assert rc == 2


class TestWitness:
    def test_direct_value(self, tmp_path):
        rc, summary = run(tmp_path, "witness",
                          "[witness]\nwitness_value = -0.7052\n")
        assert rc == 0
        entry = summary["witness"][0]
        assert entry["source"] == "direct"
        assert entry["fidelity_bound"] == pytest.approx(0.8526, abs=1e-12)

    def test_setting_values(self, tmp_path):
        rc, summary = run(
            tmp_path, "witness",
            "[witness]\nx_expectation = 0.8\np_all_zero = 0.45\n"
            "p_all_one = 0.44\n")
        assert rc == 0
        entry = summary["witness"][0]
        assert entry["source"] == "settings"
        expected = 3.0 - (0.8 + 1.0) - 2.0 * (0.45 + 0.44)
        assert entry["w_value"] == pytest.approx(expected, rel=1e-12)

    def test_oracle_route(self, tmp_path):
        rc, summary = run(
            tmp_path, "witness",
            "[witness]\nfusion_visibility = 0.9\nn_values = 2, 3, 4\n")
        assert rc == 0
        _, _, rows = read_csv(tmp_path / "out" / "witness.csv")
        assert [r["source"] for r in rows] == ["oracle"] * 3
        for row in rows:
            n = int(row["N"])
            v = 0.9 ** (n / 2.0)
            expected = 2.0 - 3.0 * v - 2.0 ** (2 - n) * (1.0 - v)
            assert float(row["w_value"]) == pytest.approx(expected,
                                                          abs=1e-12)

    def test_no_source_rejected(self, tmp_path):
        rc, _ = run(tmp_path, "witness", "[witness]\nseed = 1\n")
        assert rc == 2


class TestChannelCalibration:
    def test_bundled_table(self, tmp_path):
        rc, summary = run(tmp_path, "channel-calibration", None)
        assert rc == 0
        assert summary["rows"] == 8
        assert summary["max_abs_residual"] < 0.05
        _, _, rows = read_csv(tmp_path / "out" / "calibration.csv")
        for row in rows:
            assert abs(float(row["residual"])) < 0.05
            x0 = float(row["total_separation_mm"])
            d = float(row["per_bd_displacement_mm"])
            assert x0 == pytest.approx(math.sqrt(2.0) * d, rel=1e-12)

    def test_bad_table_rejected(self, tmp_path):
        bad = tmp_path / "table.csv"
        bad.write_text("per_bd_displacement_mm,intensity_plus\n1.0,2.0\n")
        rc, _ = run(tmp_path, "channel-calibration",
                    f"[channel-calibration]\ntable_csv = {bad}\n")
        assert rc == 2


class TestErrorPaths:
    def test_unknown_config_key(self, tmp_path):
        rc, _ = run(tmp_path, "fringe", "[fringe]\nqubits = 3\n")
        assert rc == 2

    def test_runtime_failure(self, tmp_path):
        # interrogation beyond the tabulated range: a run-time, not config, error
        table = tmp_path / "gamma.csv"
        table.write_text("t,gamma\n0.5,0.1\n")
        rc, summary = run(
            tmp_path, "fringe",
            f"[fringe]\nmodel_kind = tabulated\nmodel_csv = {table}\n"
            "interrogation_time = 2.0\nn_values = 2\n")
        assert rc == 1
        assert summary is None

    def test_summary_is_sorted_json(self, tmp_path):
        rc, _ = run(tmp_path, "witness", "[witness]\nwitness_value = -0.5\n")
        assert rc == 0
        text = (tmp_path / "out" / "summary.json").read_text()
        payload = json.loads(text)
        assert text == json.dumps(payload, indent=2, sort_keys=True) + "\n"
        assert "config_sha256" in payload
