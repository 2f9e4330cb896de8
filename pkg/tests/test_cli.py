import csv
import json
import math

import numpy as np
import pytest

from onebit_rip.cli import ConfigError, _resolve_threads, main
from onebit_rip.embedding import BitCode


def write_config(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestMetricTable:
    def test_reference_rows(self, tmp_path):
        cfg = write_config(tmp_path, "c.json", {
            "rho_grid": [-1.0, -0.25, 0.0, 1.0],
            "sigma_grid": [0.0, 1.0],
        })
        out = str(tmp_path / "t.csv")
        assert main(["metric-table", "--config", cfg, "--out", out]) == 0
        rows = read_csv(out)
        by_key = {(r["rho"], r["sigma"]): r for r in rows}
        anti = by_key[("-1", "1")]
        assert float(anti["d"]) == 1.0
        assert float(anti["d_sigma"]) == 0.5
        assert float(anti["gap"]) == 0.5
        for r in rows:
            if r["sigma"] == "0":
                assert r["d"] == r["d_sigma"]
            assert float(r["gap"]) <= float(r["antipodal_gap"]) + 1e-12

    def test_manifest_written(self, tmp_path):
        cfg = write_config(tmp_path, "c.json", {"rho_grid": [0.0], "sigma_grid": [0.0]})
        out = str(tmp_path / "t.csv")
        assert main(["metric-table", "--config", cfg, "--out", out]) == 0
        manifest = json.loads((tmp_path / "t.csv.manifest.json").read_text())
        assert manifest["command"] == "metric-table"
        assert manifest["checks_passed"] is True
        assert manifest["config"]["rho_grid"] == [0.0]
        assert "started_at" in manifest and "finished_at" in manifest


class TestEmbedMc:
    def test_orthogonal_noiseless(self, tmp_path):
        cfg = write_config(tmp_path, "c.json", {
            "n": 8, "rho": 0.0, "sigma": 0.0, "m": 100_000, "trials": 4, "seed": 7,
        })
        out = str(tmp_path / "mc.csv")
        assert main(["embed-mc", "--config", cfg, "--out", out]) == 0
        rows = read_csv(out)
        assert len(rows) == 4
        for r in rows:
            assert float(r["predicted"]) == 0.5
            assert r["inside_ci"] == "1"

    def test_orthogonal_sigma_one_predicts_one_third(self, tmp_path):
        cfg = write_config(tmp_path, "c.json", {
            "n": 8, "rho": 0.0, "sigma": 1.0, "m": 50_000, "trials": 3, "seed": 8,
        })
        out = str(tmp_path / "mc.csv")
        assert main(["embed-mc", "--config", cfg, "--out", out]) == 0
        rows = read_csv(out)
        for r in rows:
            assert float(r["predicted"]) == pytest.approx(1.0 / 3.0, abs=1e-15)

    def test_identical_signals_give_zero(self, tmp_path):
        cfg = write_config(tmp_path, "c.json", {
            "n": 8, "rho": 1.0, "sigma": 0.0, "m": 10_000, "trials": 3, "seed": 9,
        })
        out = str(tmp_path / "mc.csv")
        assert main(["embed-mc", "--config", cfg, "--out", out]) == 0
        for r in read_csv(out):
            assert float(r["empirical_hamming"]) == 0.0
            assert float(r["predicted"]) == 0.0
            assert r["inside_ci"] == "1"

    def test_ci_policy_failure_exits_one(self, tmp_path):
        cfg = write_config(tmp_path, "c.json", {
            "n": 8, "rho": 0.0, "sigma": 0.0, "m": 1000, "trials": 4, "seed": 10,
            "z": 1e-6,
        })
        out = str(tmp_path / "mc.csv")
        assert main(["embed-mc", "--config", cfg, "--out", out]) == 1

    def test_dump_codes_round_trip(self, tmp_path):
        m, trials = 300, 3
        cfg = write_config(tmp_path, "c.json", {
            "n": 8, "rho": 0.3, "sigma": 0.0, "m": m, "trials": trials, "seed": 11,
        })
        out = str(tmp_path / "mc.csv")
        assert main(["embed-mc", "--config", cfg, "--out", out, "--dump-codes"]) == 0
        blob = (tmp_path / "mc.csv.codes").read_bytes()
        words = (m + 63) // 64
        record = 8 + 8 * words
        assert len(blob) == record * 2 * trials
        for k in range(2 * trials):
            code = BitCode.from_bytes(blob[k * record:(k + 1) * record])
            assert code.length == m


class TestRipSweepCli:
    def _config(self, tmp_path, **overrides):
        payload = {
            "n": 32, "s": 3, "sigma": 0.0,
            "m_grid": [64, 128, 256, 512], "trials": 4, "pairs_per_trial": 50,
            "seed": 12, "slope_band": [-0.8, -0.2], "min_r_squared": 0.8,
        }
        payload.update(overrides)
        return write_config(tmp_path, "rs.json", payload)

    def test_summary_row_and_exit_zero(self, tmp_path):
        cfg = self._config(tmp_path)
        out = str(tmp_path / "rs.csv")
        assert main(["rip-sweep", "--config", cfg, "--out", out]) == 0
        rows = read_csv(out)
        trial_rows = [r for r in rows if r["kind"] == "trial"]
        summary = [r for r in rows if r["kind"] == "summary"]
        assert len(trial_rows) == 4 * 4
        assert len(summary) == 1
        assert -0.8 <= float(summary[0]["slope"]) <= -0.2

    def test_threads_do_not_change_bytes(self, tmp_path):
        cfg = self._config(tmp_path)
        out1, out2 = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
        assert main(["rip-sweep", "--config", cfg, "--out", out1, "--threads", "1"]) == 0
        assert main(["rip-sweep", "--config", cfg, "--out", out2, "--threads", "3"]) == 0
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_seed_flag_overrides_config(self, tmp_path):
        cfg = self._config(tmp_path)
        out = str(tmp_path / "rs.csv")
        assert main(["rip-sweep", "--config", cfg, "--out", out, "--seed", "99"]) == 0
        manifest = json.loads((tmp_path / "rs.csv.manifest.json").read_text())
        assert manifest["seed"] == 99

    def test_slope_band_failure_exits_one(self, tmp_path):
        cfg = self._config(tmp_path, slope_band=[-0.01, 0.0])
        out = str(tmp_path / "rs.csv")
        assert main(["rip-sweep", "--config", cfg, "--out", out]) == 1

    def test_unknown_key_rejected(self, tmp_path):
        cfg = self._config(tmp_path, bogus=1)
        assert main(["rip-sweep", "--config", cfg, "--out", str(tmp_path / "x.csv")]) == 2

    def test_bad_grid_rejected(self, tmp_path):
        cfg = self._config(tmp_path, m_grid=[512, 64])
        assert main(["rip-sweep", "--config", cfg, "--out", str(tmp_path / "x.csv")]) == 2


class TestNoisyFloorCli:
    def test_small_run_passes(self, tmp_path):
        cfg = write_config(tmp_path, "nf.json", {
            "n": 32, "s": 3, "sigma": 1.0, "m_grid": [1024, 8192],
            "trials": 2, "pairs_per_trial": 100, "seed": 13, "slack": 0.05,
        })
        out = str(tmp_path / "nf.csv")
        assert main(["noisy-floor", "--config", cfg, "--out", out]) == 0
        rows = read_csv(out)
        metrics = {r["metric"] for r in rows if r["kind"] == "trial"}
        assert metrics == {"geodesic", "distorted"}
        summary = [r for r in rows if r["kind"] == "summary"][0]
        assert summary["passed"] == "1"
        assert float(summary["floor"]) == 0.5

    def test_sigma_zero_rejected(self, tmp_path):
        cfg = write_config(tmp_path, "nf.json", {
            "n": 8, "s": 2, "sigma": 0.0, "m_grid": [64], "trials": 1,
            "pairs_per_trial": 5, "seed": 1,
        })
        assert main(["noisy-floor", "--config", cfg, "--out", str(tmp_path / "x.csv")]) == 2


class TestVcCli:
    def test_shatter_basis_with_witness_rows(self, tmp_path):
        cfg = write_config(tmp_path, "vc.json", {"mode": "shatter-basis", "s_max": 3})
        out = str(tmp_path / "vc.csv")
        assert main(["vc", "--config", cfg, "--out", out]) == 0
        rows = read_csv(out)
        checks = [r for r in rows if r["mode"] == "shatter-basis"]
        witnesses = [r for r in rows if r["mode"] == "witness"]
        assert all(r["shattered"] == "1" for r in checks)
        assert len(witnesses) == 2**1 + 2**2 + 2**3
        # witness rows carry a parseable pole
        pole = [float(v) for v in witnesses[-1]["pole"].split(";")]
        assert len(pole) == 3

    def test_random_probes(self, tmp_path):
        cfg = write_config(tmp_path, "vc.json", {"mode": "random-probes", "s_list": [2], "probes": 25, "seed": 3})
        out = str(tmp_path / "vc.csv")
        assert main(["vc", "--config", cfg, "--out", out]) == 0
        rows = read_csv(out)
        assert len(rows) == 25
        assert all(r["shattered"] == "0" for r in rows)

    def test_search_small_grid(self, tmp_path):
        cfg = write_config(tmp_path, "vc.json", {
            "mode": "search", "n_max": 4, "s_max": 2, "budget": 400, "seed": 4,
        })
        out = str(tmp_path / "vc.csv")
        assert main(["vc", "--config", cfg, "--out", out]) == 0
        for r in read_csv(out):
            assert int(r["size"]) <= float(r["upper_bound"])
            assert r["ok"] == "1"

    def test_lambert_mode(self, tmp_path):
        cfg = write_config(tmp_path, "vc.json", {"mode": "lambert", "grid_points": 512})
        out = str(tmp_path / "vc.csv")
        assert main(["vc", "--config", cfg, "--out", out]) == 0
        rows = read_csv(out)
        summary = [r for r in rows if r["mode"] == "summary"][0]
        assert float(summary["relative_residual"]) <= 1e-12

    def test_packing_mode(self, tmp_path):
        cfg = write_config(tmp_path, "vc.json", {
            "mode": "packing", "n": 6, "s": 2, "t_grid": [0.5, 0.3],
            "candidates": 100, "empirical_points": 512, "seed": 5,
        })
        out = str(tmp_path / "vc.csv")
        assert main(["vc", "--config", cfg, "--out", out]) == 0
        rows = [r for r in read_csv(out) if r["mode"] == "packing"]
        counts = [int(r["count"]) for r in rows]
        assert counts[0] <= counts[1]

    def test_unknown_mode_rejected(self, tmp_path):
        cfg = write_config(tmp_path, "vc.json", {"mode": "???"})
        assert main(["vc", "--config", cfg, "--out", str(tmp_path / "x.csv")]) == 2


class TestConfigHandling:
    def test_missing_required_key(self, tmp_path):
        cfg = write_config(tmp_path, "c.json", {"rho_grid": [0.0]})
        assert main(["metric-table", "--config", cfg, "--out", str(tmp_path / "x.csv")]) == 2

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        assert main(["metric-table", "--config", str(path), "--out", str(tmp_path / "x.csv")]) == 2

    def test_missing_file(self, tmp_path):
        assert main(["metric-table", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path / "x.csv")]) == 2

    def test_out_required_somewhere(self, tmp_path):
        cfg = write_config(tmp_path, "c.json", {"rho_grid": [0.0], "sigma_grid": [0.0]})
        assert main(["metric-table", "--config", cfg]) == 2

    def test_bad_seed_rejected(self, tmp_path):
        cfg = write_config(tmp_path, "c.json", {"rho_grid": [0.0], "sigma_grid": [0.0], "seed": -3})
        assert main(["metric-table", "--config", cfg, "--out", str(tmp_path / "x.csv")]) == 2

    def test_wrong_value_type(self, tmp_path):
        cfg = write_config(tmp_path, "c.json", {"rho_grid": "all", "sigma_grid": [0.0]})
        assert main(["metric-table", "--config", cfg, "--out", str(tmp_path / "x.csv")]) == 2


class TestThreadsResolution:
    def test_flag_wins(self, monkeypatch):
        monkeypatch.setenv("ONEBIT_RIP_THREADS", "5")
        assert _resolve_threads(2) == 2

    def test_env_fallback(self, monkeypatch):
        monkeypatch.setenv("ONEBIT_RIP_THREADS", "5")
        assert _resolve_threads(None) == 5

    def test_default_single(self, monkeypatch):
        monkeypatch.delenv("ONEBIT_RIP_THREADS", raising=False)
        assert _resolve_threads(None) == 1

    def test_invalid_env(self, monkeypatch):
        monkeypatch.setenv("ONEBIT_RIP_THREADS", "zero")
        with pytest.raises(ConfigError):
            _resolve_threads(None)
        monkeypatch.setenv("ONEBIT_RIP_THREADS", "0")
        with pytest.raises(ConfigError):
            _resolve_threads(None)
