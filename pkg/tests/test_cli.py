import json
import math
import subprocess
import sys

import numpy as np
import pytest

from pathprob.cli import run
from pathprob.lattice import LatticeConfig, straight_line_path, write_path_csv

COSINE_CONFIG = {
    "potential": {
        "lines": [{"q": 1.0, "a": 1.0, "phi": 0.0}],
        "R": 1.0,
        "K": 2 * math.pi,
    },
    "lattice": {"ta": 0.0, "tb": 1.0, "n": 4, "gamma": 0.1, "za": 0.0, "zb": 0.2},
}

FREE_CONFIG = {
    "lattice": {"ta": 0.0, "tb": 1.0, "n": 2, "gamma": 0.05, "za": 0.0, "zb": 0.0}
}


@pytest.fixture
def cosine_json(tmp_path):
    f = tmp_path / "cosine.json"
    f.write_text(json.dumps(COSINE_CONFIG))
    return str(f)


@pytest.fixture
def free_json(tmp_path):
    f = tmp_path / "free.json"
    f.write_text(json.dumps(FREE_CONFIG))
    return str(f)


def run_json(argv, tmp_path):
    out = tmp_path / "out.json"
    code = run(argv + ["--out", str(out)])
    payload = json.loads(out.read_text()) if out.exists() else None
    return code, payload


class TestPositivity:
    def test_cosine_thresholds(self, cosine_json, tmp_path):
        code, payload = run_json(
            ["positivity", "-c", cosine_json, "--gamma", "0.1"], tmp_path
        )
        assert code == 0
        assert payload["lambda_paper"] == pytest.approx(0.01, rel=1e-10)
        # strict threshold from the certified supremum (the leading-order
        # value 1/100 would fail the zero-tolerance positivity test)
        assert payload["lambda_strict"] == pytest.approx(1 / 101.73588140386153, rel=1e-8)
        assert payload["witness"]["q_at_threshold"] >= 0
        assert payload["witness"]["q_above_threshold"] < 0

    def test_gamma_required(self, tmp_path):
        f = tmp_path / "pot.json"
        f.write_text(json.dumps({"potential": COSINE_CONFIG["potential"]}))
        assert run(["positivity", "-c", str(f)]) == 1


class TestTransition:
    def test_free_quadrature_value(self, free_json, tmp_path):
        code, payload = run_json(
            ["transition", "-c", free_json, "--method", "quadrature"], tmp_path
        )
        assert code == 0
        assert payload["value"] == pytest.approx(1 / (2 * math.pi), rel=0.05)

    @pytest.mark.filterwarnings("ignore:.*lambda_strict.*:UserWarning")
    def test_mc_deterministic_modulo_timestamp(self, cosine_json, tmp_path):
        argv = [
            "transition", "-c", cosine_json, "--method", "mc",
            "--seed", "5", "--samples", "5000",
        ]
        _, a = run_json(argv, tmp_path)
        _, b = run_json(argv, tmp_path)
        a.pop("timestamp"), b.pop("timestamp")
        assert a == b

    def test_csv_format(self, free_json, tmp_path):
        out = tmp_path / "out.csv"
        code = run(
            ["transition", "-c", free_json, "--format", "csv", "--out", str(out)]
        )
        assert code == 0
        header = out.read_text().splitlines()[0]
        assert header.split(",") == [
            "n", "gamma", "points_per_dim", "value", "refinement_delta",
        ]

    def test_numeric_failure_exit_code(self, free_json, capsys):
        assert run(["transition", "-c", free_json, "-n", "9"]) == 2
        assert "error" in capsys.readouterr().err


class TestWeight:
    def test_straight_line_free_path(self, tmp_path, free_json):
        cfg = LatticeConfig(0.0, 1.0, 2, 0.05, 0.0, 0.0)
        path_file = tmp_path / "p.csv"
        write_path_csv(straight_line_path(cfg), cfg, path_file)
        code, payload = run_json(
            ["weight", "-c", free_json, "--path", str(path_file), "--expect-positive"],
            tmp_path,
        )
        assert code == 0
        assert payload["W"] > 0 and payload["sign"] == 1
        assert payload["lambda_strict"] == "inf"

    def test_negative_weight_violates_expectation(self, tmp_path, cosine_json):
        # eps = 0.25 is far above the strict threshold; place the interior
        # point at the kernel's maximum so one step factor turns negative
        cfg = LatticeConfig(0.0, 1.0, 4, 0.1, 0.0, 0.2)
        z1 = -math.pi / 2
        z2 = 1.0 * cfg.eps + 2 * z1 - cfg.z_a
        z = np.array([cfg.z_a, z1, z2, z2, cfg.z_b])
        from pathprob.lattice import Path

        path_file = tmp_path / "neg.csv"
        write_path_csv(Path(z), cfg, path_file)
        code, payload = run_json(
            ["weight", "-c", cosine_json, "--path", str(path_file), "--expect-positive"],
            tmp_path,
        )
        assert code == 3
        assert payload["sign"] == -1


class TestOtherCommands:
    def test_oracle_free(self, free_json, tmp_path):
        code, payload = run_json(["oracle", "-c", free_json], tmp_path)
        assert code == 0
        assert payload["probability"] == pytest.approx(1 / (2 * math.pi), rel=1e-3)

    def test_ck_amplitude(self, cosine_json, tmp_path):
        code, payload = run_json(
            ["ck", "-c", cosine_json, "--mode", "amplitude"], tmp_path
        )
        assert code == 0
        assert payload["residual"] <= 1e-6

    def test_scan_writes_table_and_provenance(self, free_json, tmp_path):
        prefix = tmp_path / "scan"
        code = run(
            [
                "scan", "-c", free_json, "--kind", "classical",
                "--gammas", "0.2", "0.1", "--seed", "3", "--out", str(prefix),
            ]
        )
        assert code == 0
        assert (tmp_path / "scan.csv").exists()
        prov = json.load(open(tmp_path / "scan.provenance.json"))
        assert prov["provenance"]["seed"] == 3

    def test_scan_linearization(self, cosine_json, capsys):
        code = run(
            [
                "scan", "-c", cosine_json, "--kind", "linearization",
                "--points", "0.3,0.7", "--eps-list", "0.02", "0.01",
            ]
        )
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["summary"]["slopes"][0]["slope"] == pytest.approx(2.0, abs=0.3)


class TestUsageErrors:
    def test_unknown_subcommand(self, capsys):
        assert run(["bogus"]) == 1

    def test_unknown_flag(self, capsys):
        assert run(["positivity", "--frobnicate"]) == 1

    def test_missing_config_file(self, capsys):
        assert run(["positivity", "-c", "/nonexistent.json", "--gamma", "0.1"]) == 1

    def test_missing_lattice_fields(self, tmp_path, capsys):
        f = tmp_path / "partial.json"
        f.write_text(json.dumps({"lattice": {"ta": 0.0}}))
        assert run(["transition", "-c", str(f)]) == 1


class TestEntryPoint:
    def test_console_script(self, free_json):
        proc = subprocess.run(
            ["pathprob", "transition", "-c", free_json],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert json.loads(proc.stdout)["method"] == "quadrature"
