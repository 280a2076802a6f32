import json
import subprocess
import sys

import numpy as np
import pytest

from hypoflow.cli import main


def run_config(tmp_path, config, name="cfg.json", outdir="out", extra=()):
    cfg = tmp_path / name
    cfg.write_text(json.dumps(config))
    out = tmp_path / outdir
    code = main(["--config", str(cfg), "--output", str(out), *extra])
    return code, out


class TestSchema:
    def test_unknown_key_rejected(self, tmp_path):
        code, _ = run_config(tmp_path, {
            "command": "density-eval",
            "parameters": {"kernel": "gamma0", "points": [[0, 0, 1, 0, 0, 0]]},
            "bogus": 1,
        })
        assert code == 2

    def test_unknown_parameter_rejected(self, tmp_path):
        code, _ = run_config(tmp_path, {
            "command": "density-eval",
            "parameters": {"kernel": "gamma0", "points": [[0, 0, 1, 0, 0, 0]], "x": 1},
        })
        assert code == 2

    def test_bad_command(self, tmp_path):
        code, _ = run_config(tmp_path, {"command": "frobnicate", "parameters": {}})
        assert code == 2


class TestDensityEval:
    def test_gamma0_diagonal_fixture(self, tmp_path):
        code, out = run_config(tmp_path, {
            "command": "density-eval",
            "parameters": {"kernel": "gamma0", "points": [[0, 0, 1, 0, 0, 0]]},
        })
        assert code == 0
        row = (out / "density.csv").read_text().strip().split("\n")[1]
        assert float(row.split(",")[-1]) == pytest.approx(0.275664, abs=1e-6)

    def test_yor_accuracy_window_exit_code(self, tmp_path):
        code, _ = run_config(tmp_path, {
            "command": "density-eval",
            "parameters": {"kernel": "yor", "points": [[1.0, 0.5, 0.05, 1.0, 0.0]]},
        })
        assert code == 3

    def test_yor_domain_exit_code(self, tmp_path):
        code, _ = run_config(tmp_path, {
            "command": "density-eval",
            "parameters": {"kernel": "yor", "points": [[-1.0, 0.5, 1.0, 1.0, 0.0]]},
        })
        assert code == 2


class TestValueFn:
    def test_zero_psi_fixture(self, tmp_path):
        code, out = run_config(tmp_path, {
            "command": "value-fn",
            "model": "asian",
            "parameters": {"endpoints": [[1.0, 0.0, 1.0, 1.0, 1.0, 0.0]]},
        })
        assert code == 0
        lines = (out / "value_fn.csv").read_text().strip().split("\n")
        row = lines[1].split(",")
        header = lines[0].split(",")
        assert float(row[header.index("psi")]) == pytest.approx(0.0, abs=1e-12)
        assert row[header.index("branch")] == "first"

    def test_kolmogorov_values(self, tmp_path):
        code, out = run_config(tmp_path, {
            "command": "value-fn",
            "model": "kolmogorov",
            "parameters": {"endpoints": [[0.0, 0.0, 1.0, 1.0, 0.5, 0.0]]},
        })
        assert code == 0
        row = (out / "value_fn.csv").read_text().strip().split("\n")[1]
        assert float(row.split(",")[-1]) == pytest.approx(1.0, rel=1e-12)


class TestChainAndDistance:
    def test_parabolic_chain(self, tmp_path):
        code, out = run_config(tmp_path, {
            "command": "chain",
            "parameters": {"kind": "parabolic", "x0": [0.0], "t0": 1.0,
                           "x": [1.0], "t": 0.6},
        })
        assert code == 0
        lines = (out / "chain.csv").read_text().strip().split("\n")
        assert lines[0] == "step,x1,t,cumulative_cost"
        assert len(lines) >= 3

    def test_path_chain(self, tmp_path):
        code, out = run_config(tmp_path, {
            "command": "chain",
            "model": "kolmogorov",
            "parameters": {"kind": "path", "start": [0.0, 0.0, 1.0],
                           "control_grid": [0.0, 1.0], "control_values": [[1.5]],
                           "step": 0.01, "h": 0.72},
        })
        assert code == 0
        text = (out / "chain.csv").read_text()
        assert "cumulative_cost" in text

    def test_cc_distance(self, tmp_path):
        code, out = run_config(tmp_path, {
            "command": "cc-distance",
            "parameters": {"pairs": [[[0, 0, 0], [1, 0, 0]], [[0, 0, 0], [0, 0, 1]]]},
        })
        assert code == 0
        lines = (out / "cc_distance.csv").read_text().strip().split("\n")
        assert float(lines[1].split(",")[6]) == pytest.approx(1.0, abs=1e-8)
        assert float(lines[2].split(",")[6]) == pytest.approx(np.sqrt(4 * np.pi), rel=1e-5)
        assert lines[1].split(",")[7] == "shooting"


class TestSimulateAndVerify:
    def test_simulate_exact_and_reload(self, tmp_path):
        code, out = run_config(tmp_path, {
            "command": "simulate",
            "model": "kolmogorov",
            "parameters": {"n": 5000, "seed": 3, "horizon": 1.0, "scheme": "exact"},
        })
        assert code == 0
        import hypoflow as hf

        batch = hf.load_batch(out / "batch.bin")
        assert batch.n == 5000
        assert batch.scheme == "exact"
        text = (out / "batch_summary.csv").read_text()
        assert text.startswith("coordinate,mean,variance")

    def test_verify_kolmogorov_report(self, tmp_path):
        # full-pipeline fixture: n = 1e6, seed 42
        code, out = run_config(tmp_path, {
            "command": "verify",
            "parameters": {"target": "kolmogorov", "n": 1_000_000, "seed": 42},
        })
        assert code == 0
        report = json.loads((out / "bound_report.json").read_text())
        assert report["violation_fraction"] <= 0.01
        assert report["cells_checked"] > 0

    def test_simulate_exact_heat(self, tmp_path):
        code, out = run_config(tmp_path, {
            "command": "simulate",
            "model": "heat2",
            "parameters": {"n": 2000, "seed": 1, "horizon": 0.5, "scheme": "exact"},
        })
        assert code == 0
        import hypoflow as hf

        batch = hf.load_batch(out / "batch.bin")
        assert batch.endpoints.shape == (2000, 2)

    def test_calibrate_hjb(self, tmp_path):
        code, out = run_config(tmp_path, {
            "command": "calibrate-hjb",
            "parameters": {"n_points": 100, "n_asian": 25},
        })
        assert code == 0
        payload = json.loads((out / "hjb_calibration.json").read_text())
        assert payload["winner"] == {"triple": "second", "drift_sign": 1}
        assert payload["asian_max_residual"] <= 1e-4


class TestDeterminism:
    def test_rerun_byte_identical(self, tmp_path):
        config = {
            "command": "simulate",
            "model": "heisenberg",
            "parameters": {"n": 20_000, "seed": 5, "horizon": 1.0, "dt": 0.01},
        }
        _, out1 = run_config(tmp_path, config, outdir="a")
        _, out2 = run_config(tmp_path, config, outdir="b")
        assert (out1 / "batch.bin").read_bytes() == (out2 / "batch.bin").read_bytes()
        assert (out1 / "batch_summary.csv").read_bytes() == (out2 / "batch_summary.csv").read_bytes()

    def test_threads_do_not_change_results(self, tmp_path):
        config = {
            "command": "simulate",
            "model": "quadratic_lifted",
            "parameters": {"n": 150_000, "seed": 9, "horizon": 1.0, "dt": 0.01},
        }
        outs = []
        for threads in (1, 4, 16):
            _, out = run_config(tmp_path, config, outdir=f"t{threads}",
                                extra=("--threads", str(threads)))
            outs.append((out / "batch.bin").read_bytes())
        assert outs[0] == outs[1] == outs[2]

    def test_seed_override(self, tmp_path):
        config = {
            "command": "simulate",
            "model": "kolmogorov",
            "parameters": {"n": 1000, "seed": 3, "horizon": 1.0, "scheme": "exact"},
        }
        _, out1 = run_config(tmp_path, config, outdir="s3")
        _, out2 = run_config(tmp_path, config, outdir="s4", extra=("--seed", "4"))
        assert (out1 / "batch.bin").read_bytes() != (out2 / "batch.bin").read_bytes()


def test_console_script_smoke(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({
        "command": "density-eval",
        "parameters": {"kernel": "gamma0", "points": [[0, 0, 1, 0, 0, 0]]},
    }))
    proc = subprocess.run(
        [sys.executable, "-m", "hypoflow.cli", "--config", str(cfg),
         "--output", str(tmp_path / "o")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
