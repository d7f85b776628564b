"""Tests for the command-line surface and exit codes."""

import io
import json

import pytest

from app.app import EXIT_CONFIG, EXIT_OTHER, EXIT_OUTPUT, OneBitSimulatorApp
from app.main import main
from app.ui.cli import CommandLine

SMALL_YAML = """\
scenario: flat_iid
K: 2
N: 8
T_t: 8
T_d: 16
snr_grid_dB: [0, 10]
trials: 2
tol: 1.0e-4
max_iter: 300
"""


def _app():
    out, err = io.StringIO(), io.StringIO()
    return OneBitSimulatorApp(cli=CommandLine(out=out, err=err)), out, err


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "small.yaml"
    path.write_text(SMALL_YAML, encoding="utf-8")
    return path


class TestRun:
    """`run <config> --out DIR`."""

    def test_writes_outputs(self, config_path, tmp_path):
        app, out, _ = _app()
        out_dir = tmp_path / "results"
        assert app.run(["run", str(config_path), "--out", str(out_dir)]) == 0
        for name in ("metrics.csv", "config.echo", "plotdata.csv", "plotdata.png"):
            assert (out_dir / name).exists()
        assert "metrics.csv" in out.getvalue()
        assert (out_dir / "metrics.csv").read_text(encoding="utf-8").startswith("snr_dB,metric,mean,stderr,n\n")

    def test_seed_override_is_echoed(self, config_path, tmp_path):
        app, _, _ = _app()
        assert app.run(["run", str(config_path), "--out", str(tmp_path), "--seed", "42"]) == 0
        assert "master_seed: 42" in (tmp_path / "config.echo").read_text(encoding="utf-8")

    def test_repeat_runs_identical(self, config_path, tmp_path):
        app, _, _ = _app()
        app.run(["run", str(config_path), "--out", str(tmp_path / "a")])
        app.run(["run", str(config_path), "--out", str(tmp_path / "b"), "--threads", "2"])
        first = (tmp_path / "a" / "metrics.csv").read_bytes()
        assert first == (tmp_path / "b" / "metrics.csv").read_bytes()

    def test_config_error_line(self, tmp_path):
        bad = tmp_path / "bad.yaml"
        bad.write_text("K: 0\n", encoding="utf-8")
        app, _, err = _app()
        assert app.run(["run", str(bad), "--out", str(tmp_path)]) == EXIT_CONFIG
        record = json.loads(err.getvalue().strip().splitlines()[-1])
        assert record["error"] == "config"
        assert "N ≥ K" in record["message"]

    def test_output_error_line(self, config_path, tmp_path):
        blocker = tmp_path / "occupied"
        blocker.write_text("x", encoding="utf-8")
        app, _, err = _app()
        assert app.run(["run", str(config_path), "--out", str(blocker)]) == EXIT_OUTPUT
        assert json.loads(err.getvalue().strip().splitlines()[-1])["error"] == "output"

    def test_threads_must_be_positive(self, config_path):
        app, _, err = _app()
        assert app.run(["run", str(config_path), "--threads", "0"]) == EXIT_OTHER
        record = json.loads(err.getvalue().strip().splitlines()[-1])
        assert record["error"] == "usage"
        assert "--threads" in record["message"]

    @pytest.mark.parametrize("seed", ["-1", "18446744073709551616", "abc"])
    def test_seed_must_be_u64(self, config_path, seed):
        app, _, err = _app()
        assert app.run(["run", str(config_path), "--seed", seed]) == EXIT_OTHER
        assert json.loads(err.getvalue().strip().splitlines()[-1])["error"] == "usage"


class TestOtherCommands:
    def test_list_scenarios(self):
        app, out, _ = _app()
        assert app.run(["list-scenarios"]) == 0
        text = out.getvalue()
        for name in ("flat_iid", "flat_correlated", "ofdm", "svm_two_stage", "ofdm_svm"):
            assert name in text

    def test_command_required(self):
        app, out, err = _app()
        assert app.run([]) == EXIT_OTHER
        lines = err.getvalue().strip().splitlines()
        assert len(lines) == 1
        assert json.loads(lines[0])["error"] == "usage"
        assert out.getvalue() == ""

    def test_unknown_command(self):
        app, _, err = _app()
        assert app.run(["plot"]) == EXIT_OTHER
        assert json.loads(err.getvalue().strip().splitlines()[-1])["error"] == "usage"


class TestMain:
    def test_log_level_and_exit_code(self, config_path, tmp_path):
        assert main(["--log-level", "WARNING", "run", str(config_path), "--out", str(tmp_path)]) == 0
        assert (tmp_path / "metrics.csv").exists()

    def test_usage_error_is_json(self, capsys):
        assert main(["run"]) == EXIT_OTHER
        captured = capsys.readouterr()
        record = json.loads(captured.err.strip().splitlines()[-1])
        assert record["error"] == "usage"
        assert "config" in record["message"]
        assert captured.out == ""
