import json

import numpy as np
import pytest

from cpd.__main__ import main
from cpd.commands import run as run_command
from cpd.harness import ExperimentSummary, read_records
from cpd.signals import read_series, read_signal, write_series


def _last_json(text):
    return json.loads(text.strip().splitlines()[-1])


@pytest.fixture
def signal_files(tmp_path):
    sig = tmp_path / "sig.csv"
    y = tmp_path / "y.csv"
    code = main([
        "gen-signal", "--n", "400", "--cps", "1,201", "--levels", "0,10",
        "--out", str(sig), "--noisy-out", str(y), "--sigma", "0.01", "--seed", "3",
    ])
    assert code == 0
    return sig, y


def test_gen_signal(capsys, signal_files):
    sig, y = signal_files
    out = _last_json(capsys.readouterr().out)
    assert out["ok"] is True and out["K"] == 2 and out["W_n"] == 200
    assert read_signal(sig).changepoints == (1, 201)
    assert read_series(y).shape == (400,)


def test_gen_signal_rejects_equal_levels(tmp_path, capsys):
    code = main(["gen-signal", "--n", "10", "--cps", "1,5", "--levels", "1,1", "--out", str(tmp_path / "s.csv")])
    assert code == 2
    assert _last_json(capsys.readouterr().err)["ok"] is False


def test_denoise(signal_files, tmp_path, capsys):
    _, y = signal_files
    out = tmp_path / "xhat.csv"
    assert main(["denoise", "--input", str(y), "--lambda", "2.0", "--output", str(out)]) == 0
    payload = _last_json(capsys.readouterr().out)
    assert payload["kkt_residual"] <= 1e-7
    assert payload["jumps"] >= 1
    assert read_series(out).shape == (400,)


def test_denoise_with_anchors(tmp_path, capsys):
    inp = write_series(tmp_path / "y.csv", np.array([0.0]))
    out = tmp_path / "x.csv"
    assert main(["denoise", "--input", str(inp), "--lambda", "0.2", "--output", str(out),
                 "--anchor-left", "1", "--anchor-right", "1"]) == 0
    assert read_series(out)[0] == pytest.approx(0.2)


def test_denoise_missing_input(tmp_path, capsys):
    code = main(["denoise", "--input", str(tmp_path / "none.csv"), "--lambda", "1", "--output", str(tmp_path / "x.csv")])
    assert code == 2
    assert _last_json(capsys.readouterr().err)["code"] == "invalid_input"


def test_gdenoise_and_solver_failure(tmp_path, capsys, rng):
    inp = write_series(tmp_path / "Y.csv", rng.normal(size=(30, 2)))
    out = tmp_path / "X.csv"
    assert main(["gdenoise", "--input", str(inp), "--lambda", "1.0", "--output", str(out)]) == 0
    assert _last_json(capsys.readouterr().out)["converged"] is True
    assert read_series(out).shape == (30, 2)

    code = main(["gdenoise", "--input", str(inp), "--lambda", "1.0", "--output", str(out),
                 "--method", "bcd", "--max-iter", "1"])
    assert code == 3
    assert _last_json(capsys.readouterr().err)["converged"] is False


def test_bounds_command(signal_files, tmp_path, capsys):
    sig, _ = signal_files
    out = tmp_path / "b.csv"
    assert main(["bounds", "--signal", str(sig), "--sigma", "1", "--t", "10", "--lambda", "50",
                 "--output", str(out)]) == 0
    payload = _last_json(capsys.readouterr().out)
    assert payload["confidence"] == pytest.approx(0.99)
    lines = out.read_text().splitlines()
    assert lines[0] == "index,d,segment_length,bound"
    assert len(lines) == 401
    assert (tmp_path / "b.summary.csv").exists()


def test_bounds_group_outside_window(signal_files, tmp_path, capsys):
    sig, _ = signal_files
    code = main(["bounds", "--signal", str(sig), "--sigma", "1", "--t", "10", "--lambda", "50",
                 "--group", "--output", str(tmp_path / "b.csv")])
    assert code == 2
    assert _last_json(capsys.readouterr().err)["code"] == "precondition"


def test_detect_command(signal_files, tmp_path, capsys):
    sig, y = signal_files
    out = tmp_path / "d.csv"
    assert main(["detect", "--input", str(y), "--sigma", "0.01", "--t", "10", "--truth", str(sig),
                 "--output", str(out)]) == 0
    payload = _last_json(capsys.readouterr().out)
    assert payload["detected"] >= 1
    assert payload["dH"] <= payload["offset"]
    assert out.read_text().splitlines()[0] == "index"


def test_run_command(tmp_path, cfg_file, capsys):
    cfg = cfg_file(n=60, changepoints="1, 31", levels="0, 3", sigma=0.5, t=10,
                   lambda_rule="my_sqrt_n", n_trials=4, base_seed=5)
    out = tmp_path / "res.csv"
    assert main(["run", "--config", str(cfg), "--out", str(out), "--workers", "2", "--assert"]) == 0
    payload = _last_json(capsys.readouterr().out)
    assert payload["summary"]["n_trials"] == 4
    assert len(read_records(out)) == 4


def test_run_assert_failure(tmp_path, cfg_file, capsys, monkeypatch):
    def failing(cfg, workers=None):
        summary = ExperimentSummary(mode=cfg.mode, n_trials=1, floor=0.99, threshold=0.97, passed=False)
        return [], summary

    monkeypatch.setattr(run_command, "run_experiment", failing)
    cfg = cfg_file(n=20, changepoints="1", levels="0", sigma=1, t=10, lambda_rule="my_sqrt_n")
    code = main(["run", "--config", str(cfg), "--out", str(tmp_path / "r.csv"), "--assert"])
    assert code == 4
    assert _last_json(capsys.readouterr().err)["code"] == "coverage_failure"


def test_run_bad_config(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("sigma = 1\n")
    assert main(["run", "--config", str(bad), "--out", str(tmp_path / "r.csv")]) == 2


def test_run_default_output_goes_to_results_dir(cfg_file, capsys):
    from cpd.core.paths import RESULTS_DIR

    cfg = cfg_file(name="tiny.cfg", n=20, changepoints="1, 11", levels="0, 1", sigma=0.2, t=10,
                   lambda_rule="my_sqrt_n", n_trials=2)
    assert main(["run", "--config", str(cfg)]) == 0
    assert _last_json(capsys.readouterr().out)["out"] == str(RESULTS_DIR / "tiny.csv")
    assert len(read_records(RESULTS_DIR / "tiny.csv")) == 2


def test_bounds_anchored_segment(tmp_path, capsys):
    from cpd import bounds

    out = tmp_path / "a.csv"
    assert main(["bounds", "--anchored", "9", "--n", "100", "--sigma", "1", "--t", "10", "--lambda", "3",
                 "--output", str(out)]) == 0
    payload = _last_json(capsys.readouterr().out)
    expected = bounds.anchored_bound(9, 3.0, bounds.compute_My_scalar(1.0, 100, 10.0))
    assert payload["max_bound"] == pytest.approx(float(expected.max()))
    lines = out.read_text().splitlines()
    assert lines[0] == "index,bound" and len(lines) == 10

    assert main(["bounds", "--anchored", "9", "--n", "100", "--sigma", "1", "--t", "10", "--lambda", "3",
                 "--opposite-signs", "--output", str(out)]) == 0
    assert _last_json(capsys.readouterr().out)["max_bound"] <= payload["max_bound"]


def test_bounds_needs_signal_or_segment(tmp_path, capsys):
    code = main(["bounds", "--sigma", "1", "--t", "10", "--lambda", "3", "--output", str(tmp_path / "b.csv")])
    assert code == 2
    assert _last_json(capsys.readouterr().err)["code"] == "invalid_input"
