"""End-to-end CLI checks driven through subprocesses.

Needs DGPAL_CLI pointing at the built binary (ctest sets it)."""

import os
import subprocess

import numpy as np
import pytest

CLI = os.environ.get("DGPAL_CLI")

pytestmark = pytest.mark.skipif(CLI is None, reason="DGPAL_CLI not set")


def run(*args, **kwargs):
    return subprocess.run([CLI, *args], capture_output=True, text=True,
                          **kwargs)


def write_train(path, n=12, seed=0):
    rng = np.random.default_rng(seed)
    x = (np.argsort(rng.random(n)) + rng.random(n)) / n
    y = np.sin(20.0 * x) + 0.05 * rng.standard_normal(n)
    with open(path, "w") as out:
        out.write("x_1,y\n")
        for xi, yi in zip(x, y):
            out.write(f"{float(xi)!r},{float(yi)!r}\n")


def test_fit_predict_acquire(tmp_path):
    train = tmp_path / "train.csv"
    write_train(train)
    model_dir = tmp_path / "model"
    fit = run("fit", "--in", str(train), "--out", str(model_dir),
              "--layers", "1", "--iters", "300", "--burn", "100",
              "--thin", "1", "--seed", "4")
    assert fit.returncode == 0, fit.stderr
    assert "tau2hat_mean" in fit.stdout
    assert (model_dir / "manifest.json").exists()
    assert (model_dir / "trace.csv").exists()

    test = tmp_path / "test.csv"
    with open(test, "w") as out:
        out.write("x_1\n0.1\n0.5\n0.9\n")
    pred = tmp_path / "pred.csv"
    predict = run("predict", "--model", str(model_dir), "--in", str(test),
                  "--out", str(pred), "--seed", "5")
    assert predict.returncode == 0, predict.stderr
    rows = pred.read_text().strip().splitlines()
    assert rows[0] == "mean,variance,q05,q95"
    assert len(rows) == 4
    mean, var, lo, hi = map(float, rows[1].split(","))
    assert lo <= mean <= hi
    assert var >= 0.0

    cand = tmp_path / "cand.csv"
    with open(cand, "w") as out:
        out.write("x_1\n")
        for i in range(20):
            out.write(f"{(i + 0.5) / 20}\n")
    surface = tmp_path / "surface.csv"
    acquire = run("acquire", "--model", str(model_dir), "--in", str(cand),
                  "--out", str(surface), "--criterion", "alc")
    assert acquire.returncode == 0, acquire.stderr
    surf_rows = surface.read_text().strip().splitlines()
    assert surf_rows[0] == "x_1,alc"
    assert len(surf_rows) == 21
    chosen = (tmp_path / "surface.csv.chosen.csv").read_text().splitlines()
    assert len(chosen) == 2


def test_fit_determinism(tmp_path):
    train = tmp_path / "train.csv"
    write_train(train, seed=3)
    dir_a, dir_b = tmp_path / "a", tmp_path / "b"
    for out_dir in (dir_a, dir_b):
        result = run("fit", "--in", str(train), "--out", str(out_dir),
                     "--layers", "2", "--iters", "120", "--burn", "40",
                     "--thin", "2", "--seed", "21")
        assert result.returncode == 0, result.stderr
    assert (dir_a / "trace.csv").read_bytes() == (dir_b / "trace.csv").read_bytes()


def test_missing_file_is_runtime_error(tmp_path):
    result = run("fit", "--in", str(tmp_path / "absent.csv"), "--out",
                 str(tmp_path / "model"))
    assert result.returncode == 1
    assert not (tmp_path / "model").exists()  # no partial artifacts


def test_campaign_and_config_errors(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(
        "blackbox builtin-1d\nn0 5\nn_final 6\nn_cand 10\nlayers 1\n"
        "iters 150\nburn 50\nthin 1\nfirst_iters 200\nfirst_burn 80\n"
        "first_thin 1\ntest_n 15\nseed 2\ntiming off\n"
    )
    out = tmp_path / "history.csv"
    result = run("campaign", "--config", str(cfg), "--out", str(out))
    assert result.returncode == 0, result.stderr
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "step,n,x_1,y,rmse,score,seconds"
    assert len(lines) == 3  # step 0 + one acquisition

    bad = tmp_path / "bad.cfg"
    bad.write_text("mystery_key 3\n")
    broken = run("campaign", "--config", str(bad), "--out", str(out))
    assert broken.returncode == 2
    assert "mystery_key" in broken.stderr


def test_campaign_abort_keeps_partial_history(tmp_path):
    # External blackbox that answers 18 requests and then turns to garbage:
    # 6 initial points + 10 test-truth evaluations + 2 acquisitions succeed,
    # the third acquisition aborts the campaign.
    cfg = tmp_path / "abort.cfg"
    cfg.write_text(
        "blackbox external\n"
        "external_cmd for i in $(seq 1 18); do read l; echo 1.$i; done; "
        "read l; echo broken\n"
        "domain 0 1\n"
        "noise_sd 0\n"
        "n0 6\nn_final 12\nn_cand 8\nlayers 1\n"
        "iters 120\nburn 40\nthin 1\nfirst_iters 150\nfirst_burn 50\n"
        "first_thin 1\ntest_n 10\nseed 5\ntiming off\n"
    )
    out = tmp_path / "partial.csv"
    result = run("campaign", "--config", str(cfg), "--out", str(out))
    assert result.returncode == 1
    assert "aborted" in result.stderr
    lines = out.read_text().strip().splitlines()
    assert len(lines) == 4  # header + step 0 + two completed acquisitions


def test_selfcheck_and_perturbation():
    ok = run("selfcheck", "--seed", "3")
    assert ok.returncode == 0, ok.stdout
    assert ok.stdout.count("PASS") == 4

    broken = run("selfcheck", "--seed", "3", "--perturb", "1e-3")
    assert broken.returncode == 1
    assert "FAIL" in broken.stdout


def test_usage_errors_exit_two():
    result = run("predict")  # missing required flags
    assert result.returncode == 2
