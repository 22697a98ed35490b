from __future__ import annotations

import json

import numpy as np
import pytest

from lpcost.analysis import FIVE_MODEL, STEP_MODEL
from lpcost.calibrate import ModelFit, PlatformProfile
from lpcost.calibrate.suite import program_text
from lpcost.cli import main


@pytest.fixture
def append_file(tmp_path):
    path = tmp_path / "append.pl"
    path.write_text(program_text("append.pl"))
    return path


@pytest.fixture
def profile_file(tmp_path):
    fits = {
        FIVE_MODEL.signature: ModelFit(FIVE_MODEL, np.array([26.56, 10.81, 8.60, 6.17, 6.39]), 1.0, 1.0, 1.0, 250, 5),
        STEP_MODEL.signature: ModelFit(STEP_MODEL, np.array([108.9]), 1.0, 1.0, 1.0, 250, 1),
    }
    path = tmp_path / "profile.json"
    PlatformProfile(fits, {}).save(path)
    return path


def test_analyze_table(append_file, capsys):
    assert main(["analyze", str(append_file)]) == 0
    out = capsys.readouterr().out
    assert "app/3" in out and "step: n1+1" in out


def test_analyze_records(append_file, capsys):
    assert main(["analyze", str(append_file), "--format", "records", "--model", "step"]) == 0
    [line] = capsys.readouterr().out.splitlines()
    rec = json.loads(line)
    assert rec["predicate"] == "app/3" and rec["expr"] == "n1+1" and rec["form"] == "closed"


def test_analyze_input_errors(tmp_path, capsys):
    assert main(["analyze", str(tmp_path / "missing.pl")]) == 2
    bad = tmp_path / "bad.pl"
    bad.write_text("app([], L, L")
    assert main(["analyze", str(bad)]) == 2
    assert "error" in capsys.readouterr().err
    assert main(["analyze", str(bad.with_name("x.pl")), "--model", "nonsense"]) == 2


def test_predict_matches_dot_product(append_file, profile_file, capsys):
    rc = main(["predict", str(append_file), "--profile", str(profile_file), "--sizes", "10:0", "--format", "records"])
    assert rc == 0
    [rec] = [json.loads(x) for x in capsys.readouterr().out.splitlines()]
    # n1 = 10: step 11, giunif 31, gounif 30, viunif 11, vounif 1
    want = 26.56 * 11 + 10.81 * 31 + 8.60 * 30 + 6.17 * 11 + 6.39 * 1
    assert rec["sizes"] == [10, 0] and abs(rec["estimate_ns"] - want) < 1e-6


def test_predict_warns_without_builtin_constants(append_file, profile_file, capsys):
    assert main(["predict", str(append_file), "--profile", str(profile_file), "--sizes", "3"]) == 0
    assert "no builtin constants" in capsys.readouterr().err


def test_predict_model_mismatch(append_file, profile_file, capsys):
    rc = main(["predict", str(append_file), "--profile", str(profile_file), "--sizes", "3", "--model", "step,nargs"])
    assert rc == 2
    assert "mismatch" in capsys.readouterr().err


def test_predict_missing_profile(append_file, tmp_path):
    assert main(["predict", str(append_file), "--profile", str(tmp_path / "nope.json"), "--sizes", "3"]) == 2


def test_predict_requires_sizes(append_file, profile_file):
    assert main(["predict", str(append_file), "--profile", str(profile_file)]) == 2


def test_evaluate_unknown_benchmark(profile_file):
    assert main(["evaluate", "--profile", str(profile_file), "--benchmarks", "quicksort"]) == 2


def test_evaluate_small_run(profile_file, tmp_path, capsys):
    out = tmp_path / "eval.jsonl"
    rc = main(["evaluate", "--profile", str(profile_file), "--benchmarks", "append,nrev",
               "--sizes", "append=10,nrev=5", "--inputs", "1", "--runs", "1", "--out", str(out), "--seed", "1"])
    assert rc == 0
    assert "global error" in capsys.readouterr().out
    kinds = [json.loads(x)["kind"] for x in out.read_text().splitlines()]
    assert kinds.count("prediction") == 4 and kinds.count("observed") == 2


def test_calibrate_small_run(tmp_path, capsys):
    out = tmp_path / "prof.json"
    samples = tmp_path / "samples.csv"
    rc = main(["calibrate", "--model", "step", "--sizes", "2,4,6", "--reps", "1", "--inner", "1",
               "--no-builtins", "--out", str(out), "--samples", str(samples), "--seed", "2"])
    assert rc == 0
    prof = PlatformProfile.load(out)
    assert list(prof.fits) == ["step"] and prof.seed == 2
    assert samples.read_text().startswith("step,duration_ns")


def test_calibrate_rejects_bad_sizes(tmp_path):
    assert main(["calibrate", "--sizes", "2:3", "--no-builtins", "--out", str(tmp_path / "p.json")]) == 2


def test_module_entry_point():
    import subprocess
    import sys

    res = subprocess.run([sys.executable, "-m", "lpcost", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "analyze" in res.stdout
