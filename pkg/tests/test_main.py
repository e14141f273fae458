import json

import pytest

from main import main
from renorm import FrobeniusCocycle, automorphism_from_word, sample_sums
from surface import staircase


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("ZDCOVER_LOG_LEVEL", raising=False)
    return tmp_path


def _body(path):
    return path.read_text().split("\n", 1)[1]


def test_gauss_csv_and_manifest(workdir):
    assert main(["gauss", "--j", "2", "--L", "0,0.5,2", "--oracle", "--out", "g.csv", "--workers", "1"]) == 0
    lines = (workdir / "g.csv").read_text().splitlines()
    assert lines[0] == "# manifest: g.csv.manifest.json"
    assert lines[1] == "L,re,im,oracle_re,oracle_im"
    assert len(lines) == 5
    manifest = json.loads((workdir / "g.csv.manifest.json").read_text())
    assert manifest["manifest"] == "g.csv.manifest.json"
    assert manifest["tool"] == "zdcover"
    assert manifest["outputs"] == ["g.csv"]
    assert manifest["config"]["j"] == 2


def test_stdout_run_keeps_manifest_in_runs_folder(workdir, capsys):
    assert main(["gauss", "--workers", "1"]) == 0
    out = capsys.readouterr().out
    name = out.splitlines()[0].split(": ", 1)[1]
    assert (workdir / "runs" / name).exists()


def test_usage_errors_exit_2(workdir, capsys):
    assert main([]) == 2
    assert main(["expansion", "--word", "h"]) == 2
    assert "zdcover:" in capsys.readouterr().err


def test_task_failure_exits_1(workdir):
    assert main(["gauss", "--sigma", "-1", "--workers", "1"]) == 1


def test_same_seed_same_output(workdir):
    args = ["frobenius", "--word", "hv", "--K", "6", "--samples", "40", "--seed", "3", "--workers", "1"]
    assert main(args + ["--out", "a.csv"]) == 0
    assert main(args + ["--out", "b.csv"]) == 0
    assert _body(workdir / "a.csv") == _body(workdir / "b.csv")
    assert len(_body(workdir / "a.csv").splitlines()) == 1 + 40


def test_build_summary(workdir):
    assert main(["build", "--s", "4", "--out", "b.json", "--workers", "1"]) == 0
    summary = json.loads((workdir / "b.json").read_text())
    assert summary["n_squares"] == 4
    assert summary["stratum"]["genus"] == 2


def test_windtree_covariance_is_2x2(workdir):
    args = ["stats", "--model", "windtree", "--word", "hv", "--lags", "5", "--samples", "10000", "--workers", "1"]
    assert main(args + ["--out", "s.json"]) == 0
    sigma2 = json.loads((workdir / "s.json").read_text())["sigma2"]
    assert len(sigma2) == 2 and all(len(row) == 2 for row in sigma2)
    assert sigma2[0][1] == pytest.approx(sigma2[1][0])


def test_horizontal_orbits_on_torus(workdir):
    args = ["flow", "--model", "torus", "--direction", "horizontal", "--t", "2.5", "--samples", "5"]
    assert main(args + ["--out", "o.csv", "--workers", "1"]) == 0
    assert len((workdir / "o.csv").read_text().splitlines()) == 7


def test_verify_gauss_suite(workdir):
    assert main(["verify", "--suite", "gauss", "--quick", "--out", "v.json", "--workers", "1"]) == 0
    report = json.loads((workdir / "v.json").read_text())
    assert report["passed"] and report["suite"] == "gauss"


def test_frobenius_emits_one_row_per_sample(workdir):
    args = ["frobenius", "--word", "hv", "--K", "9", "--samples", "30", "--seed", "4", "--workers", "1"]
    assert main(args + ["--out", "f.csv"]) == 0
    header, *rows = _body(workdir / "f.csv").splitlines()
    assert header == "sample,K,FK_0"
    expected = sample_sums(FrobeniusCocycle(automorphism_from_word(staircase(2), "hv")), 9, 30, 4)
    assert [row.split(",") for row in rows] == [[str(i), "9", str(int(fk[0]))] for i, fk in enumerate(expected)]


def test_flow_integrals_ignore_worker_count(workdir):
    args = ["flow", "--model", "windtree", "--word", "hv", "--task", "integral", "--T", "5,10",
            "--samples", "5000", "--seed", "2"]
    assert main(args + ["--out", "one.csv", "--workers", "1"]) == 0
    assert main(args + ["--out", "two.csv", "--workers", "2"]) == 0
    assert _body(workdir / "one.csv") == _body(workdir / "two.csv")
    assert len(_body(workdir / "one.csv").splitlines()) > 9000


def test_asclt_reports_mean_and_error(workdir):
    args = ["stats", "--task", "asclt", "--N", "20000", "--samples", "8", "--workers", "1"]
    assert main(args + ["--out", "a.json"]) == 0
    report = json.loads((workdir / "a.json").read_text())
    assert report["n_runs"] == 8 and report["N"] == 20000
    assert report["stderr"] > 0
    assert report["limit"] == pytest.approx(2 ** -0.5)
