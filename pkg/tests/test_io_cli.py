import csv
import os
import subprocess
import sys

import numpy as np
import pytest

from whitesr import cli, io

SIM = ["simulate", "--phantom", "blocks", "--size", "64", "--cell", "8", "--kernel", "gaussian:7:1.5",
       "--decimate", "2x2", "--noise", "0.05", "--seed", "7"]


def test_matrix_roundtrip_is_exact(tmp_path):
    x = np.random.default_rng(0).standard_normal((5, 7)) * 1e3
    io.write_matrix(tmp_path / "m.txt", x)
    np.testing.assert_array_equal(io.read_matrix(tmp_path / "m.txt"), x)
    (tmp_path / "bad.txt").write_text("2 2\n1 2 3\n")
    with pytest.raises(ValueError):
        io.read_matrix(tmp_path / "bad.txt")


def test_pgm_roundtrip(tmp_path):
    x = np.linspace(0, 1, 12).reshape(3, 4)
    io.write_pgm(tmp_path / "x.pgm", x)
    q = io.read_pgm(tmp_path / "x.pgm")
    assert q.shape == (3, 4) and q[0, 0] == 0 and q[-1, -1] == 65535
    np.testing.assert_allclose(q / 65535.0, x, atol=1 / 65535)
    io.write_pgm(tmp_path / "c.pgm", np.full((2, 2), 3.0))
    assert not np.any(io.read_pgm(tmp_path / "c.pgm"))


def test_metadata_roundtrip(tmp_path):
    rec = {"a": 1, "kernel": "gaussian:13:3", "empty": ""}
    io.write_metadata(tmp_path / "m.txt", rec)
    assert io.read_metadata(tmp_path / "m.txt") == {k: str(v) for k, v in rec.items()}
    with pytest.raises(ValueError):
        io.write_metadata(tmp_path / "n.txt", {"a=b": 1})


def test_csv_precision(tmp_path):
    io.write_csv(tmp_path / "t.csv", ["a", "b"], [[0.1, "x"], [1 / 3, 2]])
    rows = list(csv.reader(open(tmp_path / "t.csv")))
    assert rows[0] == ["a", "b"]
    assert float(rows[2][0]) == 1 / 3


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    data = root / "data"
    assert cli.run(SIM + ["--out", str(data)]) == 0
    return root, data


def read_report(path):
    return io.read_metadata(os.path.join(path, "report.txt"))


def test_simulate_outputs(dataset):
    _, data = dataset
    assert sorted(os.listdir(data)) == ["b.pgm", "b.txt", "meta.txt", "x.pgm", "x.txt"]
    meta = io.read_metadata(data / "meta.txt")
    assert meta["kernel"] == "gaussian:7:1.5" and meta["decimate"] == "2x2"
    assert float(meta["sigma"]) == 0.05
    assert io.read_matrix(data / "b.txt").shape == (32, 32)


def test_simulate_is_byte_reproducible(dataset, tmp_path):
    _, data = dataset
    assert cli.run(SIM + ["--out", str(tmp_path / "again")]) == 0
    for name in os.listdir(data):
        assert (data / name).read_bytes() == (tmp_path / "again" / name).read_bytes()


def test_solve_tik_rwp_deterministic(dataset, tmp_path):
    _, data = dataset
    for name in ("r1", "r2"):
        assert cli.run(["solve", "--model", "tik", "--in", str(data), "--out", str(tmp_path / name)]) == 0
    assert float(read_report(tmp_path / "r1")["mu_star"]) > 0
    assert read_report(tmp_path / "r1")["tau_star"] == "nan"
    for name in ("x_star.txt", "x_star.pgm", "traces.csv", "report.txt"):
        assert (tmp_path / "r1" / name).read_bytes() == (tmp_path / "r2" / name).read_bytes()


@pytest.mark.parametrize("model", ["tik", "tvi"])
def test_solve_dp_contract(dataset, tmp_path, model):
    _, data = dataset
    out = tmp_path / model
    code = cli.run(["solve", "--model", model, "--select", "dp:1.0:0.05", "--max-iter", "60", "--in", str(data), "--out", str(out)])
    assert code == 0
    assert float(read_report(out)["tau_star"]) == pytest.approx(1.0, abs=1e-3)


def test_rwp_solve_never_reads_sigma(dataset, tmp_path, monkeypatch):
    _, data = dataset
    meta = io.read_metadata(data / "meta.txt")
    blind = tmp_path / "blind"
    blind.mkdir()
    for name in ("b.txt", "x.txt"):
        (blind / name).write_bytes((data / name).read_bytes())
    io.write_metadata(blind / "meta.txt", {k: v for k, v in meta.items() if k not in ("sigma", "noise")})

    def forbidden(self):
        raise AssertionError("sigma was read")

    monkeypatch.setattr(cli.Dataset, "sigma", forbidden)
    for model in ("tik", "tvi", "cel0"):
        args = ["solve", "--model", model, "--max-iter", "30", "--in", str(blind), "--out", str(tmp_path / model)]
        assert cli.run(args) == 0
    assert cli.run(["solve", "--model", "tvi", "--max-iter", "30", "--in", str(data), "--out", str(tmp_path / "ref")]) == 0
    assert (tmp_path / "ref" / "x_star.txt").read_bytes() == (tmp_path / "tvi" / "x_star.txt").read_bytes()


def test_cel0_writes_points(tmp_path):
    data = tmp_path / "pts"
    args = ["simulate", "--phantom", "points", "--size", "64", "--kernel", "gaussian:9:2", "--decimate", "2x2",
            "--noise", "1%", "--seed", "0", "--s-min", "8", "--margin", "4", "--out", str(data)]
    assert cli.run(args) == 0
    assert cli.run(["solve", "--model", "cel0", "--in", str(data), "--out", str(tmp_path / "rec")]) == 0
    report = read_report(tmp_path / "rec")
    assert 0.0 <= float(report["jaccard_2"]) <= 1.0
    rows = list(csv.reader(open(tmp_path / "rec" / "points.csv")))
    assert rows[0] == ["row", "col", "intensity"]
    assert len(rows) - 1 == int(report["detections"])
    assert cli.run(["solve", "--model", "cel0", "--select", "dp:1:0.1", "--in", str(data), "--out", str(tmp_path / "no")]) == 2


def test_sweep_argmin_matches_solve(dataset, tmp_path):
    _, data = dataset
    assert cli.run(["sweep", "--model", "tik", "--grid", "1e-1:1e5:61", "--in", str(data), "--out", str(tmp_path / "c.csv")]) == 0
    rows = list(csv.DictReader(open(tmp_path / "c.csv")))
    assert list(rows[0]) == ["mu", "tau", "W", "isnr", "ssim"]
    mus = np.array([float(r["mu"]) for r in rows])
    W = np.array([float(r["W"]) for r in rows])
    assert cli.run(["solve", "--model", "tik", "--in", str(data), "--out", str(tmp_path / "s")]) == 0
    mu_star = float(read_report(tmp_path / "s")["mu_star"])
    cell = np.log10(mus[1] / mus[0])
    assert abs(np.log10(mus[np.argmin(W)] / mu_star)) <= cell


def test_sweep_parallel_equals_serial(dataset, tmp_path, monkeypatch):
    _, data = dataset
    args = ["sweep", "--model", "tvi", "--grid", "1:1e3:4", "--max-iter", "15", "--in", str(data)]
    monkeypatch.setenv("WHITESR_THREADS", "1")
    assert cli.run(args + ["--out", str(tmp_path / "serial.csv")]) == 0
    monkeypatch.setenv("WHITESR_THREADS", "3")
    assert cli.run(args + ["--out", str(tmp_path / "par.csv")]) == 0
    assert (tmp_path / "serial.csv").read_bytes() == (tmp_path / "par.csv").read_bytes()


def test_compare_table(dataset, tmp_path):
    _, data = dataset
    out = tmp_path / "table.csv"
    assert cli.run(["compare", "--models", "tik,tvi", "--max-iter", "40", "--in", str(data), "--out", str(out)]) == 0
    rows = list(csv.DictReader(open(out)))
    assert [(r["model"], r["select"]) for r in rows] == [("tik", "rwp"), ("tvi", "rwp"), ("tik", "dp"), ("tvi", "dp"), ("bicubic", "-")]
    dp = [r for r in rows if r["select"] == "dp"]
    assert float(dp[0]["tau"]) == pytest.approx(1.0, abs=1e-3)
    assert all(float(r["psnr"]) > float(rows[-1]["psnr"]) for r in rows[:2])


@pytest.mark.parametrize("argv", [
    ["solve", "--model", "tik", "--select", "gcv"],
    ["solve", "--model", "tik", "--select", "dp:1:-1"],
    ["sweep", "--grid", "5:1:10"],
    ["compare", "--models", "cel0"],
])
def test_usage_errors(dataset, tmp_path, capsys, argv):
    _, data = dataset
    assert cli.run(argv + ["--in", str(data), "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1 and err[0].startswith("whitesr: error=usage reason=")
    assert not (tmp_path / "o").exists()


def test_missing_input_and_bad_threads(tmp_path, monkeypatch, dataset):
    assert cli.run(["solve", "--model", "tik", "--in", str(tmp_path / "nowhere"), "--out", str(tmp_path / "o")]) == 2
    monkeypatch.setenv("WHITESR_THREADS", "many")
    assert cli.run(["solve", "--model", "tik", "--in", str(dataset[1]), "--out", str(tmp_path / "o")]) == 2
    assert cli.run(["bogus"]) == 2


def test_numerical_failure_exit_code(dataset, tmp_path, capsys):
    _, data = dataset
    zero = tmp_path / "zero"
    zero.mkdir()
    (zero / "meta.txt").write_bytes((data / "meta.txt").read_bytes())
    io.write_matrix(zero / "b.txt", np.zeros((32, 32)))
    assert cli.run(["solve", "--model", "tik", "--in", str(zero), "--out", str(tmp_path / "o")]) == 3
    assert capsys.readouterr().err.startswith("whitesr: error=numerical reason=")
    assert not (tmp_path / "o").exists()


def test_partial_outputs_removed(dataset, tmp_path):
    _, data = dataset
    out = tmp_path / "deep" / "rec"
    (out / "report.txt").mkdir(parents=True)
    assert cli.run(["solve", "--model", "tik", "--in", str(data), "--out", str(out)]) == 2
    assert sorted(os.listdir(out)) == ["report.txt"]


def test_outputs_tracker_removes_created_dirs(tmp_path):
    out = cli.Outputs()
    path = out.file(str(tmp_path / "a" / "b" / "f.txt"))
    open(path, "w").close()
    out.remove()
    assert os.listdir(tmp_path) == []


def test_module_entry_point(dataset, tmp_path):
    _, data = dataset
    proc = subprocess.run([sys.executable, "-m", "whitesr", "solve", "--model", "tik", "--select", "nope",
                           "--in", str(data), "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert proc.returncode == 2
    assert proc.stderr.startswith("whitesr: error=usage")
