import csv
import json

import numpy as np
import pytest

from contifact.cli import main
from contifact.errors import FileFormatError, ValidationError
from contifact.grid import Grid
from contifact.io import DensityFile, RunConfig, read_density, sidecar, write_density


@pytest.fixture
def sample(rng):
    g = Grid.symmetric(3.0, 16)
    v = rng.normal(size=(16, 2, 2)) + 1j * rng.normal(size=(16, 2, 2))
    return DensityFile(g, v, "factor", meta={"note": "x"})


def test_binary_round_trip_is_bit_identical(tmp_path, sample):
    path = tmp_path / "a.bin"
    write_density(path, sample)
    back = read_density(path)
    assert back.values.tobytes() == sample.values.tobytes()
    assert back.grid == sample.grid and back.kind == "factor" and back.meta == {"note": "x"}
    assert json.loads(sidecar(path).read_text())["encoding"] == "float64-le"


@pytest.mark.parametrize("suffix", [".json", ".csv"])
def test_text_round_trip(tmp_path, sample, suffix):
    path = tmp_path / f"a{suffix}"
    write_density(path, sample)
    back = read_density(path)
    assert np.max(np.abs(back.values - sample.values)) <= 1e-15
    assert back.grid == sample.grid


def test_header_and_hermitian_flag(sample):
    h = sample.header()
    assert h["r"] == 2 and h["grid"]["n"] == 16 and not h["hermitian"]
    herm = DensityFile(sample.grid, sample.values + np.conj(np.swapaxes(sample.values, 1, 2)))
    assert herm.hermitian


def test_truncated_payloads(tmp_path, sample):
    path = tmp_path / "a.bin"
    write_density(path, sample)
    path.write_bytes(path.read_bytes()[:-16])
    with pytest.raises(FileFormatError, match="payload"):
        read_density(path)
    jpath = tmp_path / "a.json"
    write_density(jpath, sample)
    doc = json.loads(jpath.read_text())
    doc["payload"] = doc["payload"][:-3]
    jpath.write_text(json.dumps(doc))
    with pytest.raises(FileFormatError, match="payload"):
        read_density(jpath)
    with pytest.raises(FileFormatError):
        read_density(tmp_path / "missing.json")
    (tmp_path / "bad.json").write_text('{"format": "other"}')
    with pytest.raises(FileFormatError):
        read_density(tmp_path / "bad.json")


def test_atomic_write_leaves_no_temp_files(tmp_path, sample):
    write_density(tmp_path / "a.json", sample)
    assert sorted(p.name for p in tmp_path.iterdir()) == ["a.json"]


def test_run_config_validation(tmp_path):
    cfg = RunConfig.from_mapping({"bins": 8, "tol-unitary": 1e-9})
    assert cfg.bins == [8] and cfg.tol_unitary == 1e-9
    assert cfg.solver().tol_unitary == 1e-9
    assert cfg.factorize_params().bins_list() == [8]
    for bad in ({"n": 1000}, {"tol_det": 0}, {"bins": []}, {"nope": 1}, {"method": "x"}):
        with pytest.raises(ValidationError):
            RunConfig.from_mapping(bad)
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({"seed": 3}))
    assert RunConfig.from_file(p).seed == 3


SMALL = ["--T", "128", "--n", "16384"]


@pytest.fixture
def synth_files(tmp_path):
    d, a = tmp_path / "d.json", tmp_path / "a.json"
    assert main(["synth", "--preset", "rational-2x2", "--out", str(d), "--oracle", str(a)] + SMALL) == 0
    return d, a


def test_cli_synth_and_verify(tmp_path, synth_files):
    d, a = synth_files
    rep = tmp_path / "r.json"
    assert main(["verify", str(d), str(a), "--report", str(rep)]) == 0
    assert json.loads(rep.read_text())["residual_l1"] <= 1e-10


def test_cli_factorize(tmp_path, synth_files):
    d, _ = synth_files
    out, rep = tmp_path / "f.bin", tmp_path / "r.json"
    assert main(["factorize", str(d), "--out", str(out), "--report", str(rep), "--bins", "8"]) == 0
    report = json.loads(rep.read_text())
    assert report["residual_l1"] <= 1e-3
    assert report["config"]["bins"] == [8]
    assert read_density(out).kind == "factor"
    rep2 = tmp_path / "r2.json"
    assert main(["factorize", str(d), "--out", str(out), "--report", str(rep2), "--bins", "8"]) == 0
    assert rep2.read_text() == rep.read_text()


def test_cli_factorize_with_config_and_threads(tmp_path, synth_files, monkeypatch):
    d, _ = synth_files
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"bins": [4], "seed": 1}))
    monkeypatch.setenv("CONTIFACT_THREADS", "1")
    assert main(["factorize", str(d), "--out", str(tmp_path / "f.json"),
                 "--report", str(tmp_path / "r.json"), "--config", str(cfg)]) == 0
    assert json.loads((tmp_path / "r.json").read_text())["config"]["seed"] == 1
    monkeypatch.setenv("CONTIFACT_THREADS", "zero")
    assert main(["factorize", str(d), "--out", str(tmp_path / "f.json")]) == 1


def test_cli_gaussian_exit_2(tmp_path, capsys):
    d = tmp_path / "g.json"
    assert main(["synth", "--preset", "gaussian", "--out", str(d), "--T", "64", "--n", "4096"]) == 0
    capsys.readouterr()
    assert main(["factorize", str(d), "--out", str(tmp_path / "f.json")]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "paley-wiener" and "Paley-Wiener" in err["message"]


def test_cli_truncated_exit_1(tmp_path, synth_files, capsys):
    d, _ = synth_files
    doc = json.loads(d.read_text())
    doc["payload"] = doc["payload"][:100]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    assert main(["factorize", str(bad), "--out", str(tmp_path / "f.json")]) == 1
    assert json.loads(capsys.readouterr().err)["error"] == "file-format"


def test_cli_verify_mismatched_r(tmp_path, synth_files):
    d, _ = synth_files
    s = tmp_path / "s.json"
    assert main(["synth", "--preset", "scalar-rational", "--out", str(s)] + SMALL) == 0
    assert main(["verify", str(d), str(s)]) == 1


def test_cli_non_pd_exit_1(tmp_path):
    g = Grid.symmetric(16.0, 1024)
    v = np.zeros((g.n, 2, 2), complex)
    v[:, 0, 0] = v[:, 1, 1] = v[:, 0, 1] = v[:, 1, 0] = 1 / (1 + g.t**2)
    path = tmp_path / "s.json"
    write_density(path, DensityFile(g, v))
    assert main(["factorize", str(path), "--out", str(tmp_path / "f.json")]) == 1


def test_cli_convergence(tmp_path):
    d = tmp_path / "p.json"
    # the pivot factor tends to a constant, so window leakage is O(1/T)
    assert main(["synth", "--preset", "phase-twisted", "--out", str(d), "--T", "256", "--n", "16384"]) == 0
    out = tmp_path / "c.csv"
    assert main(["convergence", str(d), "--bins", "2", "4", "--csv", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert list(rows[0]) == ["N", "residual_l1", "analyticity", "det_identity", "wall_time"]
    assert [r["N"] for r in rows] == ["2", "4"]
    assert all(float(r["residual_l1"]) <= 1e-2 for r in rows)


def test_cli_transform(tmp_path, synth_files):
    d, _ = synth_files
    for op in ("forward", "plus", "minus", "hilbert", "inverse"):
        out = tmp_path / f"{op}.csv"
        assert main(["transform", str(d), "--op", op, "--out", str(out)]) == 0
        assert len(out.read_text().splitlines()) == 16385
    assert main(["transform", str(d), "--op", "forward", "--entry", "5", "0"]) == 1


def test_cli_rejects_bad_n(tmp_path):
    assert main(["synth", "--out", str(tmp_path / "x.json"), "--n", "1000"]) == 1
