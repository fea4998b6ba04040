"""Command line, manifests, seed derivation and the batch runner."""

import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from truncfront import batch
from truncfront.cli import main

MASK = (1 << 64) - 1


def reference_splitmix64(x):
    """Straight transcription of the published splitmix64 finaliser."""
    x = (x + 0x9E3779B97F4A7C15) & MASK
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & MASK
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & MASK
    x ^= x >> 31
    return x


def run_cli(*argv):
    return main([str(a) for a in argv])


def manifest(d):
    return json.loads((d / "manifest.json").read_text())


# ---------------------------------------------------------------- seeds and batches


def test_splitmix_known_value():
    # first output of a splitmix64 stream seeded with 0
    assert batch.splitmix64(0) == 0xE220A8397B1DCDAF
    for x in (1, 42, MASK, 2**63):
        assert batch.splitmix64(x) == reference_splitmix64(x)


def test_derived_seeds():
    seeds = batch.derive_seeds(42, 5)
    assert seeds == [reference_splitmix64((reference_splitmix64(42) + i) & MASK) for i in range(5)]
    assert len(set(seeds)) == 5
    assert all(0 <= s <= MASK for s in seeds)
    assert batch.derive_seed(42, 3) == seeds[3]


def _square(x):
    if x == 3:
        raise RuntimeError("boom")
    return x * x


@pytest.mark.parametrize("threads", [1, 2])
def test_run_batch_order_and_errors(threads):
    out = batch.run_batch(_square, [0, 1, 2, 3, 4], threads=threads)
    assert out[:3] == [0, 1, 4] and out[4] == 16
    assert isinstance(out[3], RuntimeError)


def test_thread_cap(monkeypatch):
    monkeypatch.setenv("TRUNCFRONT_THREADS", "3")
    assert batch.thread_cap() == 3
    monkeypatch.setenv("TRUNCFRONT_THREADS", "0")
    assert batch.thread_cap() == 1
    monkeypatch.setenv("TRUNCFRONT_THREADS", "many")
    with pytest.raises(ValueError):
        batch.thread_cap()


def test_output_independent_of_threads(tmp_path, monkeypatch):
    for n in ("1", "2"):
        monkeypatch.setenv("TRUNCFRONT_THREADS", n)
        assert run_cli("simulate-lattice", "--alpha", 3, "--horizon", 5, "--runs", 3, "--master-seed", 9, "--output-dir", tmp_path / n) == 0
    for f in sorted((tmp_path / "1").glob("lattice_*.csv")):
        assert f.read_bytes() == (tmp_path / "2" / f.name).read_bytes()


# ---------------------------------------------------------------- subcommands


def test_simulate_lattice_batch(tmp_path):
    assert run_cli("simulate-lattice", "--alpha", 3, "--horizon", 10, "--runs", 4, "--master-seed", 42, "--output-dir", tmp_path) == 0
    files = sorted(tmp_path.glob("lattice_*.csv"))
    assert len(files) == 4
    m = manifest(tmp_path)
    assert m["config"]["seeds"] == batch.derive_seeds(42, 4)
    assert m["status"] == "ok"
    assert set(m["outputs"]) == {f.name for f in files}
    with files[0].open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "left_tip", "right_tip", "n_particles", "q_estimate"]
    assert rows[1][:4] == ["0.0", "0", "0", "1"]


def test_manifest_rerun_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run_cli("simulate-continuum", "--alpha", 1.5, "--horizon", 3, "--runs", 2, "--master-seed", 5, "--output-dir", a) == 0
    assert run_cli("simulate-continuum", "--config", a / "manifest.json", "--output-dir", b) == 0
    ma, mb = manifest(a), manifest(b)
    assert ma["outputs"] == mb["outputs"]
    for name in ma["outputs"]:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"alpha": 3.0, "horizon": 2.0, "seeds": [1]}))
    assert run_cli("simulate-lattice", "--config", cfg, "--horizon", 4, "--output-dir", tmp_path / "o") == 0
    assert manifest(tmp_path / "o")["config"]["horizon"] == 4.0


def test_no_clobber(tmp_path, capsys):
    args = ("simulate-gamma", "--horizon", 5, "--seeds", 1, "--output-dir", tmp_path)
    assert run_cli(*args) == 0
    assert run_cli(*args) == 0  # overwrite with a warning
    assert run_cli(*args, "--no-clobber") == 2
    assert "exists" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv",
    [
        ("simulate-lattice", "--alpha", 0.3, "--horizon", 1),
        ("simulate-lattice", "--horizon", 1),
        ("simulate-lattice", "--alpha", 2, "--horizon", -1),
        ("simulate-continuum", "--alpha", 2, "--horizon", 1, "--runs", 0),
        ("verify", "--suite", "no_such_check"),
    ],
)
def test_invalid_input_exits_2(tmp_path, capsys, argv):
    assert run_cli(*argv, "--output-dir", tmp_path) == 2
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1 and err[0].startswith("truncfront: error:")


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"alpha": 3.0, "horizon": 2.0, "colour": "red"}))
    assert run_cli("simulate-lattice", "--config", cfg, "--output-dir", tmp_path) == 2


def test_window_failure_marks_run(tmp_path):
    rc = run_cli("simulate-lattice", "--alpha", 0.75, "--horizon", 100, "--max-window", 60, "--no-q", "--seeds", 3, "--output-dir", tmp_path)
    assert rc == 1
    m = manifest(tmp_path)
    assert m["status"] == "failed"
    assert m["result"]["runs"][0]["status"] == "failed"
    # the partial trajectory is still flushed
    assert list(tmp_path.glob("lattice_*.csv"))


def test_couple_xi_zeta(tmp_path):
    assert run_cli("couple-xi-zeta", "--alpha", 3, "--events", 500, "--runs", 2, "--output-dir", tmp_path) == 0
    rep = json.loads((tmp_path / "domination.json").read_text())
    assert rep["violations"] == 0
    assert rep["events"] == 1000


def test_simulate_gamma(tmp_path):
    assert run_cli("simulate-gamma", "--horizon", 20, "--seeds", 4, 5, "--output-dir", tmp_path) == 0
    assert (tmp_path / "gamma_4.csv").exists() and (tmp_path / "gamma_5.csv").exists()
    summary = json.loads((tmp_path / "gamma_summary.json").read_text())
    assert summary


def test_solve_meso_outputs(tmp_path):
    rc = run_cli("solve-meso", "--alpha", 1, "--init", "bump", "--horizon", 2, "--level", 0.5, "--cells", 4096, "--frame-every", 1, "--output-dir", tmp_path)
    assert rc == 0
    with (tmp_path / "front_0.5.csv").open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "level", "x_left", "x_right"]
    frames = sorted(tmp_path.glob("field_t*.csv"))
    assert len(frames) == 3
    with frames[-1].open() as fh:
        assert next(csv.reader(fh)) == ["x", "u"]


def test_analyze_linear(tmp_path):
    run_cli("simulate-lattice", "--alpha", 3, "--horizon", 20, "--runs", 2, "--output-dir", tmp_path)
    assert run_cli("analyze", "--input", tmp_path, "--alpha", 3, "--output-dir", tmp_path) == 0
    fits = json.loads((tmp_path / "analysis.json").read_text())
    assert len(fits) == 2 and all("slope" in f for f in fits)
    lines = (tmp_path / "summary.csv").read_text().splitlines()
    assert lines[0] == "check,alpha,slope,stderr,pass"
    assert len(lines) == 3


def test_analyze_missing_input(tmp_path):
    assert run_cli("analyze", "--input", tmp_path / "nothing", "--output-dir", tmp_path) == 2


def test_verify_subset(tmp_path, capsys):
    assert run_cli("verify", "--suite", "kernel_ratio,series_ldp", "--output-dir", tmp_path) == 0
    rep = json.loads((tmp_path / "verify.json").read_text())
    assert rep["pass"] is True
    names = [c["check"] for c in rep["checks"]]
    assert len(names) == 2
    for c in rep["checks"]:
        assert {"check", "params", "max_violation", "pass"} <= set(c)
    out = capsys.readouterr().out
    assert out.count("PASS") == 2


def test_entry_point_module():
    proc = subprocess.run([sys.executable, "-m", "truncfront.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.startswith("truncfront ")
