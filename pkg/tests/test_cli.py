import csv
import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from edmimo import cli, experiments
from edmimo.config import parse_text
from edmimo.presets import PRESETS

SMALL = """\
[scenario]
name = small
seed = 21
trials = 2000

[constellation]
family = ook, pam

[channel]
model = rayleigh

[detector]
detectors = aed_gaussian, aed_bayesian, ied, coherent

[sweep]
axis = M
points = 8, 16
snr_db = 3
"""

BAD = """\
[scenario]
name = bad
seed = 1
trials = 100

[constellation]
family = custom
energies = 0, 1, 2
priors = 0.5, 0.3, 0.2

[channel]
model = sparse
paths = 0

[detector]
detectors = aed_gaussian

[sweep]
axis = M
points = 8, 16
snr_db = 3
"""


def test_power_and_path_diagnostics():
    spec, diags = parse_text(BAD, "bad.ini")
    assert spec is None
    text = [str(d) for d in diags]
    power = [t for t in text if "[constellation]" in t]
    assert power and power[0].startswith("bad.ini:8:") and "sum(prior*energy)" in power[0]
    assert any("[channel] paths" in t and "bad.ini:13:" in t for t in text)


def test_los_needs_two_paths():
    text = SMALL.replace("model = rayleigh", "model = sparse\npaths = 1\nlos = true\nrician_db = 3")
    _, diags = parse_text(text, "x.ini")
    assert any("paths" in str(d) for d in diags)


def test_fast_regime_rejects_ied():
    text = SMALL.replace("trials = 2000", "trials = 2000\nregime = fast")
    _, diags = parse_text(text, "x.ini")
    assert any("ied" in str(d) for d in diags)


def test_unknown_key_is_reported():
    _, diags = parse_text(SMALL.replace("seed = 21", "seed = 21\nsede = 3"), "x.ini")
    assert len(diags) == 1 and "sede" in str(diags[0])


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_revalidate(name, tmp_path, capsys):
    assert cli.main(["dump-preset", name]) == 0
    dumped = capsys.readouterr().out
    assert dumped == PRESETS[name]
    path = tmp_path / "p.ini"
    path.write_text(dumped)
    assert cli.main(["validate", str(path)]) == 0


def test_list_presets(capsys):
    assert cli.main(["list-presets"]) == 0
    out = capsys.readouterr().out
    assert all(name in out for name in PRESETS)


def test_exit_codes(tmp_path, capsys):
    assert cli.main(["run", "--preset", "no_such_thing", "--out", str(tmp_path)]) == 2
    assert cli.main(["run", "--config", str(tmp_path / "missing.ini"), "--out", str(tmp_path)]) == 2
    bad = tmp_path / "bad.ini"
    bad.write_text(BAD)
    assert cli.main(["run", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert "sum(prior*energy)" in capsys.readouterr().err
    assert cli.main(["validate", str(bad)]) == 2
    assert cli.main(["run", "--trials", "0", "--preset", "fig2_pdf_compare"]) == 2
    assert cli.main(["dump-preset", "nope"]) == 2


def test_runtime_failure_exits_one(tmp_path, monkeypatch, capsys):
    def boom(*a, **k):
        raise RuntimeError("disk on fire")

    monkeypatch.setattr(cli, "run_experiment", boom)
    assert cli.main(["--preset", "fig2_pdf_compare", "--out", str(tmp_path)]) == 1
    assert "disk on fire" in capsys.readouterr().err


def test_smoke_run_records_overrides(tmp_path):
    out = tmp_path / "o"
    assert cli.main(["--preset", "fig3_ook_vs_M", "--trials", "1000", "--seed", "5", "--out", str(out)]) == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["overrides"] == {"trials": 1000, "seed": 5}
    assert man["trials"] == 1000 and man["seed"] == 5
    assert man["scenario"] == PRESETS["fig3_ook_vs_M"]
    assert set(man["files"]) == {p.name for p in out.glob("*.csv")}
    with open(out / "fig3_ook_vs_M.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == experiments.SWEEP_COLUMNS
    mc = [r for r in rows if r["source"] == "montecarlo"]
    assert mc and all(r["trials"] == "1000" for r in mc)


def test_pdf_preset_columns(tmp_path):
    assert cli.main(["--preset", "fig2_pdf_compare", "--out", str(tmp_path)]) == 0
    with open(tmp_path / "fig2_pdf_compare.csv") as fh:
        reader = csv.DictReader(fh)
        assert reader.fieldnames == experiments.PDF_COLUMNS
        rows = list(reader)
    assert {r["M"] for r in rows} == {"8", "200"}


def _run(cfg, out, threads, numba_threads, pure=False):
    env = dict(os.environ, NUMBA_NUM_THREADS=str(numba_threads))
    env.pop("EDMIMO_PURE_NUMPY", None)
    if pure:
        env["EDMIMO_PURE_NUMPY"] = "1"
    cmd = [sys.executable, "-c", "import sys; from edmimo.cli import main; sys.exit(main())",
           "run", "--config", str(cfg), "--out", str(out), "--threads", str(threads)]
    res = subprocess.run(cmd, env=env, capture_output=True, text=True, timeout=600)
    assert res.returncode == 0, res.stderr
    return {p.name: p.read_bytes() for p in sorted(Path(out).glob("*.csv"))}


def _mc_rows(blob):
    rows = csv.DictReader(blob.decode().splitlines())
    return [(r["curve"], r["method"], r["M"], r["snr_db"], r["ser"], r["per_symbol"]) for r in rows
            if r["source"] == "montecarlo"]


def test_output_independent_of_thread_count_and_backend(tmp_path):
    cfg = tmp_path / "small.ini"
    cfg.write_text(SMALL)
    one = _run(cfg, tmp_path / "a", 1, 1)
    four = _run(cfg, tmp_path / "b", 4, 4)
    assert one == four  # byte-identical
    pure = _run(cfg, tmp_path / "c", 3, 1, pure=True)
    assert one.keys() == pure.keys()
    for name in one:
        # analytic rows may differ in the last bits across compilers; counts may not
        assert _mc_rows(one[name]) == _mc_rows(pure[name])
