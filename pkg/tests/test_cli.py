import json
import os

import pytest

from deltachain import cli
from deltachain.errors import NumericalBreakdown

CONFIG = """
[model]
couplings = 1, 0, 1
potential = lifted
[distribution]
kind = bernoulli
low = 0
high = 1
frozen = 2:0
[run]
seed = 7
[lyap]
grid = 1.5:1.7:0.1
steps = 4000
batches = 4
[zariski]
interval = 1.45, 1.7
grid_step = 0.05
[ids]
L = 6
grid = -2:5:0.5
[thouless]
grid = 1.5:1.7:0.1
L = 6
steps = 4000
ids_grid = -2:8:0.1
"""


@pytest.fixture
def ini(tmp_path):
    p = tmp_path / "run.ini"
    p.write_text(CONFIG)
    return str(p)


def outputs(d):
    return {f: open(os.path.join(d, f), "rb").read() for f in sorted(os.listdir(d))}


@pytest.mark.parametrize("command", ["lyap", "zariski", "ids", "thouless"])
def test_byte_identical_and_worker_independent(ini, tmp_path, command):
    runs = []
    for tag, workers in (("a", 1), ("b", 1), ("c", 2)):
        out = str(tmp_path / f"{command}_{tag}")
        assert cli.main([command, "--config", ini, "--out", out, "--workers", str(workers)]) == 0
        runs.append(outputs(out))
    assert runs[0] == runs[1] == runs[2]
    assert any(name.endswith(".csv") for name in runs[0])


def test_csv_metadata(ini, tmp_path):
    out = str(tmp_path / "o")
    assert cli.main(["ids", "--config", ini, "--out", out, "--format", "csv"]) == 0
    lines = open(os.path.join(out, "ids.csv")).read().splitlines()
    assert lines[0] == f"# version {cli.__version__}"
    assert lines[1].startswith("# config_sha256 ")
    assert lines[2] == "# seed 7" and lines[3] == "# command ids"
    assert lines[4] == "E,count,value,L,seed"
    assert not os.path.exists(os.path.join(out, "ids.json"))


def test_seed_override_changes_output(ini, tmp_path):
    a, b = str(tmp_path / "a"), str(tmp_path / "b")
    cli.main(["ids", "--config", ini, "--out", a])
    cli.main(["ids", "--config", ini, "--out", b, "--seed", "8"])
    assert outputs(a)["ids.csv"] != outputs(b)["ids.csv"]


def test_env_out_dir(ini, tmp_path, monkeypatch):
    target = tmp_path / "env_out"
    monkeypatch.setenv(cli.ENV_OUT, str(target))
    assert cli.main(["ids", "--config", ini]) == 0
    assert (target / "ids.csv").exists()


def test_exit_codes(ini, tmp_path, monkeypatch):
    bad = tmp_path / "bad.ini"
    bad.write_text(CONFIG + "[extra]\n")
    assert cli.main(["ids", "--config", str(bad), "--out", str(tmp_path / "x")]) == cli.EXIT_CONFIG
    assert cli.main(["ids", "--config", ini, "--workers", "0"]) == cli.EXIT_CONFIG
    short = tmp_path / "short.ini"
    short.write_text(CONFIG.replace("steps = 4000\nbatches", "steps = 10\nbatches"))
    assert cli.main(["lyap", "--config", str(short), "--out", str(tmp_path / "y")]) == cli.EXIT_PRECONDITION

    def boom(*_):
        raise NumericalBreakdown("frame collapsed")

    monkeypatch.setitem(cli.COMMANDS, "ids", boom)
    assert cli.main(["ids", "--config", ini, "--out", str(tmp_path / "z")]) == cli.EXIT_NUMERIC


def test_selftest(tmp_path):
    out = str(tmp_path / "s")
    assert cli.main(["selftest", "--out", out]) == 0
    text = open(os.path.join(out, "selftest.csv")).read()
    assert "FAIL" not in text and text.count("PASS") == 5


def test_zariski_notes_thresholds(tmp_path):
    p = tmp_path / "z.ini"
    p.write_text("[model]\ncouplings = 1, 0, 1\npotential = lifted\n"
                 "[zariski]\ninterval = 0.9, 1.1\ngrid_step = 0.1\n")
    out = str(tmp_path / "z")
    assert cli.main(["zariski", "--config", str(p), "--out", out]) == 0
    doc = json.load(open(os.path.join(out, "zariski.json")))
    assert any("threshold E=1.0" in n for n in doc["notes"])
    assert all(abs(r["E"] - 1.0) > 1e-9 for r in doc["rows"])
