import json
import shutil
import subprocess
import sys

import pytest

from sqglab import cli, io

MINIMAL = """\
[solver]
truncation = 8, 8
dt = 0.01
t_end = 0.1

[initial]
kind = mode
mode = 1, 2
"""

CONSTANT = """\
[solver]
truncation = 8, 8
dt = 0.05
t_end = 0.5

[initial]
kind = constant

[output]
snapshot_every = 2
"""


def write(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_simulate_minimal(tmp_path):
    cfg = write(tmp_path, MINIMAL)
    out = tmp_path / "out"
    assert cli.main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    files = sorted(p.name for p in out.iterdir())
    assert files == ["final.sqgf", "manifest.json", "trajectory.csv"]
    man = json.loads((out / "manifest.json").read_text())
    assert man["config_sha256"] == io.sha256(cfg)
    assert {a["path"] for a in man["artifacts"]} == {"final.sqgf", "trajectory.csv"}
    for a in man["artifacts"]:
        assert a["sha256"] == io.sha256(out / a["path"])
    assert set(man["timings"]) == {"solve", "write"}
    cols, rows = io.read_csv(out / "trajectory.csv")
    assert tuple(cols) == io.TRAJECTORY_COLUMNS and rows[-1, 0] == pytest.approx(0.1)


def test_simulate_deterministic_checksums(tmp_path):
    cfg = write(tmp_path, MINIMAL)
    sums = []
    for d in ("a", "b"):
        assert cli.main(["simulate", "--config", str(cfg), "--out", str(tmp_path / d), "--deterministic"]) == 0
        man = json.loads((tmp_path / d / "manifest.json").read_text())
        sums.append([a["sha256"] for a in man["artifacts"]])
    assert sums[0] == sums[1]


def test_malformed_key_exit_2(tmp_path, capsys):
    cfg = write(tmp_path, MINIMAL.replace("dt = 0.01", "dt = 0.01\nbogus = 1"))
    assert cli.main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    assert "bogus" in err and "line 4" in err


def test_usage_errors(tmp_path):
    assert cli.main(["simulate"]) == 2
    assert cli.main(["verify", "--suite", "nonsense", "--out", str(tmp_path)]) == 2
    assert cli.main(["frobnicate"]) == 2
    assert cli.main(["verify", "--threads", "0", "--out", str(tmp_path)]) == 2
    assert cli.main(["--version"]) == 0


def test_solver_abort_dump(tmp_path):
    text = (MINIMAL.replace("kind = mode", "kind = random\nkmax = 4\namplitude = 5000")
            .replace("t_end = 0.1", "t_end = 0.1\nmax_halvings = 0"))
    cfg = write(tmp_path, text)
    out = tmp_path / "o"
    assert cli.main(["simulate", "--config", str(cfg), "--out", str(out)]) == 1
    dump = json.loads((out / "abort.json").read_text())
    assert "CFL" in dump["reason"]
    head, _ = io.read_snapshot(out / dump["state"])
    assert (head.Mx, head.My) == (8, 8)


def test_verify_barrier(tmp_path):
    assert cli.main(["verify", "--suite", "barrier", "--out", str(tmp_path)]) == 0
    body = json.loads((tmp_path / "verify_barrier.json").read_text())
    assert body["pass"]
    assert (tmp_path / "verify_barrier.txt").read_text().rstrip().endswith("overall: PASS")


def test_holder_constant_sentinel(tmp_path):
    cfg = write(tmp_path, CONSTANT)
    traj = tmp_path / "traj"
    assert cli.main(["simulate", "--config", str(cfg), "--out", str(traj)]) == 0
    out = tmp_path / "h"
    assert cli.main(["holder", "--config", str(cfg), "--trajectory", str(traj), "--out", str(out)]) == 0
    fit = json.loads((out / "holder.json").read_text())["checks"]["holder_fit"]
    assert fit["regular"] and fit["alpha"] == "inf"
    cols, rows = io.read_csv(out / "oscillation.csv")
    assert tuple(cols) == io.OSCILLATION_COLUMNS and (rows[:, 3] == 0).all()


def test_holder_needs_trajectory(tmp_path):
    assert cli.main(["holder", "--out", str(tmp_path)]) == 2
    # a final-state-only run is not a trajectory
    cfg = write(tmp_path, MINIMAL)
    assert cli.main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "s")]) == 0
    assert cli.main(["holder", "--config", str(cfg), "--trajectory", str(tmp_path / "s"),
                     "--out", str(tmp_path / "h")]) == 2


@pytest.fixture(scope="module")
def tiny_trajectory(tmp_path_factory):
    d = tmp_path_factory.mktemp("tiny")
    assert cli.main(["simulate", "--config", str(cli.bundled_config()), "--out", str(d)]) == 0
    return d


def test_holder_bundled_config_in_golden_range(tiny_trajectory, tmp_path, monkeypatch):
    monkeypatch.delenv("SQG_GOLDEN_DIR", raising=False)
    assert cli.main(["holder", "--trajectory", str(tiny_trajectory), "--out", str(tmp_path)]) == 0
    checks = json.loads((tmp_path / "holder.json").read_text())["checks"]
    assert checks["golden"]["compared"] == 1 and checks["golden"]["pass"]
    assert checks["holder_fit"]["alpha"] > 0


def test_golden_dir_override(tiny_trajectory, tmp_path, monkeypatch):
    gd = tmp_path / "golden"
    gd.mkdir()
    (gd / "holder.json").write_text(json.dumps({"values": {"alpha": [10.0, 11.0]}}))
    monkeypatch.setenv("SQG_GOLDEN_DIR", str(gd))
    assert cli.golden_dir() == gd
    out = tmp_path / "o"
    assert cli.main(["holder", "--trajectory", str(tiny_trajectory), "--out", str(out)]) == 1
    # goldens recorded for another config are ignored
    (gd / "holder.json").write_text(json.dumps({"config_sha256": "0" * 64, "values": {"alpha": [10.0, 11.0]}}))
    assert cli.main(["holder", "--trajectory", str(tiny_trajectory), "--out", str(out)]) == 0


def test_holder_inline(tmp_path):
    cfg = write(tmp_path, MINIMAL.replace("t_end = 0.1", "t_end = 0.2"))
    assert cli.main(["holder", "--config", str(cfg), "--inline", "--out", str(tmp_path / "o")]) == 0


@pytest.mark.skipif(shutil.which("sqglab") is None, reason="console script not installed")
def test_console_script(tmp_path):
    r = subprocess.run(["sqglab", "verify", "--suite", "nonsense", "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 2 and "unknown suite" in r.stderr
    r = subprocess.run([sys.executable, "-m", "sqglab.cli", "verify", "--suite", "barrier", "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "PASS" in r.stdout
