import json
import math
import struct

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sqglab import io
from sqglab.config import ConfigError, RunConfig, load_config, parse_config
from sqglab.eigenbasis import DomainSpec, RectangleBasis, SpectralField


# --- snapshots


def test_snapshot_round_trip(tmp_path, square16, disk):
    for b in (square16, disk):
        f = SpectralField(b, np.random.default_rng(0).standard_normal(b.n_modes))
        p = io.write_snapshot(tmp_path / "s.sqgf", f)
        head, g = io.read_snapshot(p, b.domain)
        assert np.array_equal(g.coeffs, f.coeffs)
        assert head.shape == b.domain.shape and (head.Mx, head.My) == b.truncation
        assert head.payload_bytes == 8 * b.n_modes
        assert p.stat().st_size == 32 + 8 * b.n_modes


def test_snapshot_header_layout(square16):
    f = SpectralField(square16, np.arange(square16.n_modes, dtype=float))
    data = io.encode_snapshot(f)
    magic, ver, shape, mx, my = struct.unpack_from("<4sHHII", data)
    assert (magic, ver, shape, mx, my) == (b"SQGF", 1, 0, 16, 16)
    assert data[16:24] == bytes(8)
    assert struct.unpack_from("<Q", data, 24)[0] == 8 * 256
    assert struct.unpack_from("<d", data, 32 + 8 * 5)[0] == 5.0


def test_snapshot_default_domain(tmp_path, square16):
    f = SpectralField(square16, np.ones(square16.n_modes))
    io.write_snapshot(tmp_path / "a.sqgf", f)
    _, g = io.read_snapshot(tmp_path / "a.sqgf")
    assert g.basis.domain.lengths == (math.pi, math.pi)


def test_snapshot_errors(tmp_path, square16, disk):
    good = io.encode_snapshot(SpectralField(square16, np.ones(square16.n_modes)))
    with pytest.raises(io.SnapshotError, match="magic"):
        io.decode_snapshot(b"XXXX" + good[4:])
    with pytest.raises(io.SnapshotError, match="payload length"):
        io.decode_snapshot(good[:-8])
    with pytest.raises(io.SnapshotError, match="short"):
        io.decode_snapshot(good[:10])
    with pytest.raises(io.SnapshotError, match="version"):
        io.decode_snapshot(good[:4] + struct.pack("<H", 9) + good[6:])
    with pytest.raises(io.SnapshotError, match="shape code"):
        io.decode_snapshot(good[:6] + struct.pack("<H", 7) + good[8:])
    p = tmp_path / "r.sqgf"
    p.write_bytes(good)
    with pytest.raises(io.SnapshotError, match="disk"):
        io.read_snapshot(p, disk.domain)


@given(st.lists(st.floats(allow_nan=False, width=64), min_size=1, max_size=30))
def test_snapshot_bytes_round_trip(vals):
    b = RectangleBasis(DomainSpec.rectangle(), len(vals), 1)
    f = SpectralField(b, np.array(vals))
    _, c = io.decode_snapshot(io.encode_snapshot(f))
    assert np.array_equal(c, f.coeffs)


# --- tables and reports


def test_csv_round_trip(tmp_path):
    rows = [(0, 0.1, 1 / 3), (1, -2.5e-300, math.pi)]
    p = io.write_csv(tmp_path / "t.csv", ("k", "a", "b"), rows)
    cols, arr = io.read_csv(p)
    assert cols == ["k", "a", "b"]
    assert arr[0, 2] == 1 / 3 and arr[1, 1] == -2.5e-300
    with pytest.raises(ValueError):
        io.write_csv(tmp_path / "bad.csv", ("k",), [(1, 2)])


def test_coefficient_rows(square16):
    f = SpectralField.mode(square16, (2, 1), 3.0)
    rows = [r for r in io.coefficient_rows(f) if r[4] != 0]
    assert len(rows) == 1 and rows[0][1:3] == (2, 1) and rows[0][4] == 3.0
    assert len(io.COEFF_COLUMNS) == 5


def test_report_pair(tmp_path):
    checks = {"a": {"x": 1.5, "pass": True}, "b": {"y": math.inf, "arr": np.ones(2), "pass": False}}
    js, txt = io.write_report(tmp_path / "rep", "demo", checks)
    body = json.loads(js.read_text())
    assert body["pass"] is False
    assert body["checks"]["b"]["y"] == "inf" and body["checks"]["b"]["arr"] == [1.0, 1.0]
    text = txt.read_text()
    assert "PASS  a" in text and "FAIL  b" in text and "overall: FAIL" in text


def test_sha256(tmp_path):
    p = tmp_path / "f"
    p.write_bytes(b"abc")
    assert io.sha256(p) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"


# --- configuration

GOOD = """\
[domain]
shape = rectangle
Lx = 2.0
Ly = 1.5

[solver]
truncation = 12, 10
dt = 0.005
t_end = 0.1
pad = 3
epsilon = 0.1

[initial]
kind = mode
mode = 2, 1
amplitude = 0.5

[output]
snapshot_every = 2
"""


def test_parse_good_config():
    cfg = parse_config(GOOD)
    assert isinstance(cfg, RunConfig)
    assert cfg.domain.spec().lengths == (2.0, 1.5)
    assert cfg.solver.truncation == (12, 10) and cfg.solver.dealias_pad == 3
    assert cfg.solver.epsilon == 0.1 and cfg.solver.scheme == "IF-RK3"
    assert cfg.initial.mode == (2, 1)
    assert cfg.output.snapshot_every == 2
    assert len(cfg.digest) == 64
    assert parse_config(GOOD).digest == cfg.digest
    assert parse_config(GOOD + "\n").digest != cfg.digest


def test_bundled_config_loads():
    from sqglab.cli import bundled_config
    cfg = load_config(bundled_config())
    assert cfg.solver.truncation == (16, 16)
    assert cfg.verify.seeds >= 3


@pytest.mark.parametrize("text,line,key", [
    ("[solver]\ndt = 0.1\nbogus = 3\n", 3, "bogus"),
    ("[domain]\nshape = triangle\n", 2, "shape"),
    ("[solver]\n\ndt = fast\n", 3, "dt"),
    ("[weird]\na = 1\n", 1, "weird"),
    ("[solver]\nscheme = RK4\n", 2, "scheme"),
    ("[initial]\nkind = constant\nvalue = 1.0\n", 3, "value"),
    ("[holder]\neps = 1.5\n", 2, "eps"),
    ("[initial]\nkind = mode\nmode = 1\n", 3, "mode"),
])
def test_config_errors_carry_line_and_key(text, line, key):
    with pytest.raises(ConfigError) as ei:
        parse_config(text)
    assert ei.value.line == line
    assert ei.value.key == key
    assert str(ei.value).startswith(f"line {line}:")


def test_config_value_errors_from_dataclass():
    with pytest.raises(ConfigError, match="dt must be positive") as ei:
        parse_config("# comment\n[solver]\ndt = -1\n")
    assert ei.value.line == 2


def test_config_syntax_errors():
    with pytest.raises(ConfigError) as ei:
        parse_config("dt = 1\n")
    assert ei.value.line == 1
    with pytest.raises(ConfigError) as ei:
        parse_config("[solver]\ndt = 1\ndt = 2\n")
    assert ei.value.line == 3


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "nope.ini")


def test_keys_are_case_insensitive():
    cfg = parse_config("[Domain]\nLX = 3.0\n[solver]\nT_END = 0.5\n")
    assert cfg.domain.Lx == 3.0 and cfg.solver.t_end == 0.5
