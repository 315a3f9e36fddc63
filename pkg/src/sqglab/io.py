"""Snapshot, table and report files."""

from __future__ import annotations

import csv
import hashlib
import json
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .eigenbasis import DomainSpec, SpectralField, build_basis

MAGIC = b"SQGF"
VERSION = 1
SHAPES = {"rectangle": 0, "disk": 1}
_HEADER = struct.Struct("<4sHHII8sQ")
assert _HEADER.size == 32


class SnapshotError(ValueError):
    pass


@dataclass(frozen=True)
class SnapshotHeader:
    version: int
    shape: str
    Mx: int
    My: int
    payload_bytes: int

    @property
    def n_coeffs(self) -> int:
        return self.payload_bytes // 8


def encode_snapshot(field: SpectralField) -> bytes:
    b = field.basis
    payload = np.ascontiguousarray(field.coeffs, dtype="<f8").tobytes()
    Mx, My = b.truncation
    head = _HEADER.pack(MAGIC, VERSION, SHAPES[b.domain.shape], Mx, My, bytes(8), len(payload))
    return head + payload


def decode_snapshot(data: bytes) -> tuple[SnapshotHeader, np.ndarray]:
    if len(data) < _HEADER.size:
        raise SnapshotError(f"file too short for a header ({len(data)} bytes)")
    magic, ver, shape, Mx, My, _, n = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise SnapshotError(f"bad magic {magic!r}")
    if ver != VERSION:
        raise SnapshotError(f"unsupported version {ver}")
    names = {v: k for k, v in SHAPES.items()}
    if shape not in names:
        raise SnapshotError(f"unknown shape code {shape}")
    if n % 8 or len(data) != _HEADER.size + n:
        raise SnapshotError(f"payload length {n} does not match file size {len(data)}")
    head = SnapshotHeader(ver, names[shape], Mx, My, n)
    return head, np.frombuffer(data, dtype="<f8", offset=_HEADER.size).astype(float)


def write_snapshot(path, field: SpectralField) -> Path:
    path = Path(path)
    path.write_bytes(encode_snapshot(field))
    return path


def read_snapshot(path, domain: DomainSpec | None = None):
    """Header and coefficients; with a ``domain`` the coefficients come back as a SpectralField.

    The header does not carry side lengths, so the default domain is the
    unit-scale one of the stored shape (pi-square or unit disk).
    """
    head, coeffs = decode_snapshot(Path(path).read_bytes())
    if domain is None:
        domain = DomainSpec.rectangle() if head.shape == "rectangle" else DomainSpec.disk()
    if domain.shape != head.shape:
        raise SnapshotError(f"snapshot is for a {head.shape}, domain is a {domain.shape}")
    basis = build_basis(domain, (head.Mx, head.My))
    if basis.n_modes != len(coeffs):
        raise SnapshotError(f"{len(coeffs)} coefficients for a basis of {basis.n_modes} modes")
    return head, SpectralField(basis, coeffs)


def coefficient_rows(field: SpectralField):
    b = field.basis
    m, n = b.mode_labels()
    for i, (mi, ni, lam, c) in enumerate(zip(m, n, b.eigenvalues, field.coeffs)):
        yield i, int(mi), int(ni), float(lam), float(c)


COEFF_COLUMNS = ("mode_index", "m", "n_or_k", "lambda", "coeff")
TRAJECTORY_COLUMNS = ("t", "l2", "linf", "h_half", "energy_residual")
LADDER_COLUMNS = ("k", "t_k", "a_k", "E_k", "levelset_measure")
OSCILLATION_COLUMNS = ("k", "radius", "timespan", "osc", "center_x", "center_y")
KERNEL_COLUMNS = ("s", "x1", "x2", "y1", "y2", "dist", "K", "K_times_dist_pow")
BAND_COLUMNS = ("j", "sup_u", "sup_grad_u", "sup_lam_minus_quarter_u",
                "ratio_sup", "ratio_grad", "ratio_lam_minus_quarter")


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def write_csv(path, columns, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            if len(r) != len(columns):
                raise ValueError(f"row of length {len(r)} for {len(columns)} columns")
            w.writerow([_fmt(v) for v in r])
    return path


def read_csv(path) -> tuple[list, np.ndarray]:
    with Path(path).open() as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(v) for v in r] for r in rows[1:]]).reshape(-1, len(rows[0]))


def to_jsonable(obj):
    """Plain JSON types; arrays become lists, non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "__dict__"):
        return {k: to_jsonable(v) for k, v in vars(obj).items() if not k.startswith("_")}
    return repr(obj)


def write_report(stem, title: str, checks: dict, extra: dict | None = None) -> list[Path]:
    """``stem``.json for machines and ``stem``.txt for people; returns both paths.

    ``checks`` maps a check name to a dict that has at least a ``pass`` key.
    """
    stem = Path(stem)
    body = {"title": title, "pass": all(bool(c.get("pass", False)) for c in checks.values()),
            "checks": to_jsonable(checks)}
    if extra:
        body["extra"] = to_jsonable(extra)
    js = stem.with_suffix(".json")
    js.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")
    lines = [title, "=" * len(title)]
    for name, c in checks.items():
        lines.append(f"{'PASS' if c.get('pass') else 'FAIL'}  {name}")
        for k, v in c.items():
            if k == "pass" or isinstance(v, (list, dict, np.ndarray)):
                continue
            lines.append(f"      {k} = {_fmt(to_jsonable(v))}")
    lines.append(f"overall: {'PASS' if body['pass'] else 'FAIL'}")
    txt = stem.with_suffix(".txt")
    txt.write_text("\n".join(lines) + "\n")
    return [js, txt]


def sha256(path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()
