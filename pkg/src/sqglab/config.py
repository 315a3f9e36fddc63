"""INI run configuration.

Flat ``key = value`` pairs under section headers.  Unknown sections and keys
are errors that carry the offending line number.
"""

from __future__ import annotations

import configparser
import hashlib
import math
import re
from dataclasses import dataclass, field, fields
from pathlib import Path

from .eigenbasis import DomainSpec
from .solver import SolverConfig


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        self.line, self.key = line, key
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)


@dataclass(frozen=True)
class DomainSection:
    shape: str = "rectangle"
    Lx: float = math.pi
    Ly: float = math.pi
    R: float = 1.0

    def spec(self) -> DomainSpec:
        if self.shape == "rectangle":
            return DomainSpec.rectangle(self.Lx, self.Ly)
        return DomainSpec.disk(self.R)


@dataclass(frozen=True)
class InitialSection:
    kind: str = "random"  # mode | random | bump | constant
    mode: tuple = (1, 1)
    amplitude: float = 1.0
    kmax: int = 8
    decay: float = 2.0
    center: tuple = ()
    radius: float = 0.0
    value: float = 0.0


@dataclass(frozen=True)
class OutputSection:
    dir: str = "out"
    snapshot_every: int = 0  # 0 keeps only the final state


@dataclass(frozen=True)
class HolderSection:
    eps: float = 0.8
    levels: int = 6
    radius: float = 0.0  # 0 picks half the inradius
    center: tuple = ()
    t_ref: float = -1.0  # negative means the final record
    t_scale: float = 0.0  # 0 picks the span of the run
    trajectory: str = ""


@dataclass(frozen=True)
class VerifySection:
    kernel_truncation: int = 24
    kernel_samples: int = 24
    lp_truncation: int = 32
    calibration_truncation: int = 24
    degiorgi_truncation: int = 16
    seeds: int = 3


@dataclass(frozen=True)
class RunConfig:
    domain: DomainSection = field(default_factory=DomainSection)
    solver: SolverConfig = field(default_factory=SolverConfig)
    initial: InitialSection = field(default_factory=InitialSection)
    output: OutputSection = field(default_factory=OutputSection)
    holder: HolderSection = field(default_factory=HolderSection)
    verify: VerifySection = field(default_factory=VerifySection)
    source: str = ""
    digest: str = ""


_SECTIONS = {
    "domain": DomainSection,
    "solver": SolverConfig,
    "initial": InitialSection,
    "output": OutputSection,
    "holder": HolderSection,
    "verify": VerifySection,
}
_ALIASES = {("solver", "pad"): "dealias_pad"}
_CHOICES = {("domain", "shape"): ("rectangle", "disk"),
            ("initial", "kind"): ("mode", "random", "bump", "constant"),
            ("solver", "scheme"): ("IF-RK3", "IF-Euler")}


def _locate(text: str) -> dict:
    """(section, key) -> line number, following configparser's syntax."""
    where, section = {}, None
    for no, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s or s[0] in "#;" or line[0] in " \t":
            continue
        m = re.match(r"\[([^\]]+)\]", s)
        if m:
            section = m.group(1).strip().lower()
            where.setdefault((section, None), no)
            continue
        m = re.match(r"([^=:]+?)\s*[=:]", s)
        if m and section is not None:
            where.setdefault((section, m.group(1).strip().lower()), no)
    return where


def _tuple(raw: str, kind):
    parts = [p for p in re.split(r"[,\s]+", raw.strip().strip("()")) if p]
    return tuple(kind(p) for p in parts)


def _convert(raw: str, default, name: str):
    if isinstance(default, bool):
        v = raw.strip().lower()
        if v in ("1", "true", "yes", "on"):
            return True
        if v in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    if isinstance(default, tuple):
        kind = int if name in ("mode", "truncation") else float
        return _tuple(raw, kind)
    return raw.strip()


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    where = _locate(text)
    cp = configparser.ConfigParser(interpolation=None, strict=True)
    cp.optionxform = str.lower
    try:
        cp.read_string(text, source=source)
    except configparser.MissingSectionHeaderError as e:
        raise ConfigError("key outside any section", e.lineno) from None
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as e:
        raise ConfigError(str(e).split(": ", 1)[-1], e.lineno) from None
    except configparser.ParsingError as e:
        no = e.errors[0][0] if e.errors else None
        raise ConfigError("unparseable line", no) from None

    parts = {}
    for sec in cp.sections():
        name = sec.lower()
        if name not in _SECTIONS:
            raise ConfigError(f"unknown section [{sec}]", where.get((name, None)), sec)
        cls = _SECTIONS[name]
        defaults = {f.name: f.default for f in fields(cls) if f.init}
        if cls is SolverConfig:
            defaults = {k: getattr(SolverConfig(), k) for k in defaults}
        kw = {}
        for key, raw in cp.items(sec):
            attr = _ALIASES.get((name, key), key)
            # case-insensitive match against the dataclass field names
            match = next((f for f in defaults if f.lower() == attr), None)
            line = where.get((name, key))
            if match is None:
                raise ConfigError(f"unknown key {key!r} in [{sec}]", line, key)
            try:
                val = _convert(raw, defaults[match], match)
            except ValueError as e:
                raise ConfigError(f"bad value for {key!r}: {e}", line, key) from None
            allowed = _CHOICES.get((name, match))
            if allowed and val not in allowed:
                raise ConfigError(f"{key!r} must be one of {', '.join(allowed)}, got {val!r}", line, key)
            kw[match] = val
        try:
            parts[name] = cls(**kw)
        except (ValueError, TypeError) as e:
            raise ConfigError(f"[{sec}]: {e}", where.get((name, None)), sec) from None

    cfg = RunConfig(**parts, source=source, digest=hashlib.sha256(text.encode()).hexdigest())
    _cross_check(cfg, where)
    return cfg


def _cross_check(cfg: RunConfig, where):
    ini = cfg.initial
    if ini.kind == "constant" and ini.value != 0.0:
        raise ConfigError("constant initial data must be 0 under Dirichlet conditions",
                          where.get(("initial", "value")), "value")
    if ini.kind == "mode" and len(ini.mode) not in (2, 3):
        raise ConfigError("mode needs 2 integers (rectangle) or 3 (disk)", where.get(("initial", "mode")), "mode")
    if cfg.output.snapshot_every < 0:
        raise ConfigError("snapshot_every must be >= 0", where.get(("output", "snapshot_every")), "snapshot_every")
    h = cfg.holder
    if not 0 < h.eps < 1:
        raise ConfigError("holder eps must lie in (0, 1)", where.get(("holder", "eps")), "eps")
    if h.levels < 1:
        raise ConfigError("holder levels must be >= 1", where.get(("holder", "levels")), "levels")


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e.strerror}") from None
    return parse_config(text, str(path))
