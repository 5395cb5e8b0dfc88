"""Sweep configuration files and the series CSV format.

Config files are ``[section]`` / ``key = value`` text::

    [model]
    family = tfim          # tfim | spin1_xxzd
    boundary = periodic
    h = 1.0                # every coupling except the swept one

    [sweep]
    param = h
    start = 0.95
    stop = 1.05            # inclusive
    step = 0.005
    L = 20:100:10          # start:stop:step (inclusive) or a comma list
    observable = magnetization_z
    r = 0
    engine = exact         # exact (TFIM only) | ed

    [lanczos]              # optional
    tol = 1e-10
    max_iter = 500
    seed = 1234

    [output]
    path = mz.csv

CSV files carry ``# key=value`` comment lines (among them ``config_hash``),
then the header ``family,L,param,param_value,observable,r,value``.
"""
from __future__ import annotations

import configparser
import csv
import hashlib
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .models import Boundary, COUPLING_NAMES, Family, ModelError, ModelSpec, ObservableKind, ObservableSpec

_TFIM_ONLY = (ObservableKind.CORRELATOR_XX, ObservableKind.CORRELATOR_YY,
              ObservableKind.CONCURRENCE)

CSV_HEADER = ("family", "L", "param", "param_value", "observable", "r", "value")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class SweepConfig:
    family: Family
    boundary: Boundary
    fixed_couplings: tuple[tuple[str, float], ...]
    param_name: str
    param_range: tuple[float, float, float]
    L_list: tuple[int, ...]
    observable: ObservableSpec
    engine: str
    output: str = "sweep.csv"
    lanczos_tol: float = 1e-10
    lanczos_max_iter: int = 500
    lanczos_seed: int = 1234

    def __post_init__(self):
        start, stop, step = self.param_range
        if not step > 0:
            raise ConfigError(f"step must be positive, got {step}")
        if not start < stop:
            raise ConfigError(f"start ({start}) must be below stop ({stop})")
        if self.engine not in ("exact", "ed"):
            raise ConfigError(f"engine must be 'exact' or 'ed', got {self.engine!r}")
        if self.engine == "exact" and self.family is not Family.TFIM:
            raise ConfigError("engine=exact is only available for the TFIM; use engine=ed")
        if not self.L_list:
            raise ConfigError("L list is empty")
        names = set(COUPLING_NAMES[self.family])
        if self.param_name not in names:
            raise ConfigError(f"param {self.param_name!r} is not a coupling of {self.family.value}")
        fixed = {k for k, _ in self.fixed_couplings}
        missing = names - fixed - {self.param_name}
        if missing:
            raise ConfigError(f"missing couplings {sorted(missing)} in [model]")
        kind = self.observable.kind
        if kind is ObservableKind.SZ_SQUARED and self.family is not Family.SPIN1_XXZD:
            raise ConfigError("sz_squared is only defined for spin-1 chains")
        if kind in _TFIM_ONLY and self.family is not Family.TFIM:
            raise ConfigError(f"{kind.value} is only available for the TFIM")
        for L in self.L_list:
            self.model(L, start)
            try:
                self.observable.check_length(L, self.boundary)
            except ModelError as exc:
                raise ConfigError(str(exc)) from None
            if self.engine == "exact" and (L % 2 or self.boundary is not Boundary.PERIODIC):
                raise ConfigError("engine=exact needs periodic chains of even L")

    def grid(self) -> np.ndarray:
        start, stop, step = self.param_range
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        # rounding keeps 0.95 + 2*0.005 from printing as 0.96000000000000008
        return np.round(start + step * np.arange(n), 12)

    def model(self, L: int, value: float) -> ModelSpec:
        couplings = dict(self.fixed_couplings)
        couplings[self.param_name] = float(value)
        try:
            return ModelSpec(self.family, L, self.boundary, tuple(couplings.items()))
        except ModelError as exc:
            raise ConfigError(str(exc)) from None

    def hash_payload(self) -> dict:
        """Every field that affects computed values (the output path does not)."""
        return {
            "family": self.family.value,
            "boundary": self.boundary.value,
            "fixed_couplings": [[k, repr(v)] for k, v in sorted(self.fixed_couplings)
                                if k != self.param_name],
            "param": self.param_name,
            "range": [repr(float(x)) for x in self.param_range],
            "L": list(self.L_list),
            "observable": [self.observable.kind.value, self.observable.r, repr(self.observable.sign)],
            "engine": self.engine,
            "lanczos": [repr(self.lanczos_tol), self.lanczos_max_iter, self.lanczos_seed],
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.hash_payload(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


_KEYS = {
    "model": {"family", "boundary"},
    "sweep": {"param", "start", "stop", "step", "L", "observable", "r", "engine"},
    "lanczos": {"tol", "max_iter", "seed"},
    "output": {"path"},
}
_REQUIRED = {"model": {"family"}, "sweep": {"param", "start", "stop", "step", "L", "observable"}}


def _parse_L(text: str, line: int) -> tuple[int, ...]:
    try:
        if ":" in text:
            a, b, c = (int(x) for x in text.split(":"))
            if c <= 0:
                raise ConfigError("L step must be positive", line)
            return tuple(range(a, b + 1, c))
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ConfigError:
        raise
    except ValueError:
        raise ConfigError(f"cannot parse L list {text!r}", line) from None


def _key_lines(text: str) -> dict[tuple[str, str], int]:
    """Line number of every ``key`` under its ``[section]``, for error messages."""
    lines, current = {}, None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip().lower()
        elif current and "=" in line and not line.startswith(("#", ";")):
            lines.setdefault((current, line.split("=", 1)[0].strip()), lineno)
    return lines


def parse_config_text(text: str) -> SweepConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), delimiters=("=",),
                                       interpolation=None, default_section="__none__")
    parser.optionxform = str  # coupling names are case sensitive (D vs lambda)
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("key outside of any section", exc.lineno) from None
    except (configparser.DuplicateSectionError, configparser.DuplicateOptionError) as exc:
        raise ConfigError(exc.message.split(":", 1)[-1].strip(), exc.lineno) from None
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raise ConfigError(f"cannot parse {line.strip()!r}", lineno) from None
    where = _key_lines(text)

    sections: dict[str, dict[str, tuple[str, int]]] = {}
    for name in parser.sections():
        sec = name.lower()
        if sec not in _KEYS:
            raise ConfigError(f"unknown section [{name}]")
        allowed = set(_KEYS[sec])
        if sec == "model":
            allowed |= {n for names in COUPLING_NAMES.values() for n in names}
        sections[sec] = {}
        for key, value in parser.items(name):
            lineno = where.get((sec, key))
            if key not in allowed:
                raise ConfigError(f"unknown key {key!r} in [{sec}]", lineno)
            sections[sec][key] = (value, lineno)

    for sec, keys in _REQUIRED.items():
        if sec not in sections:
            raise ConfigError(f"missing section [{sec}]")
        missing = keys - set(sections[sec])
        if missing:
            raise ConfigError(f"missing keys {sorted(missing)} in [{sec}]")

    def get(sec, key, conv, default=None):
        if key not in sections.get(sec, {}):
            return default
        value, lineno = sections[sec][key]
        try:
            return conv(value)
        except (ValueError, TypeError):
            raise ConfigError(f"bad value {value!r} for {key}", lineno) from None

    model = sections["model"]
    try:
        family = Family(model["family"][0].lower())
    except ValueError:
        raise ConfigError(f"unknown family {model['family'][0]!r}", model["family"][1]) from None
    boundary = get("model", "boundary", lambda s: Boundary(s.lower()), Boundary.PERIODIC)
    couplings = []
    for key, (value, lineno) in model.items():
        if key in ("family", "boundary"):
            continue
        if key not in COUPLING_NAMES[family]:
            raise ConfigError(f"unknown key {key!r}: not a coupling of {family.value}", lineno)
        couplings.append((key, get("model", key, float)))

    sweep = sections["sweep"]
    obs_kind = get("sweep", "observable", lambda s: ObservableKind(s.lower()))
    r = get("sweep", "r", int, 0)
    try:
        observable = ObservableSpec(obs_kind, r)
    except ModelError as exc:
        raise ConfigError(str(exc), sweep["observable"][1]) from None

    kwargs = dict(
        family=family,
        boundary=boundary,
        fixed_couplings=tuple(sorted(couplings)),
        param_name=sweep["param"][0],
        param_range=(get("sweep", "start", float), get("sweep", "stop", float),
                     get("sweep", "step", float)),
        L_list=_parse_L(*sweep["L"]),
        observable=observable,
        engine=get("sweep", "engine", str.lower, "exact" if family is Family.TFIM else "ed"),
        output=get("output", "path", str, "sweep.csv"),
        lanczos_tol=get("lanczos", "tol", float, 1e-10),
        lanczos_max_iter=get("lanczos", "max_iter", int, 500),
        lanczos_seed=get("lanczos", "seed", int, 1234),
    )
    try:
        return SweepConfig(**kwargs)
    except ConfigError as exc:
        if exc.line is None:
            for key in ("step", "start", "stop"):
                if key in str(exc):
                    raise ConfigError(str(exc), sweep[key][1]) from None
        raise


def parse_config(path) -> SweepConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} not found")
    return parse_config_text(path.read_text())


# ---------------------------------------------------------------- CSV


def format_float(x: float) -> str:
    return format(float(x), ".17g")


@dataclass(frozen=True)
class SeriesRecord:
    family: str
    L: int
    param: str
    param_value: float
    observable: str
    r: int
    value: float

    def row(self) -> list[str]:
        return [self.family, str(self.L), self.param, format_float(self.param_value),
                self.observable, str(self.r), format_float(self.value)]

    @property
    def valid(self) -> bool:
        return math.isfinite(self.value)


@dataclass
class SeriesFile:
    meta: dict[str, str] = field(default_factory=dict)
    records: list[SeriesRecord] = field(default_factory=list)


def dumps_series(data: SeriesFile) -> str:
    buf = io.StringIO()
    for k, v in data.meta.items():
        buf.write(f"# {k}={v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for rec in data.records:
        w.writerow(rec.row())
    return buf.getvalue()


def loads_series(text: str) -> SeriesFile:
    meta = {}
    lines = text.splitlines()
    body = []
    for line in lines:
        if line.startswith("#"):
            k, _, v = line[1:].strip().partition("=")
            meta[k.strip()] = v.strip()
        elif line.strip():
            body.append(line)
    if not body:
        return SeriesFile(meta, [])
    reader = csv.reader(body)
    header = tuple(next(reader))
    if header != CSV_HEADER:
        raise ValueError(f"unexpected CSV header {header}")
    records = []
    for n, row in enumerate(reader, start=2):
        if len(row) != len(CSV_HEADER):
            raise ValueError(f"row {n}: expected {len(CSV_HEADER)} fields, got {len(row)}")
        records.append(SeriesRecord(row[0], int(row[1]), row[2], float(row[3]), row[4],
                                    int(row[5]), float(row[6])))
    return SeriesFile(meta, records)


def atomic_write(path, data, mode="w"):
    """Write through a temporary file so readers never see partial output."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)  # mkstemp creates 0600
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_series(path, data: SeriesFile) -> None:
    atomic_write(path, dumps_series(data))


def read_series(path) -> SeriesFile:
    return loads_series(Path(path).read_text())


class SeriesFileError(ValueError):
    pass


def series_from_records(data: SeriesFile, drop_invalid: bool = True):
    """Group records by ``L`` into :class:`critx.fss.ObservableSeries`, ascending in ``L``.

    Rows marked invalid (``nan``) are dropped.  Mixed observables or
    parameters in one file are an error.
    """
    from .fss import ObservableSeries

    recs = [r for r in data.records if r.valid or not drop_invalid]
    if not recs:
        raise SeriesFileError("series file holds no valid rows")
    keys = {(r.family, r.param, r.observable, r.r) for r in recs}
    if len(keys) != 1:
        raise SeriesFileError(f"file mixes several series: {sorted(keys)}")
    family, param, _, _ = keys.pop()
    out = []
    for L in sorted({r.L for r in recs}):
        rows = sorted((r.param_value, r.value) for r in recs if r.L == L)
        g = np.array([x for x, _ in rows])
        v = np.array([y for _, y in rows])
        out.append(ObservableSeries(L, param, g, v, family))
    return out
