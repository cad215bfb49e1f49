"""Flat ``key = value`` run configuration.

Lines starting with ``#`` are comments.  Lists are comma separated.  ``dt``
accepts fractions such as ``25/4096``.  ``n_list`` entries are nonnegative
integers or ``inf``.  An ``alpha0_list`` entry of ``0`` adds the identity
filter as a single null-control column.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, fields, replace
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .filters import FilterSpec
from .solver import SolverParams

OUTPUT_DIR_ENV = "ALPHATURB_OUTPUT_DIR"


class ConfigError(ValueError):
    pass


def _number(text: str) -> float:
    return float(Fraction(text.strip()))


def _floats(text: str) -> tuple[float, ...]:
    return tuple(_number(t) for t in text.split(",") if t.strip())


def _orders(text: str) -> tuple:
    out = []
    for t in text.split(","):
        t = t.strip()
        if not t:
            continue
        out.append(FilterSpec(t, 1.0).order)
    return tuple(out)


def _raw_pairs(text: str) -> tuple[tuple[int, float], ...]:
    pairs = []
    for t in text.split(","):
        if t.strip():
            n, a = t.split(":")
            pairs.append((int(n), _number(a)))
    return tuple(pairs)


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass(frozen=True)
class RunConfig:
    nu: float = 2e-3
    grid_m: int = 64
    kmax: int = 21
    dt: float = 1 / 64
    grashof: float = 2.5e4
    force_seed: int = 1
    ensemble_size: int = 3
    ensemble_seed: int = 7
    spinup_time: float = 500.0
    run_time: float = 2000.0
    sample_interval: int = 640
    alpha0_list: tuple = (0.0, 0.01, 1.0)
    n_list: tuple = (0, float("inf"))
    spectrum_file: str = ""
    output_dir: str = "out"
    c0: float = 205.0
    # extras beyond the core experiment description
    workers: int = 1
    checkpoint_interval: int = 0
    raw_filters: tuple = ((0, 0.04), (0, 0.09), (4, 0.04), (4, 0.09))
    filter_kmax: int = 85
    cfl_interval: int = 1

    def __post_init__(self):
        if self.grid_m < 3 * self.kmax + 1:
            raise ConfigError(f"grid_m={self.grid_m} must be at least 3*kmax+1 = {3 * self.kmax + 1}")
        if not self.dt > 0:
            raise ConfigError("dt must be positive")
        if not self.alpha0_list:
            raise ConfigError("alpha0_list must not be empty")
        if not self.n_list:
            raise ConfigError("n_list must not be empty")
        if self.sample_interval < 1:
            raise ConfigError("sample_interval must be a positive step count")
        if self.cfl_interval < 1:
            raise ConfigError("cfl_interval must be a positive step count")
        if self.ensemble_size < 1:
            raise ConfigError("ensemble_size must be at least 1")

    @property
    def params(self) -> SolverParams:
        return SolverParams(self.nu, self.dt, self.kmax, self.grid_m)

    @property
    def specs(self) -> list[FilterSpec]:
        out = []
        for a in self.alpha0_list:
            if a == 0:
                spec = FilterSpec(0, 0.0)
                if spec not in out:
                    out.append(spec)
                continue
            for n in self.n_list:
                out.append(FilterSpec(n, a))
        return out

    @property
    def out(self) -> Path:
        return Path(os.environ.get(OUTPUT_DIR_ENV) or self.output_dir)

    def spectrum(self) -> dict[int, float]:
        if self.spectrum_file:
            return read_spectrum(self.spectrum_file)
        return default_spectrum()


_PARSERS = {
    "nu": _number, "grid_m": int, "kmax": int, "dt": _number, "grashof": _number,
    "force_seed": int, "ensemble_size": int, "ensemble_seed": int,
    "spinup_time": _number, "run_time": _number, "sample_interval": int,
    "alpha0_list": _floats, "n_list": _orders, "spectrum_file": str.strip,
    "output_dir": str.strip, "c0": _number, "workers": int,
    "checkpoint_interval": int, "raw_filters": _raw_pairs, "filter_kmax": int,
    "cfl_interval": int,
}
assert set(_PARSERS) == {f.name for f in fields(RunConfig)}


def parse_overrides(items, base: dict | None = None) -> dict:
    values = dict(base or {})
    for lineno, line in items:
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {line!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _PARSERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _PARSERS[key](val)
        except (ValueError, ZeroDivisionError) as err:
            raise ConfigError(f"line {lineno}: bad value for {key}: {err}") from None
    return values


def load_config(path=None, overrides=()) -> RunConfig:
    values = {}
    if path is not None:
        text = Path(path).read_text()
        values = parse_overrides(enumerate(text.splitlines(), 1))
    values = parse_overrides((("override", o) for o in overrides), values)
    try:
        return RunConfig(**values)
    except ConfigError:
        raise
    except ValueError as err:
        raise ConfigError(str(err)) from None


def dump_config(cfg: RunConfig) -> str:
    lines = []
    for f in fields(RunConfig):
        v = getattr(cfg, f.name)
        if f.name == "n_list":
            v = ",".join("inf" if n == float("inf") else str(n) for n in v)
        elif f.name == "raw_filters":
            v = ",".join(f"{n}:{a!r}" for n, a in v)
        elif isinstance(v, tuple):
            v = ",".join(repr(x) for x in v)
        elif isinstance(v, float):
            v = repr(v)
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"


def with_overrides(cfg: RunConfig, **kw) -> RunConfig:
    return replace(cfg, **kw)


def read_spectrum(path) -> dict[int, float]:
    """Read a ``r,E`` CSV into ``{r: E}``."""
    out = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"r", "E"} <= set(reader.fieldnames):
            raise ConfigError(f"{path}: spectrum CSV needs columns r,E")
        for i, row in enumerate(reader, 2):
            try:
                out[int(row["r"])] = float(row["E"])
            except ValueError:
                raise ConfigError(f"{path}:{i}: malformed row {row}") from None
    return out


def default_spectrum() -> dict[int, float]:
    ref = resources.files("alphaturb") / "data" / "desk_spectrum.csv"
    with resources.as_file(ref) as p:
        return read_spectrum(p)
