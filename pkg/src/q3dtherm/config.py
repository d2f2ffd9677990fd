"""Benchmark configuration: a flat ``key = value`` text format.

Every key has a default reproducing the three-cable benchmark, so an
empty file is a complete configuration.  Unknown and duplicate keys are
hard errors; values echo back through :func:`canonical_text` in a form
that re-parses to an identical configuration, which is also what the
config hash is computed over.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional, Tuple


class ConfigError(ValueError):
    """Malformed config text or an invariant violation, naming the key."""


@dataclass(frozen=True)
class BenchmarkConfig:
    """Fully-resolved run parameters; defaults are the benchmark values."""

    # cross-section geometry [m] and stack size
    cable_width: float = 1.5e-3
    cable_height: float = 15.0e-3
    insulation_thickness: float = 0.1e-3
    n_cables: int = 3

    # material data [W/m/K], [J/m^3/K]
    cable_conductivity: float = 235.6
    cable_heat_capacity: float = 314.1
    insulation_conductivity: float = 0.01
    insulation_heat_capacity: float = 750.0

    # quench excitation: peak density [W/m^3], Gaussian width and centre [m]
    q_hat: float = 1.0e6
    sigma: float = 0.05
    z_q: float = 0.33
    quenched_cable: int = 1

    # boundary/initial temperatures [K] and stack length [m]
    theta_dirichlet: float = 2.0
    theta_initial: float = 2.0
    length: float = 1.0

    # discretization: transversal refinement, spectral elements/degree,
    # z-layers of the 3D reference
    refinement_level: int = 1
    num_elements: int = 5
    degree: int = 8
    oracle_layers: int = 400

    # time integration [s]
    dt: float = 1.0e-4
    t_end: float = 1.0e-2

    # interface adaptation: trigger time [s] (none disables) and the
    # front-detection threshold as a fraction of the peak rise
    adapt_time: Optional[float] = None
    adapt_threshold: float = 0.2

    # output: profile snapshot times [s] (empty means t_end only)
    profile_times: Tuple[float, ...] = ()
    output_dir: str = "out"


def _as_float(text: str) -> float:
    return float(text)


def _as_int(text: str) -> int:
    return int(text)


def _as_str(text: str) -> str:
    return text


def _as_optional_float(text: str) -> Optional[float]:
    return None if text.lower() == "none" else float(text)


def _as_float_tuple(text: str) -> Tuple[float, ...]:
    return tuple(float(part) for part in text.split())


_CONVERTERS = {
    "n_cables": _as_int,
    "quenched_cable": _as_int,
    "refinement_level": _as_int,
    "num_elements": _as_int,
    "degree": _as_int,
    "oracle_layers": _as_int,
    "adapt_time": _as_optional_float,
    "profile_times": _as_float_tuple,
    "output_dir": _as_str,
}
for _field in fields(BenchmarkConfig):
    _CONVERTERS.setdefault(_field.name, _as_float)


def _format_value(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, tuple):
        return " ".join(format(v, ".17g") for v in value)
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def canonical_text(config: BenchmarkConfig) -> str:
    """Deterministic echo of the resolved config; re-parses identically."""
    lines = [f"{f.name} = {_format_value(getattr(config, f.name))}"
             for f in fields(config)]
    return "\n".join(lines) + "\n"


def config_hash(config: BenchmarkConfig) -> str:
    """sha256 over the canonical text, pinning every resolved value."""
    return hashlib.sha256(canonical_text(config).encode("utf-8")).hexdigest()


def _near_multiple(value: float, step: float) -> bool:
    ticks = value / step
    return abs(ticks - round(ticks)) <= 1e-9 * max(1.0, abs(ticks))


def validate_config(config: BenchmarkConfig) -> BenchmarkConfig:
    """Raise ConfigError naming the offending key; return the config."""
    positive = ("cable_width", "cable_height", "cable_conductivity",
                "cable_heat_capacity", "insulation_conductivity",
                "insulation_heat_capacity", "sigma", "length", "dt")
    for key in positive:
        if getattr(config, key) <= 0.0:
            raise ConfigError(f"{key} must be positive")
    if config.insulation_thickness < 0.0:
        raise ConfigError("insulation_thickness must be non-negative")
    if config.n_cables < 1:
        raise ConfigError("n_cables must be at least 1")
    if config.q_hat < 0.0:
        raise ConfigError("q_hat must be non-negative")
    if not 0.0 < config.z_q < config.length:
        raise ConfigError("z_q must lie strictly inside (0, length)")
    if not 1 <= config.quenched_cable <= config.n_cables:
        raise ConfigError(f"quenched_cable must be in 1..{config.n_cables}")
    if config.refinement_level < 0:
        raise ConfigError("refinement_level must be non-negative")
    if config.num_elements < 1:
        raise ConfigError("num_elements must be at least 1")
    if config.degree < 1:
        raise ConfigError("degree must be at least 1")
    if config.oracle_layers < 2:
        raise ConfigError("oracle_layers must be at least 2")
    if config.t_end < 0.0:
        raise ConfigError("t_end must be non-negative")
    if config.t_end > 0.0 and not _near_multiple(config.t_end, config.dt):
        raise ConfigError("t_end must be an integer multiple of dt")
    if config.adapt_time is not None:
        if not 0.0 < config.adapt_time <= config.t_end:
            raise ConfigError("adapt_time must lie in (0, t_end]")
        if not _near_multiple(config.adapt_time, config.dt):
            raise ConfigError("adapt_time must be an integer multiple of dt")
    if not 0.0 < config.adapt_threshold <= 1.0:
        raise ConfigError("adapt_threshold must be in (0, 1]")
    for t in config.profile_times:
        if not 0.0 <= t <= config.t_end:
            raise ConfigError("profile_times must lie within [0, t_end]")
        if t > 0.0 and not _near_multiple(t, config.dt):
            raise ConfigError("profile_times must be integer multiples of dt")
    return config


def parse_config_text(text: str) -> BenchmarkConfig:
    """Parse ``key = value`` lines; missing keys keep their defaults."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = key.strip(), value.strip()
        if key not in _CONVERTERS:
            raise ConfigError(f"line {lineno}: unknown key '{key}'")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key '{key}'")
        try:
            values[key] = _CONVERTERS[key](value)
        except ValueError as exc:
            raise ConfigError(
                f"line {lineno}: invalid value for '{key}': {exc}") from exc
    return validate_config(replace(BenchmarkConfig(), **values))


def parse_config(path) -> BenchmarkConfig:
    return parse_config_text(Path(path).read_text(encoding="utf-8"))


def apply_overrides(config: BenchmarkConfig, assignments) -> BenchmarkConfig:
    """Apply ``key=value`` strings (CLI --set) on top of a parsed config."""
    values = {}
    for raw in assignments:
        key, sep, value = raw.partition("=")
        if not sep:
            raise ConfigError(f"override '{raw}' is not of the form key=value")
        key, value = key.strip(), value.strip()
        if key not in _CONVERTERS:
            raise ConfigError(f"unknown key '{key}'")
        try:
            values[key] = _CONVERTERS[key](value)
        except ValueError as exc:
            raise ConfigError(f"invalid value for '{key}': {exc}") from exc
    return validate_config(replace(config, **values))


def write_resolved(config: BenchmarkConfig, path) -> None:
    """Echo the fully-resolved config next to the other artifacts."""
    body = (f"# resolved configuration, sha256 {config_hash(config)}\n"
            + canonical_text(config))
    Path(path).write_text(body, encoding="utf-8")
