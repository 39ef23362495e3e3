"""Experiment configuration: TOML (or JSON) files validated against per-subcommand schemas.

A schema is the keyword signature of the suite a subcommand runs: every
key must name a parameter, and its value must have the type of that
parameter's default.  Units live in the key names (``t_max``, ``r_min``).
A ``manifest.json`` written by a previous run is accepted in place of a
config and replays the fully resolved parameters it records.
"""

import inspect
import json
import sys
from pathlib import Path

from . import suites
from .errors import ConfigError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SUBCOMMANDS = {
    "bessel-check": suites.bessel_suite,
    "transform-check": suites.transform_suite,
    "propagate": suites.propagator_suite,
    "mcnorm": suites.mcnorm_suite,
    "maximal-check": suites.maximal_suite,
    "vdc-scan": suites.vdc_suite,
    "kernel-scan": suites.kernel_suite,
    "tk-scan": suites.tk_suite,
    "strichartz-scan": suites.strichartz_suite,
    "morawetz": suites.morawetz_suite,
    "extremize": suites.extremize_suite,
    "wellposed": suites.wellposed_suite,
}

# parameters that are objects rather than plain numbers stay out of the schema
_HIDDEN = {"lattice", "endpoint_lattice", "a2_lattice", "threads"}


def schema(subcommand):
    """{key: default} for a subcommand."""
    if subcommand not in SUBCOMMANDS:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    sig = inspect.signature(SUBCOMMANDS[subcommand])
    return {k: p.default for k, p in sig.parameters.items() if k not in _HIDDEN}


def _coerce(key, value, default):
    def bad():
        return ConfigError(f"{key}: expected {type(default).__name__}, got {value!r}")

    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise bad()
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise bad()
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise bad()
        return float(value)
    if isinstance(default, tuple):
        if not isinstance(value, list) or not value:
            raise bad()
        proto = default[0] if default else 0.0
        return tuple(_coerce(f"{key}[{i}]", v, proto) for i, v in enumerate(value))
    raise bad()


def resolve(subcommand, raw):
    """Defaults overlaid with ``raw``; unknown keys and wrong types raise ConfigError."""
    if not isinstance(raw, dict):
        raise ConfigError("a config must be a table of key = value pairs")
    raw = dict(raw)
    named = raw.pop("subcommand", subcommand)
    if named != subcommand:
        raise ConfigError(f"config is for {named!r}, not {subcommand!r}")
    sch = schema(subcommand)
    unknown = sorted(set(raw) - set(sch))
    if unknown:
        raise ConfigError(f"unknown keys for {subcommand}: {', '.join(unknown)}")
    return {k: _coerce(k, raw[k], d) if k in raw else d for k, d in sch.items()}


def load(path, subcommand):
    """Read and resolve a config file; returns (resolved dict, source kind)."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if path.suffix == ".json":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        if isinstance(raw, dict) and "config" in raw and "version" in raw:
            if raw.get("subcommand") != subcommand:
                raise ConfigError(f"manifest is for {raw.get('subcommand')!r}, not {subcommand!r}")
            return resolve(subcommand, raw["config"]), "manifest"
        return resolve(subcommand, raw), "json"
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return resolve(subcommand, raw), "toml"


def to_jsonable(cfg):
    return {k: list(v) if isinstance(v, tuple) else v for k, v in cfg.items()}
