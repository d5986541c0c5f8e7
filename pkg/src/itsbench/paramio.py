"""Parameter and simulator configuration files.

Both file kinds use TOML.  A model parameter file carries the eight
branch probabilities as top-level numeric fields and the mean sojourn
times as a nested ``[h]`` table keyed by state label::

    p_I = 0.3
    p_DM = 0.35
    p_UM = 0.25
    p_UN = 0.15
    p_DN = 0.25
    p_FS = 0.3333333333333333
    p_GD = 0.3333333333333333
    p_F = 0.3333333333333333

    [h]
    G = 24.0
    V = 1.0
    # ... one key per state; missing states default to 1.0 with a warning

Parameter files always describe the full (Proposed) model; the other
variants are derived by projection.  Validation runs as part of parsing.

A simulator configuration file mirrors the SimConfig fields, for example::

    f = 1
    k = 1
    attack_rate = 0.02
    horizon = 1000.0
    seed = 7
    scripted_compromises = [{time = 5.0, replica = 0, scope = "system"}]

Unknown keys are rejected in both schemas.
"""

from __future__ import annotations

import sys
from dataclasses import fields as dataclass_fields
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

from .models import STATE_ORDER, ItsParams, ItsVariant, validate_params
from .replicasim.config import ScriptedCompromise, SimConfig

PARAM_FIELDS = ("p_I", "p_DM", "p_UM", "p_UN", "p_DN", "p_FS", "p_GD", "p_F")

_INT_CONFIG_FIELDS = {
    "f", "k", "standby_per_process", "process_count", "proxy_count",
    "online_proxy_target", "seed",
}


class ParseError(Exception):
    """The file does not follow the documented schema."""


def _load_toml(path: str | Path) -> dict:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from None
    try:
        return _toml.loads(raw.decode("utf-8"))
    except _toml.TOMLDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None


def _require_number(path: str | Path, field: str, value: object) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"{path}: field {field!r} must be a number, got {value!r}")
    return float(value)


def parse_params(path: str | Path) -> tuple[ItsParams, list[str]]:
    """Read and validate a parameter file.

    Returns the parameters plus warnings for every sojourn time that was
    defaulted to 1.0.  Raises ParseError for schema problems and the
    model-level validation errors for semantic ones.
    """
    data = _load_toml(path)
    unknown = sorted(set(data) - set(PARAM_FIELDS) - {"h"})
    if unknown:
        raise ParseError(f"{path}: unknown field {unknown[0]!r}")
    missing = [f for f in PARAM_FIELDS if f not in data]
    if missing:
        raise ParseError(f"{path}: missing field {missing[0]!r}")
    probabilities = {f: _require_number(path, f, data[f]) for f in PARAM_FIELDS}
    h_data = data.get("h", {})
    if not isinstance(h_data, dict):
        raise ParseError(f"{path}: 'h' must be a table of state -> sojourn time")
    unknown_h = sorted(set(h_data) - set(STATE_ORDER))
    if unknown_h:
        raise ParseError(f"{path}: unknown state {unknown_h[0]!r} in 'h'")
    warnings = []
    h = {}
    for state in STATE_ORDER:
        if state in h_data:
            h[state] = _require_number(path, f"h.{state}", h_data[state])
        else:
            h[state] = 1.0
            warnings.append(f"h.{state} missing, defaulting to 1.0")
    params = ItsParams(**probabilities, h=h)
    validate_params(ItsVariant.PROPOSED, params)
    return params, warnings


def format_params(params: ItsParams) -> str:
    """Emit a parameter file; parsing it back reproduces the exact values."""
    lines = [f"{name} = {float(getattr(params, name))!r}" for name in PARAM_FIELDS]
    lines.append("")
    lines.append("[h]")
    lines.extend(f"{state} = {float(params.h[state])!r}" for state in STATE_ORDER)
    return "\n".join(lines) + "\n"


def parse_sim_config(path: str | Path) -> SimConfig:
    """Read and validate a simulator configuration file."""
    data = _load_toml(path)
    known = {f.name for f in dataclass_fields(SimConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ParseError(f"{path}: unknown field {unknown[0]!r}")
    kwargs: dict = {}
    for name, value in data.items():
        if name == "scripted_compromises":
            if not isinstance(value, list):
                raise ParseError(f"{path}: scripted_compromises must be an array of tables")
            entries = []
            for i, entry in enumerate(value):
                if not isinstance(entry, dict) or set(entry) - {"time", "replica", "scope"}:
                    raise ParseError(
                        f"{path}: scripted_compromises[{i}] must have keys time, replica, scope"
                    )
                scope = entry.get("scope", "system")
                if not isinstance(scope, str):
                    raise ParseError(f"{path}: scripted_compromises[{i}].scope must be a string")
                replica = entry.get("replica")
                if isinstance(replica, bool) or not isinstance(replica, int):
                    raise ParseError(f"{path}: scripted_compromises[{i}].replica must be an integer")
                entries.append(
                    ScriptedCompromise(
                        time=_require_number(path, f"scripted_compromises[{i}].time",
                                             entry.get("time", 0.0)),
                        replica=replica,
                        scope=scope,
                    )
                )
            kwargs[name] = tuple(entries)
        elif name == "os_pool":
            if not isinstance(value, list) or not all(isinstance(s, str) for s in value):
                raise ParseError(f"{path}: os_pool must be an array of strings")
            kwargs[name] = tuple(value)
        elif name in _INT_CONFIG_FIELDS:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ParseError(f"{path}: field {name!r} must be an integer")
            kwargs[name] = value
        else:
            kwargs[name] = _require_number(path, name, value)
    return SimConfig(**kwargs).validated()
