"""Config loading, run manifests, and CSV output.

Every command resolves its parameters as defaults <- config file <-
command-line overrides, then writes a manifest.json echoing the full
resolved parameter set (including every defaulted convention choice) so
a run can be replayed bit-for-bit with --config manifest.json.  Nothing
time-dependent goes into any output file.
"""

from __future__ import annotations

import json
import os
import re
from typing import Any

import yaml

from .errors import ConfigError

__all__ = [
    "load_config",
    "deep_merge",
    "parse_overrides",
    "apply_overrides",
    "resolve_parameters",
    "write_manifest",
    "write_csv",
    "read_csv",
]

# Convention choices echoed in every manifest so downstream readers never
# have to guess which variants produced the numbers.
CONVENTIONS = {
    "sigma_pp_bracket": "hamiltonian-consistent",
    "mean_p_variant_default": "hamiltonian",
    "big_omega_default": "0.01*omega",
    "log_negativity_base": "e",
    "qsd_noise_sum": "all-sites",
    "elliptic_parameter": "m = k^2",
}


# YAML 1.1 leaves bare scientific notation ("1e-9") as a string; treat any
# such scalar as the number it obviously is, in configs and overrides alike.
_NUMERIC = re.compile(r"[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?\Z")


def _coerce_numbers(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _coerce_numbers(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_coerce_numbers(v) for v in value]
    if isinstance(value, str) and _NUMERIC.match(value):
        return float(value)
    return value


def load_config(path: str) -> dict:
    """Parse a YAML (or JSON) config file into a dict.

    A manifest written by a previous run is accepted directly: its
    "parameters" block is the config.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config file {path!r}: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path!r} must contain a mapping at top level")
    if "parameters" in data and isinstance(data["parameters"], dict) and "command" in data:
        data = dict(data["parameters"])
    return _coerce_numbers(data)


def deep_merge(base: dict, update: dict) -> dict:
    """New dict with update merged over base; nested dicts merge recursively."""
    out = dict(base)
    for key, val in update.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = deep_merge(out[key], val)
        else:
            out[key] = val
    return out


def parse_overrides(pairs: list[str]) -> dict:
    """Turn repeated KEY=VALUE strings into a nested dict.

    Keys may be dotted (a.b.c); values go through the YAML scalar parser
    so `gamma=0.25`, `sizes=[32,64]`, and `model=free` all do the right
    thing.
    """
    out: dict = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"override {pair!r} is not of the form KEY=VALUE")
        key, _, raw = pair.partition("=")
        key = key.strip()
        if not key:
            raise ConfigError(f"override {pair!r} has an empty key")
        try:
            value = _coerce_numbers(yaml.safe_load(raw)) if raw.strip() else ""
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse override value {raw!r}: {exc}") from exc
        node = out
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override key {key!r} conflicts with a scalar")
        node[parts[-1]] = value
    return out


def apply_overrides(config: dict, pairs: list[str]) -> dict:
    return deep_merge(config, parse_overrides(pairs))


def resolve_parameters(defaults: dict, config_path: str | None,
                       overrides: list[str]) -> dict:
    """defaults <- config file <- overrides, with unknown keys rejected.

    Unknown top-level keys are a config error: they are always typos and
    silently ignoring them would poison replay manifests.
    """
    merged = dict(defaults)
    if config_path:
        merged = deep_merge(merged, load_config(config_path))
    merged = apply_overrides(merged, overrides)
    unknown = sorted(set(merged) - set(defaults))
    if unknown:
        raise ConfigError(
            f"unknown parameter(s) {unknown}; known: {sorted(defaults)}"
        )
    return merged


def _jsonable(value: Any) -> Any:
    import numpy as np

    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, float) and value != value:  # NaN
        return None
    return value


def write_manifest(out_dir: str, command: str, parameters: dict,
                   outputs: list[str], extra: dict | None = None) -> str:
    """Write manifest.json: command, version, conventions, resolved parameters.

    Deterministic byte-for-byte for identical inputs: keys sorted, no
    timestamps, no environment capture.
    """
    from . import __version__

    manifest = {
        "command": command,
        "version": __version__,
        "units": parameters.get("unit_convention", "J" if parameters.get("j_coupling") else "omega"),
        "conventions": dict(CONVENTIONS),
        "parameters": _jsonable(parameters),
        "outputs": sorted(outputs),
    }
    if extra:
        manifest["results"] = _jsonable(extra)
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def write_csv(path: str, schema: str, columns: list[str], rows: list[tuple],
              metadata: dict | None = None) -> str:
    """CSV with a schema comment line, '#' metadata, and repr'd floats.

    repr keeps full precision so replayed runs can be compared exactly.
    """
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# schema={schema}\n")
        for key in sorted(metadata or {}):
            fh.write(f"# {key}={_format_cell(metadata[key])}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            if len(row) != len(columns):
                raise ValueError(f"row has {len(row)} cells, expected {len(columns)}")
            fh.write(",".join(_format_cell(c) for c in row) + "\n")
    return path


def _format_cell(value: Any) -> str:
    import numpy as np

    if isinstance(value, (np.floating, np.integer, np.bool_)):
        value = value.item()
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def read_csv(path: str) -> tuple[str, dict, list[str], list[list[str]]]:
    """Inverse of write_csv: (schema, metadata, columns, rows-as-strings)."""
    schema, metadata, columns, rows = "", {}, [], []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("# schema="):
                schema = line[len("# schema="):]
            elif line.startswith("# "):
                key, _, val = line[2:].partition("=")
                metadata[key] = val
            elif not columns:
                columns = line.split(",")
            elif line:
                rows.append(line.split(","))
    return schema, metadata, columns, rows
