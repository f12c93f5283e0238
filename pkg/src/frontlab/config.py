"""Run configuration: TOML in, fully defaulted nested dict out, and canonical serializers."""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import tomli
import tomli_w

DEFAULTS: dict = {
    "term": {"kind": "example61"},
    "mesh": {"dim": 0, "interval": [0.0, math.pi], "n_nodes": 65, "bc_left": "dirichlet", "bc_right": "dirichlet"},
    "zgrid": {"dz": 0.02},
    "speeds": {"tol": 0.02, "thresholds": True, "c_star_bracket": [], "c1_star_bracket": [], "c_dag_bracket": []},
    "aux": {"c": 2.25, "boundary_scale": 2.0},
    "front": {"c": 2.25, "band": [0.0, 1.0], "boundary_scale": 2.0},
    "census": {"c_list": [2.25, 6.0], "richardson": True, "shooting": True, "second_amplitude": 0.5, "b_scan": True},
    "stability": {"c": 6.0, "c_prime": 6.0, "band": [0.0, 0.5], "dt_factor": 0.4, "t_end": 2.0,
                  "amplitude": 1e-3, "bump_width": 3.0, "window": 30.0},
    "output": "frontlab-run",
    "seed": 0,
}


class ConfigError(ValueError):
    pass


def _merge(base: dict, over: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        where = f"{path}{k}"
        if k not in base:
            if path.startswith("term"):
                out[k] = v  # custom terms carry free-form fields
                continue
            raise ConfigError(f"unknown key '{where}'")
        if isinstance(base[k], dict):
            if not isinstance(v, dict):
                raise ConfigError(f"'{where}' must be a table")
            out[k] = _merge(base[k], v, where + ".")
        else:
            if isinstance(base[k], bool) != isinstance(v, bool):
                raise ConfigError(f"'{where}' has the wrong type")
            if isinstance(base[k], (int, float)) and not isinstance(base[k], bool):
                if not isinstance(v, (int, float)):
                    raise ConfigError(f"'{where}' must be a number")
                v = float(v) if isinstance(base[k], float) else v
            out[k] = v
    return out


@dataclass
class RunConfig:
    data: dict

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        return cls(_merge(DEFAULTS, d))

    @classmethod
    def parse(cls, text: str) -> "RunConfig":
        try:
            raw = tomli.loads(text)
        except tomli.TOMLDecodeError as exc:
            raise ConfigError(f"config parse error: {exc}") from exc
        return cls.from_dict(raw)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.parse(text)

    def dumps(self) -> str:
        return tomli_w.dumps(self.data)

    def __getitem__(self, key):
        return self.data[key]


# -- canonical output -------------------------------------------------------
def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_plain(v) for v in x.tolist()]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer, int)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        return float(x)
    return x


def _emit(x, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(x, dict):
        if not x:
            return "{}"
        items = [f'{pad}{_string(k)}: {_emit(x[k], indent, level + 1)}' for k in sorted(x)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(x, list):
        if not x:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in x):
            return "[" + ", ".join(_emit(v, indent, level + 1) for v in x) + "]"
        return "[\n" + ",\n".join(pad + _emit(v, indent, level + 1) for v in x) + "\n" + end + "]"
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        return format(x, ".17g") if math.isfinite(x) else "null"
    if x is None:
        return "null"
    return _string(str(x))


def _string(s: str) -> str:
    import json

    return json.dumps(s, ensure_ascii=False)


def canonical_json(obj, indent: int = 2) -> str:
    """Sorted keys, floats with 17 significant digits, non-finite floats as null."""
    return _emit(_plain(obj), indent, 0) + "\n"
