"""Experiment configuration: defaults, JSON round-trip, overrides and validation."""
from __future__ import annotations

import copy
import hashlib
import json
import os
from dataclasses import dataclass, field

from ..errors import InvalidInputError

KINDS = ("reciprocal-scan", "lower-bound", "jacobian-check", "adjoint-check", "decay",
         "layerwise", "wave-energy", "wave-radiation", "strichartz")

ENV_PREFIX = "RADONSHELL_"

# per-experiment parameter defaults; sample counts are desk-sized, the
# acceptance suite uses the full counts
DEFAULT_PARAMS = {
    "reciprocal-scan": {"r": 1.0, "w_list": [0.4, 0.2, 0.1, 0.05], "n": 200_000,
                        "exponent_tol": None, "max_truncated": 0.01},
    "lower-bound": {"r": 1.0, "eps": 0.5, "w_list": [0.4, 0.2, 0.1, 0.05], "n": 200_000,
                    "band": 3.0},
    "jacobian-check": {"trials": 100, "d_list": [3, 4, 5], "tol": 1e-4},
    "adjoint-check": {"pairs": 5, "tol": 0.01},
    "decay": {"profile": {"kind": "cap"}, "Rs": [4.0, 8.0, 16.0, 32.0], "part": "b",
              "slope_tol": 0.1, "tail_tol": 0.01},
    "layerwise": {"profiles": [{"kind": "gaussian_bump", "center": 0.0, "width": 0.5},
                               {"kind": "zonal_polynomial", "dir_coeffs": [1.0, 0.5, 0.25]},
                               {"kind": "gaussian_bump", "center": 0.4, "width": 0.3,
                                "dir_coeffs": [1.0, -0.5]}],
                  "gamma": 2.0, "k_range": [-6, 8], "tol": 0.05},
    "wave-energy": {"profiles": [{"kind": "gaussian_bump", "center": 0.2, "width": 0.5},
                                 {"kind": "gaussian_bump", "width": 0.3, "order": 1},
                                 {"kind": "zonal_polynomial", "dir_coeffs": [1.0, 0.5, 0.25]},
                                 {"kind": "gaussian_bump", "center": -0.3, "width": 0.4,
                                  "dir_coeffs": [1.0, -0.6], "axis": [1.0, 2.0, 0.0, -1.0, 0.5]},
                                 {"kind": "zonal_polynomial", "support": [0.5, 1.5]}],
                    "t_list": [0.0, 2.0], "tol": 0.02,
                    "exterior": {"profile": {"kind": "gaussian_bump", "width": 0.125, "order": 1},
                                 "R": 1.0, "t_factors": [2.0, 4.0, 8.0], "limit": 0.01}},
    "wave-radiation": {"profile": {"kind": "gaussian_bump", "width": 0.25},
                       "t_factors": [5.0, 10.0, 20.0, 40.0], "probes": 20, "residual_tol": 1e-4},
    "strichartz": {"profile": {"kind": "zonal_polynomial", "dir_coeffs": [1.0]},
                   "r_factors": [2.0, 4.0, 8.0], "target": -2.0 / 35.0, "soft_tol": 0.04},
}

DEFAULT_D = {"reciprocal-scan": 3, "lower-bound": 3, "jacobian-check": 3, "adjoint-check": 3,
             "decay": 4, "layerwise": 4, "wave-energy": 5, "wave-radiation": 5, "strichartz": 5}

# criteria whose failure does not change the exit status
SOFT_CRITERIA = ("strichartz_exponent",)


class ConfigError(InvalidInputError):
    """Invalid configuration; ``record`` is a machine-readable description."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.record = {"error": "invalid-config", "field": field_name, "message": message}


@dataclass
class ExperimentConfig:
    kind: str
    d: int | None = None
    seed: int = 0
    level: int = 8
    workers: int = 1
    out: str = "runs"
    params: dict = field(default_factory=dict)
    soft: list = field(default_factory=lambda: list(SOFT_CRITERIA))
    gate_soft: bool = False

    def __post_init__(self):
        if self.kind in DEFAULT_PARAMS:
            merged = copy.deepcopy(DEFAULT_PARAMS[self.kind])
            merged.update(self.params)
            self.params = merged
            if self.d is None:
                self.d = DEFAULT_D[self.kind]

    # -- serialization ---------------------------------------------------
    def to_dict(self) -> dict:
        return {"kind": self.kind, "d": self.d, "seed": self.seed, "level": self.level,
                "workers": self.workers, "out": self.out, "params": copy.deepcopy(self.params),
                "soft": list(self.soft), "gate_soft": self.gate_soft}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        if not isinstance(obj, dict) or "kind" not in obj:
            raise ConfigError("kind", "missing experiment kind")
        unknown = set(obj) - {"kind", "d", "seed", "level", "workers", "out", "params", "soft",
                              "gate_soft"}
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown configuration field")
        return cls(**copy.deepcopy(obj))

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"not valid JSON: {exc}") from None
        return cls.from_dict(obj)

    def config_hash(self) -> str:
        """SHA-256 over the fields that change results (not ``out``/``workers``)."""
        obj = self.to_dict()
        obj.pop("out")
        obj.pop("workers")
        return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()

    # -- validation --------------------------------------------------------
    def validate(self) -> "ExperimentConfig":
        if self.kind not in KINDS:
            raise ConfigError("kind", f"unknown experiment {self.kind!r}; choose from {KINDS}")
        if not isinstance(self.d, int) or self.d < 2:
            raise ConfigError("d", "dimension must be an integer >= 2")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed", "seed must be an unsigned 64-bit integer")
        if not isinstance(self.workers, int) or self.workers < 1:
            raise ConfigError("workers", "workers must be a positive integer")
        if not isinstance(self.level, int) or self.level < 1:
            raise ConfigError("level", "level must be a positive integer")
        p = self.params
        for key in ("n", "trials", "pairs", "probes"):
            if key in p and (not isinstance(p[key], int) or p[key] <= 0):
                raise ConfigError(f"params.{key}", "sample counts must be positive integers")
        for key in ("w_list", "Rs", "t_list", "t_factors", "r_factors", "d_list"):
            if key in p:
                v = p[key]
                if not isinstance(v, list) or not v:
                    raise ConfigError(f"params.{key}", "must be a non-empty list")
        k = self.kind
        if k in ("reciprocal-scan", "lower-bound"):
            if p["r"] <= 0 or any(not 0 < w <= p["r"] for w in p["w_list"]):
                raise ConfigError("params.w_list", "need 0 < w <= r")
            if len(p["w_list"]) < 3:
                raise ConfigError("params.w_list", "a scaling fit needs at least three widths")
        if k == "lower-bound":
            from ..mc.engine import max_cap_angle
            if not 0 < p["eps"] < max_cap_angle(self.d):
                raise ConfigError("params.eps", f"cap angle must lie in (0, {max_cap_angle(self.d):.6g})")
        if k == "adjoint-check" and self.d != 3:
            raise ConfigError("d", "the adjointness check runs in d = 3")
        if k == "decay":
            if len(p["Rs"]) < 3 or any(b <= a for a, b in zip(p["Rs"], p["Rs"][1:])):
                raise ConfigError("params.Rs", "need at least three increasing radii")
            if p["part"] not in ("a", "b", "translation"):
                raise ConfigError("params.part", "part must be 'a', 'b' or 'translation'")
        if k == "layerwise" and p["gamma"] <= 1:
            raise ConfigError("params.gamma", "gamma must exceed 1")
        if k in ("wave-energy", "wave-radiation") and self.d not in (3, 5):
            raise ConfigError("d", "wave synthesis supports d in {3, 5}")
        if k == "strichartz" and self.d != 5:
            raise ConfigError("d", "the exterior Strichartz experiment runs in d = 5")
        if k == "jacobian-check" and any(dd < 2 for dd in p["d_list"]):
            raise ConfigError("params.d_list", "dimensions must be >= 2")
        return self


def _coerce(value: str, like):
    if isinstance(like, bool):
        return value.strip().lower() not in ("", "0", "false", "no")
    if isinstance(like, int):
        return int(value)
    return value


def env_overrides(environ=None) -> dict:
    """Top-level config fields taken from ``RADONSHELL_*`` variables.

    ``RADONSHELL_PARAMS`` may hold a JSON object merged into ``params``.
    """
    env = os.environ if environ is None else environ
    out = {}
    for name, like in (("seed", 0), ("level", 0), ("workers", 0), ("d", 0), ("out", ""),
                       ("gate_soft", False)):
        key = ENV_PREFIX + name.upper()
        if key in env and env[key] != "":
            try:
                out[name] = _coerce(env[key], like)
            except ValueError:
                raise ConfigError(name, f"cannot parse {key}={env[key]!r}") from None
    if env.get(ENV_PREFIX + "PARAMS"):
        try:
            out["params"] = json.loads(env[ENV_PREFIX + "PARAMS"])
        except json.JSONDecodeError:
            raise ConfigError("params", "RADONSHELL_PARAMS is not valid JSON") from None
    return out


def resolve(kind: str, file_obj: dict | None, env: dict, cli: dict) -> ExperimentConfig:
    """Merge layers with precedence CLI > environment > config file > defaults."""
    obj = {"kind": kind}
    params = {}
    for layer in (file_obj or {}, env, cli):
        for key, val in layer.items():
            if val is None:
                continue
            if key == "params":
                params.update(val)
            else:
                obj[key] = val
    if file_obj and file_obj.get("kind", kind) != kind:
        raise ConfigError("kind", f"config file is for {file_obj['kind']!r}, not {kind!r}")
    obj["kind"] = kind
    obj["params"] = params
    return ExperimentConfig.from_dict(obj).validate()
