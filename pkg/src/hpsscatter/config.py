"""Run configuration: loading (JSON or YAML), defaults, validation."""

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .potentials import BUILTIN_NAMES, builtin

SCHEMA_VERSION = 1
# refinement beyond this needs --large
DESK_MAX_LEVELS = 6


@dataclass
class RunConfig:
    potential: str = "bump1"
    potential_params: dict = field(default_factory=dict)
    seed: int | None = None
    kappa: float = 40.0
    directions: list = field(default_factory=lambda: [[1.0, 0.0]])
    levels: int = 4
    levels_list: list = field(default_factory=lambda: [2, 3, 4, 5])
    Ng: int = 14
    Nc: int = 16
    eta: float | None = None
    out: str = "out"
    probes: list = field(default_factory=lambda: [[0.5, 0.0], [1.0, 0.5], [0.25, 0.0]])
    grid: dict | None = None  # {"bounds": [x0, x1, y0, y1], "nx": int, "ny": int}
    cond_threshold: float = 1e8
    R_match: float = 0.5
    L: int = 30
    schema_version: int = SCHEMA_VERSION

    def to_dict(self):
        return asdict(self)

    def make_potential(self):
        params = dict(self.potential_params)
        if self.potential == "random_bumps":
            if self.seed is None and "seed" not in params:
                raise ConfigError("random_bumps needs a seed (config 'seed' or --seed)")
            params.setdefault("seed", self.seed)
        try:
            return builtin(self.potential, **params)
        except (TypeError, KeyError) as exc:
            raise ConfigError(f"bad parameters for potential {self.potential!r}: {exc}") from exc


def _load_text(path):
    text = Path(path).read_text()
    suffix = Path(path).suffix.lower()
    if suffix in (".yaml", ".yml"):
        import yaml

        data = yaml.safe_load(text)
    else:
        data = json.loads(text)
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a mapping at the top level")
    return data


def load_config(path=None, overrides=None):
    data = {}
    if path is not None:
        try:
            data = _load_text(path)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    version = data.pop("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version} (expected {SCHEMA_VERSION})")
    known = set(RunConfig.__dataclass_fields__)
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    for k, v in (overrides or {}).items():
        if v is not None:
            data[k] = v
    cfg = RunConfig(**data)
    validate(cfg)
    return cfg


def validate(cfg):
    if cfg.potential not in BUILTIN_NAMES:
        raise ConfigError(f"unknown potential {cfg.potential!r}")
    if not (np.isfinite(cfg.kappa) and cfg.kappa > 0):
        raise ConfigError("kappa must be positive")
    d = np.atleast_2d(np.asarray(cfg.directions, dtype=float))
    if d.shape[1] != 2 or not np.allclose(np.hypot(d[:, 0], d[:, 1]), 1.0, atol=1e-12):
        raise ConfigError("incident directions must be unit 2-vectors")
    if cfg.Nc <= cfg.Ng + 1:
        raise ConfigError(f"need Nc > Ng + 1 (got Nc={cfg.Nc}, Ng={cfg.Ng})")
    if cfg.Ng < 2:
        raise ConfigError("Ng must be at least 2")
    levels = [cfg.levels] + list(cfg.levels_list)
    if min(levels) < 1:
        raise ConfigError("levels must be at least 1")
    if list(cfg.levels_list) != sorted(cfg.levels_list):
        raise ConfigError("levels_list must be ascending")
    if cfg.eta is not None and cfg.eta == 0:
        raise ConfigError("eta must be nonzero")
    if cfg.grid is not None:
        g = cfg.grid
        if set(g) - {"bounds", "nx", "ny"} or len(g.get("bounds", ())) != 4:
            raise ConfigError("grid needs 'bounds' (4 numbers) and optional 'nx', 'ny'")
    return cfg


def check_scale(levels, large):
    if max(levels) > DESK_MAX_LEVELS and not large:
        raise ConfigError(
            f"levels up to {max(levels)} exceed the desktop limit {DESK_MAX_LEVELS}; "
            "pass --large to run anyway")
