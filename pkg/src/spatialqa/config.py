"""Run configuration: generation knobs plus CLI I/O settings.

Precedence when running the CLI is flags > config file > defaults; the
resolved config is echoed into the run manifest for provenance. Unknown keys
in a config file are rejected.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .sampler import DEFAULT_SURFACE_ALLOWLIST

ENVIRONMENTS = ("indoor", "tabletop")

# Environment-dependent defaults: grid resolution and how far "next to"
# regions extend scale with the scene.
ENV_RESOLUTION = {"indoor": 0.05, "tabletop": 0.01}
ENV_REGION_DEPTH = {"indoor": 1.0, "tabletop": 0.3}


@dataclass
class RunConfig:
    input_dirs: list[str] = field(default_factory=list)
    output_dir: str = "out"
    seed: int = 0
    environment: str = "indoor"
    workers: int = 0  # 0 = use available parallelism

    # geometry / sampling
    resolution: float | None = None  # None = environment default
    region_depth: float | None = None  # None = environment default
    z_band_height: float = 0.4
    relation_margin: float = 0.05
    fit_margin: float = 0.10
    rotation_steps: int = 16
    k_points: int = 5
    budget: int = 1000
    min_fraction: float = 0.5
    rest_tolerance: float = 0.05
    surface_allowlist: list[str] = field(default_factory=lambda: list(DEFAULT_SURFACE_ALLOWLIST))

    # output shaping
    balance_ratio: float = 0.5
    balance_tolerance: float = 0.02
    omit_frame_clause: bool = False
    max_compat_targets: int = 0  # per (anchor, relation, frame); 0 = all
    max_context_per_view: int = 0  # 0 = unlimited
    max_compat_per_view: int = 0
    max_binary_pairs_per_view: int = 0  # stratified cap, 0 = unlimited

    def resolved_resolution(self) -> float:
        return self.resolution if self.resolution is not None else ENV_RESOLUTION[self.environment]

    def resolved_region_depth(self) -> float:
        return self.region_depth if self.region_depth is not None else ENV_REGION_DEPTH[self.environment]

    def validate(self) -> list[str]:
        out = []
        if self.environment not in ENVIRONMENTS:
            out.append(f"environment must be one of {ENVIRONMENTS}, got '{self.environment}'")
        if self.resolution is not None and not self.resolution > 0:
            out.append("resolution must be > 0")
        if self.region_depth is not None and not self.region_depth > 0:
            out.append("region_depth must be > 0")
        if not self.z_band_height > 0:
            out.append("z_band_height must be > 0")
        if self.relation_margin < 0:
            out.append("relation_margin must be >= 0")
        if self.fit_margin < 0:
            out.append("fit_margin must be >= 0")
        if self.rotation_steps < 1:
            out.append("rotation_steps must be >= 1")
        if self.k_points < 1:
            out.append("k_points must be >= 1")
        if self.budget < 1:
            out.append("budget must be >= 1")
        if not 0 < self.min_fraction <= 1:
            out.append("min_fraction must be in (0, 1]")
        if not 0 < self.balance_ratio < 1:
            out.append("balance_ratio must be in (0, 1)")
        if not 0 < self.balance_tolerance < 0.5:
            out.append("balance_tolerance must be in (0, 0.5)")
        if self.workers < 0:
            out.append("workers must be >= 0")
        for name in (
            "max_compat_targets",
            "max_context_per_view",
            "max_compat_per_view",
            "max_binary_pairs_per_view",
        ):
            if getattr(self, name) < 0:
                out.append(f"{name} must be >= 0")
        return out

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


class ConfigError(Exception):
    pass


def _load_raw(path: Path) -> dict:
    text = path.read_text()
    if path.suffix == ".toml":
        try:
            import tomllib  # py >= 3.11
        except ImportError:
            import tomli as tomllib
        data = tomllib.loads(text)
    else:
        data = json.loads(text)
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config root must be a table/object")
    return data


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Build a RunConfig from an optional TOML/JSON file plus overrides."""
    known = {f.name for f in dataclasses.fields(RunConfig)}
    merged: dict = {}
    if path is not None:
        raw = _load_raw(Path(path))
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"{path}: unknown config keys: {', '.join(unknown)}")
        merged.update(raw)
    for key, value in (overrides or {}).items():
        if key not in known:
            raise ConfigError(f"unknown config key: {key}")
        if value is not None:
            merged[key] = value
    config = RunConfig(**merged)
    problems = config.validate()
    if problems:
        raise ConfigError("; ".join(problems))
    return config
