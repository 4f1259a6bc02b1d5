"""Runtime settings: a JSON file overridden by CROWDREPORT_* environment
variables, falling back to documented defaults."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Callable, Mapping

ENV_PREFIX = "CROWDREPORT_"


@dataclass(frozen=True)
class ServiceConfig:
    store_dir: str = "./crowdreport-data"
    host: str = "127.0.0.1"
    port: int = 8000
    predictor: str = "reference"  # or "external:HOST:PORT"
    model_path: str | None = None  # classifier centroids; synthetic demo model when unset
    feature_dim: int = 64
    ratio: float = 0.75  # keypoint ratio test
    default_k_min: int = 10
    tick_seconds: float = 1.0  # deadline sweep period
    predictor_attempts: int = 3
    predictor_timeout_s: float = 5.0

    def __post_init__(self) -> None:
        if self.port < 0 or self.port > 65535:
            raise ValueError(f"port out of range: {self.port}")
        if not (0.0 < self.ratio < 1.0):
            raise ValueError(f"ratio must lie in (0, 1), got {self.ratio}")
        if self.default_k_min < 1:
            raise ValueError(f"default_k_min must be at least 1, got {self.default_k_min}")
        if self.tick_seconds <= 0:
            raise ValueError(f"tick_seconds must be positive, got {self.tick_seconds}")
        if self.predictor_attempts < 1:
            raise ValueError(f"predictor_attempts must be at least 1, got {self.predictor_attempts}")
        if self.feature_dim < 1:
            raise ValueError(f"feature_dim must be at least 1, got {self.feature_dim}")


def _parse_optional_str(raw: str) -> str | None:
    return raw or None


_ENV_PARSERS: dict[str, Callable[[str], Any]] = {
    "store_dir": str,
    "host": str,
    "port": int,
    "predictor": str,
    "model_path": _parse_optional_str,
    "feature_dim": int,
    "ratio": float,
    "default_k_min": int,
    "tick_seconds": float,
    "predictor_attempts": int,
    "predictor_timeout_s": float,
}


def load_config(
    path: str | Path | None = None,
    env: Mapping[str, str] | None = None,
) -> ServiceConfig:
    """Settings file first, then environment overrides on top.

    Unknown file keys are rejected loudly; a typo silently falling back to a
    default is worse than a crash. Environment variables use the field name
    uppercased behind the CROWDREPORT_ prefix.
    """
    values: dict[str, Any] = {}
    if path is not None:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(raw, dict):
            raise ValueError("config file must hold a JSON object")
        known = {f.name for f in fields(ServiceConfig)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        values.update(raw)

    env = os.environ if env is None else env
    for name, parse in _ENV_PARSERS.items():
        key = ENV_PREFIX + name.upper()
        if key in env:
            values[name] = parse(env[key])
    return ServiceConfig(**values)
