"""Run configuration: flat key=value files mapped onto a dataclass.

Unknown keys are hard errors so a typo in a threshold name cannot
silently fall back to a default and invalidate an ablation run.
"""
from __future__ import annotations

from dataclasses import dataclass, fields, replace


class ConfigError(ValueError):
    """Malformed config file or invalid key/value."""


@dataclass
class TrackerConfig:
    # association / lifecycle
    conf_split: float = 0.6
    init_confidence: float = 0.7
    max_lost_frames: int = 30
    confirm_hits: int = 2
    appearance_weight: float = 0.25
    max_cost: float = 0.8
    # correction layer
    tau_update: float = 0.3
    tau_overlap: float = 0.8
    tau_min: float = 0.8
    tau_dif: float = 0.4
    similarity: str = "cosine"
    correction_stage1: bool = True
    correction_stage2: bool = True

    def __post_init__(self):
        if not (0.0 < self.conf_split < 1.0):
            raise ConfigError(f"conf_split must be in (0,1), got {self.conf_split}")
        for key in ("init_confidence", "tau_update", "tau_overlap"):
            v = getattr(self, key)
            if not (0.0 <= v <= 1.0):
                raise ConfigError(f"{key} must be in [0,1], got {v}")
        for key in ("tau_min", "tau_dif", "max_cost", "appearance_weight"):
            v = getattr(self, key)
            if v < 0:
                raise ConfigError(f"{key} must be >= 0, got {v}")
        if self.appearance_weight > 1.0:
            raise ConfigError(f"appearance_weight must be <= 1, got {self.appearance_weight}")
        if self.max_lost_frames < 0 or self.confirm_hits < 1:
            raise ConfigError("max_lost_frames must be >= 0 and confirm_hits >= 1")
        if self.similarity not in ("cosine", "euclidean"):
            raise ConfigError(f"similarity must be cosine or euclidean, got {self.similarity!r}")

    @property
    def correction_enabled(self) -> bool:
        return self.correction_stage1 or self.correction_stage2

    def with_overrides(self, **kwargs) -> "TrackerConfig":
        return replace(self, **kwargs)


_BOOL_VALUES = {"true": True, "false": False, "1": True, "0": False}


def _parse_value(name: str, raw: str, typ):
    raw = raw.strip()
    try:
        if typ is bool:
            if raw.lower() not in _BOOL_VALUES:
                raise ValueError(raw)
            return _BOOL_VALUES[raw.lower()]
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {raw!r}") from exc


def parse_config_text(text: str) -> TrackerConfig:
    """Parse `key=value` lines; blank lines and #-comments are skipped."""
    typed = {f.name: f.type for f in fields(TrackerConfig)}
    # dataclass field types arrive as strings under postponed annotations
    typemap = {"float": float, "int": int, "bool": bool, "str": str}
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key=value, got {stripped!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in typed:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        typ = typed[key]
        if isinstance(typ, str):
            typ = typemap[typ]
        values[key] = _parse_value(key, raw, typ)
    return TrackerConfig(**values)


def load_config(path) -> TrackerConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def config_to_text(cfg: TrackerConfig) -> str:
    lines = []
    for f in fields(TrackerConfig):
        v = getattr(cfg, f.name)
        if isinstance(v, bool):
            v = "true" if v else "false"
        lines.append(f"{f.name}={v}")
    return "\n".join(lines) + "\n"
