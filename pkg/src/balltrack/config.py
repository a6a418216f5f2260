"""The single defaults table and typed key=value overrides.

Every tunable number lives in one of four frozen parameter groups. Scenario
files, CLI flags and ``--show-config`` all go through ``GROUPS`` so a key
means the same thing everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from typing import Any

from .actuation import DriveParams
from .controller import ControllerParams
from .vision import PipelineConfig


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class CameraModel:
    focal_px: float = 600.0
    frame_w: int = 640
    frame_h: int = 480
    cam_height: float = 0.10
    ball_radius_m: float = 0.033

    def __post_init__(self):
        if not self.focal_px > 0:
            raise ConfigError("focal_px must be > 0")
        if (self.frame_w, self.frame_h) != (640, 480):
            raise ConfigError("frame size is fixed at 640x480")
        if not self.ball_radius_m > 0:
            raise ConfigError("ball_radius_m must be > 0")


GROUPS: dict[str, type] = {
    "pipeline": PipelineConfig,
    "controller": ControllerParams,
    "drive": DriveParams,
    "camera": CameraModel,
}

KEY_GROUP: dict[str, str] = {f.name: g for g, cls in GROUPS.items() for f in fields(cls)}


def _field_type(cls: type, key: str) -> type:
    default = {f.name: f.default for f in fields(cls)}[key]
    return type(default)


def coerce(key: str, text: str) -> Any:
    cls = GROUPS[KEY_GROUP[key]]
    typ = _field_type(cls, key)
    text = text.strip()
    try:
        if typ is int:
            return int(text)
        return float(text)
    except ValueError:
        raise ConfigError(f"{key}: expected {typ.__name__}, got {text!r}") from None


@dataclass(frozen=True)
class Params:
    pipeline: PipelineConfig = PipelineConfig()
    controller: ControllerParams = ControllerParams()
    drive: DriveParams = DriveParams()
    camera: CameraModel = CameraModel()

    def with_overrides(self, values: dict[str, Any]) -> Params:
        """Apply ``{key: value}`` overrides; values may be strings or numbers."""
        per_group: dict[str, dict[str, Any]] = {}
        for key, value in values.items():
            if key not in KEY_GROUP:
                raise ConfigError(f"unknown config key {key!r}")
            if isinstance(value, str):
                value = coerce(key, value)
            per_group.setdefault(KEY_GROUP[key], {})[key] = value
        updated = {}
        for group, kv in per_group.items():
            try:
                updated[group] = replace(getattr(self, group), **kv)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        return replace(self, **updated)

    def as_rows(self) -> list[tuple[str, str, Any]]:
        rows = []
        for group in GROUPS:
            obj = getattr(self, group)
            for f in fields(obj):
                rows.append((group, f.name, getattr(obj, f.name)))
        return rows


DEFAULTS = Params()


def show_config(params: Params = DEFAULTS) -> str:
    rows = params.as_rows()
    width = max(len(k) for _, k, _ in rows)
    out = []
    group = None
    for g, key, value in rows:
        if g != group:
            out.append(f"[{g}]")
            group = g
        out.append(f"  {key:<{width}} = {value}")
    return "\n".join(out) + "\n"


def parse_kv_lines(text: str) -> list[tuple[int, str, str]]:
    """Split ``key = value`` lines; blank lines and ``#`` comments are skipped."""
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError("empty key", lineno)
        out.append((lineno, key, value.strip()))
    return out


def load_config_text(text: str, base: Params = DEFAULTS) -> Params:
    return apply_kv(parse_kv_lines(text), base)


def apply_kv(entries: list[tuple[int, str, str]], base: Params = DEFAULTS) -> Params:
    """Apply parsed config lines, reporting the offending line on failure."""
    values: dict[str, Any] = {}
    first_line: dict[str, int] = {}
    for lineno, key, value in entries:
        if key not in KEY_GROUP:
            raise ConfigError(f"unknown config key {key!r}", lineno)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        try:
            values[key] = coerce(key, value)
        except ConfigError as exc:
            raise ConfigError(str(exc), lineno) from None
        first_line.setdefault(KEY_GROUP[key], lineno)
    params = base
    # group by group so a failing invariant can be pinned to a line
    for group, lineno in first_line.items():
        kv = {k: v for k, v in values.items() if KEY_GROUP[k] == group}
        try:
            params = params.with_overrides(kv)
        except ConfigError as exc:
            raise ConfigError(str(exc), lineno) from None
    return params
