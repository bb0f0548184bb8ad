"""Flat key = value pipeline configuration with embedded defaults.

Keys carry a section prefix (`depth.min`, `loss.lambda`, ...), unknown
keys are rejected, and serialization is deterministic so configs diff
cleanly. Floats are written with 9 significant digits.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from .fileio import format_float


class ConfigError(ValueError):
    """Malformed or out-of-range configuration."""


@dataclass
class PipelineConfig:
    depth_min: float = 0.05
    depth_max: float = 1.2
    depth_steps: int = 32
    weight_sharpness: float = 10.0
    loss_lambda: float = 0.85
    loss_alpha: float = 4.0
    loss_beta_base: float = 1e-3
    loss_gamma: float = 4.0
    mask_tau1: float = 0.3
    mask_tau2: float = 0.25
    mask_tau3: float = 1.5
    mask_min_iou: float = 0.25
    mask_min_moving_fraction: float = 0.4
    mask_binary_threshold: float = 0.5
    run_scales: int = 4
    run_seed: int = 0
    run_threads: int = 1
    io_bundle: str = ""
    io_out: str = ""

    def validate(self) -> "PipelineConfig":
        if not 0 < self.depth_min < self.depth_max:
            raise ConfigError("need 0 < depth.min < depth.max")
        if self.depth_steps < 2:
            raise ConfigError("depth.steps must be at least 2")
        if self.weight_sharpness < 0:
            raise ConfigError("weighting.sharpness must be non-negative")
        if not 0 <= self.loss_lambda <= 1:
            raise ConfigError("loss.lambda must lie in [0, 1]")
        if min(self.loss_alpha, self.loss_beta_base, self.loss_gamma) < 0:
            raise ConfigError("loss weights must be non-negative")
        if min(self.mask_tau1, self.mask_tau2, self.mask_tau3) <= 0:
            raise ConfigError("mask thresholds must be positive")
        if not 0 <= self.mask_min_iou <= 1:
            raise ConfigError("mask.min_iou must lie in [0, 1]")
        if not 0 <= self.mask_min_moving_fraction <= 1:
            raise ConfigError("mask.min_moving_fraction must lie in [0, 1]")
        if not 0 <= self.mask_binary_threshold <= 1:
            raise ConfigError("mask.binary_threshold must lie in [0, 1]")
        if self.run_scales < 1:
            raise ConfigError("run.scales must be at least 1")
        if self.run_threads < 1:
            raise ConfigError("run.threads must be at least 1")
        return self


# field name <-> config key; order defines serialization order.
_KEYS: dict[str, str] = {
    "depth_min": "depth.min",
    "depth_max": "depth.max",
    "depth_steps": "depth.steps",
    "weight_sharpness": "weighting.sharpness",
    "loss_lambda": "loss.lambda",
    "loss_alpha": "loss.alpha",
    "loss_beta_base": "loss.beta_base",
    "loss_gamma": "loss.gamma",
    "mask_tau1": "mask.tau1",
    "mask_tau2": "mask.tau2",
    "mask_tau3": "mask.tau3",
    "mask_min_iou": "mask.min_iou",
    "mask_min_moving_fraction": "mask.min_moving_fraction",
    "mask_binary_threshold": "mask.binary_threshold",
    "run_scales": "run.scales",
    "run_seed": "run.seed",
    "run_threads": "run.threads",
    "io_bundle": "io.bundle",
    "io_out": "io.out",
}
_FIELD_BY_KEY = {v: k for k, v in _KEYS.items()}
_TYPES = {f.name: f.type for f in fields(PipelineConfig)}


def _format_value(name: str, value) -> str:
    if isinstance(value, bool):
        raise ConfigError(f"unexpected bool for {name}")
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format_float(value)
    return str(value)


def serialize_config(cfg: PipelineConfig) -> str:
    lines = [
        f"{key} = {_format_value(field, getattr(cfg, field))}"
        for field, key in _KEYS.items()
    ]
    return "\n".join(lines) + "\n"


def parse_config(text: str, base: PipelineConfig | None = None) -> PipelineConfig:
    cfg = PipelineConfig() if base is None else base
    values = {f: getattr(cfg, f) for f in _KEYS}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (p.strip() for p in line.partition("="))
        if not sep:
            raise ConfigError(f"line {ln}: expected 'key = value', got {raw!r}")
        if key not in _FIELD_BY_KEY:
            raise ConfigError(f"line {ln}: unknown configuration key {key!r}")
        field = _FIELD_BY_KEY[key]
        ftype = _TYPES[field]
        try:
            if ftype in (int, "int"):
                values[field] = int(value)
            elif ftype in (float, "float"):
                values[field] = float(value)
            else:
                values[field] = value
        except ValueError as exc:
            raise ConfigError(f"line {ln}: bad value for {key}: {value!r}") from exc
    return PipelineConfig(**values).validate()


def load_config(path) -> PipelineConfig:
    return parse_config(Path(path).read_text())


def save_config(cfg: PipelineConfig, path) -> None:
    Path(path).write_text(serialize_config(cfg))
