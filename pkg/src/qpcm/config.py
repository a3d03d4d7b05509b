"""Structured run configuration: one YAML file covering every pipeline stage.

Unknown keys are hard errors (no silent defaults for misspellings), and every
default is echoed back out so output metadata records the exact settings used.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields

import yaml

from .coinc import CoincidenceConfig
from .detector import CameraConfig
from .errors import ConfigError
from .optics import OpticsConfig, Region
from .pairgen import SourceConfig
from .sample import TargetSpec


@dataclass
class CentroidConfig:
    time_gate: float = 100.0   # ns
    connectivity: int = 8

    def validate(self):
        if self.time_gate <= 0:
            raise ConfigError(f"centroid.time_gate must be > 0, got {self.time_gate}")
        if self.connectivity != 8:
            raise ConfigError("centroid.connectivity: only 8-connectivity is supported")


def _build_section(cls, data: dict, section: str):
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(
            f"unknown key(s) in section '{section}': {', '.join(sorted(unknown))}"
        )
    return cls(**data)


_SECTIONS = {
    "source": SourceConfig,
    "target": TargetSpec,
    "optics": OpticsConfig,
    "camera": CameraConfig,
    "centroid": CentroidConfig,
    "coincidence": CoincidenceConfig,
}


@dataclass
class RunConfig:
    seed: int = 0
    source: SourceConfig = field(default_factory=SourceConfig)
    target: TargetSpec = field(default_factory=TargetSpec)
    optics: OpticsConfig = field(default_factory=OpticsConfig)
    camera: CameraConfig = field(default_factory=CameraConfig)
    centroid: CentroidConfig = field(default_factory=CentroidConfig)
    coincidence: CoincidenceConfig = field(default_factory=CoincidenceConfig)

    def __post_init__(self):
        # One run seed feeds every stochastic stage; sensor geometry is owned
        # by the optics section and mirrored into the camera model.
        self.source.rng_seed = self.seed
        self.camera.rng_seed = self.seed
        self.camera.sensor_size = self.optics.sensor_size

    def validate(self):
        self.source.validate()
        self.target.validate()
        self.optics.validate()
        self.camera.validate()
        self.centroid.validate()
        self.coincidence.validate()
        return self

    @staticmethod
    def from_dict(data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("run configuration must be a mapping")
        data = dict(data)
        kwargs = {}
        if "seed" in data:
            kwargs["seed"] = int(data.pop("seed"))
        for name, cls in _SECTIONS.items():
            section = data.pop(name, None)
            if section is None:
                continue
            if not isinstance(section, dict):
                raise ConfigError(f"section '{name}' must be a mapping")
            kwargs[name] = _build_section(cls, section, name)
        if data:
            raise ConfigError(
                f"unknown top-level key(s): {', '.join(sorted(data))}"
            )
        return RunConfig(**kwargs).validate()

    def to_dict(self) -> dict:
        def convert(obj):
            if isinstance(obj, Region):
                return [obj.x0, obj.y0, obj.x1, obj.y1]
            if dataclasses.is_dataclass(obj):
                return {f.name: convert(getattr(obj, f.name)) for f in fields(obj)}
            if isinstance(obj, tuple):
                return list(obj)
            return obj
        out = {"seed": self.seed}
        for name in _SECTIONS:
            out[name] = convert(getattr(self, name))
        return out


def load_run_config(path) -> RunConfig:
    with open(path) as fh:
        try:
            data = yaml.safe_load(fh)
        except yaml.YAMLError as e:
            raise ConfigError(f"{path}: invalid YAML: {e}")
    if data is None:
        data = {}
    return RunConfig.from_dict(data)


def save_run_config(path, cfg: RunConfig):
    with open(path, "w") as fh:
        yaml.safe_dump(cfg.to_dict(), fh, sort_keys=True)
