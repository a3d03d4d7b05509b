"""Deterministic imaging maps onto the two camera regions.

Signal photons are imaged (position -> near-field region, magnified); idlers
land in the Fourier-plane region (wavevector -> far-field displacement).  The
objective acceptance aperture truncates the post-sample signal wavevector.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class Region:
    """Half-open pixel rectangle [x0, x1) x [y0, y1) on the sensor.

    Continuous coordinates put integer values at pixel centers, so pixel i
    spans [i - 0.5, i + 0.5).
    """

    x0: int
    y0: int
    x1: int
    y1: int

    @property
    def width(self):
        return self.x1 - self.x0

    @property
    def height(self):
        return self.y1 - self.y0

    @property
    def center(self):
        return ((self.x0 + self.x1 - 1) / 2, (self.y0 + self.y1 - 1) / 2)

    def contains(self, x, y):
        return ((x >= self.x0 - 0.5) & (x < self.x1 - 0.5)
                & (y >= self.y0 - 0.5) & (y < self.y1 - 0.5))

    def overlaps(self, other: "Region") -> bool:
        return not (
            self.x1 <= other.x0 or other.x1 <= self.x0
            or self.y1 <= other.y0 or other.y1 <= self.y0
        )


@dataclass
class OpticsConfig:
    magnification: float = 40.0
    effective_focal: float = 1512.5    # um of camera displacement per rad/um
    na_cutoff: float = 1.5             # rad/um, max accepted signal |k|
    pixel_pitch: float = 55.0          # um
    near_region: Region = field(default_factory=lambda: Region(10, 73, 120, 183))
    far_region: Region = field(default_factory=lambda: Region(136, 73, 246, 183))
    sensor_size: tuple = (256, 256)

    def __post_init__(self):
        if isinstance(self.near_region, (tuple, list)):
            self.near_region = Region(*self.near_region)
        if isinstance(self.far_region, (tuple, list)):
            self.far_region = Region(*self.far_region)
        if isinstance(self.sensor_size, list):
            self.sensor_size = tuple(self.sensor_size)

    def validate(self):
        if self.magnification <= 0:
            raise ConfigError(f"optics.magnification must be > 0, got {self.magnification}")
        if self.effective_focal <= 0:
            raise ConfigError(f"optics.effective_focal must be > 0, got {self.effective_focal}")
        if self.na_cutoff <= 0:
            raise ConfigError(f"optics.na_cutoff must be > 0, got {self.na_cutoff}")
        if self.pixel_pitch <= 0:
            raise ConfigError(f"optics.pixel_pitch must be > 0, got {self.pixel_pitch}")
        w, h = self.sensor_size
        for name, reg in (("near_region", self.near_region), ("far_region", self.far_region)):
            if not (0 <= reg.x0 < reg.x1 <= w and 0 <= reg.y0 < reg.y1 <= h):
                raise ConfigError(f"optics.{name} {reg} does not fit the {w}x{h} sensor")
        if self.near_region.overlaps(self.far_region):
            raise ConfigError("optics.near_region and far_region must be disjoint")


def map_near(x_um, y_um, cfg: OpticsConfig):
    """Sample-plane position (um) -> continuous sensor pixel coordinate.

    Returns (px, py, in_field); sample origin maps to the near-region center.
    """
    cx, cy = cfg.near_region.center
    px = cx + np.asarray(x_um) * cfg.magnification / cfg.pixel_pitch
    py = cy + np.asarray(y_um) * cfg.magnification / cfg.pixel_pitch
    return px, py, cfg.near_region.contains(px, py)


def map_far(kx, ky, cfg: OpticsConfig):
    """Idler transverse wavevector (rad/um) -> continuous sensor pixel coordinate."""
    cx, cy = cfg.far_region.center
    px = cx + np.asarray(kx) * cfg.effective_focal / cfg.pixel_pitch
    py = cy + np.asarray(ky) * cfg.effective_focal / cfg.pixel_pitch
    return px, py, cfg.far_region.contains(px, py)


def far_pixel_to_k(px, py, cfg: OpticsConfig):
    """Inverse of map_far: far-field pixel coordinate -> wavevector (rad/um)."""
    cx, cy = cfg.far_region.center
    scale = cfg.pixel_pitch / cfg.effective_focal
    return (np.asarray(px) - cx) * scale, (np.asarray(py) - cy) * scale


def objective_accept(kx, ky, cfg: OpticsConfig):
    """True where the post-sample signal wavevector passes the objective (closed boundary)."""
    return np.hypot(kx, ky) <= cfg.na_cutoff
