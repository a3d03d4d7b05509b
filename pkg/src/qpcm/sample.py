"""Phase/amplitude targets and the photon-sample interaction.

A target is a gridded phase map (radians) plus an amplitude-transmission map.
A photon crossing the target picks up a transverse momentum kick equal to the
local phase gradient, and survives with probability amplitude^2.  Positions
outside the grid see flat phase and unit amplitude.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import ConfigError
from .pgm import read_pgm

RNG_DOMAIN = 1  # survival draws

TARGET_KINDS = ("flat", "usaf_bars", "blob_phantom", "from_image")


def phase_from_etch(depth_nm: float, n: float = 1.46, wavelength_nm: float = 810.0) -> float:
    """Optical phase of a thin etched step: 2*pi*(n-1)*depth/wavelength."""
    if depth_nm < 0:
        raise ConfigError(f"etch depth must be >= 0, got {depth_nm}")
    if n <= 1:
        raise ConfigError(f"refractive index must be > 1, got {n}")
    if wavelength_nm <= 0:
        raise ConfigError(f"wavelength must be > 0, got {wavelength_nm}")
    return 2 * np.pi * (n - 1) * depth_nm / wavelength_nm


@dataclass
class TargetSpec:
    kind: str = "flat"
    etch_depth: float = 350.0          # nm, usaf_bars
    refractive_index: float = 1.46
    wavelength: float = 810.0          # nm
    size: float = 64.0                 # um, square grid extent
    pitch: float = 0.125               # um
    edge_width: float | None = None    # um, phase-step smoothing; default 1 pitch
    n_bars: int = 3
    bar_width: float = 2.0             # um
    bar_gap: float = 2.0               # um
    bar_axis: str = "x"                # axis along which the bar pattern varies
    blobs: list = field(default_factory=list)  # (cx, cy, height_rad, width_um)
    image_path: str | None = None
    phi_max: float = 1.0               # rad, from_image full-scale phase

    def validate(self):
        if self.kind not in TARGET_KINDS:
            raise ConfigError(f"target.kind must be one of {TARGET_KINDS}, got {self.kind!r}")
        if self.pitch <= 0 or self.size <= 0:
            raise ConfigError("target.size and target.pitch must be > 0")
        if self.etch_depth < 0:
            raise ConfigError(f"target.etch_depth must be >= 0, got {self.etch_depth}")
        if self.refractive_index <= 1:
            raise ConfigError(f"target.refractive_index must be > 1, got {self.refractive_index}")
        if self.wavelength <= 0:
            raise ConfigError(f"target.wavelength must be > 0, got {self.wavelength}")
        if self.kind == "usaf_bars":
            if self.n_bars < 1 or self.bar_width <= 0 or self.bar_gap <= 0:
                raise ConfigError("target bar geometry must be positive")
        if self.edge_width is not None and self.edge_width <= 0:
            raise ConfigError(f"target.edge_width must be > 0, got {self.edge_width}")
        if self.kind == "from_image" and not self.image_path:
            raise ConfigError("target.image_path required for kind 'from_image'")


@dataclass
class TargetMap:
    phase: np.ndarray       # (ny, nx) rad
    amplitude: np.ndarray   # (ny, nx) in [0, 1]
    pitch: float            # um
    origin: tuple           # (x0, y0) um of grid corner (index [0, 0])
    edge_width: float = 0.0 # um, realized step-smoothing width (bars only)

    # gradient fields, filled lazily
    _gx: np.ndarray | None = None
    _gy: np.ndarray | None = None

    def __post_init__(self):
        if self.phase.shape != self.amplitude.shape:
            raise ConfigError("target phase and amplitude grids must share dimensions")
        if self.phase.ndim != 2 or min(self.phase.shape) < 2:
            raise ConfigError("target grids must be 2-D with at least 2 samples per axis")
        if not np.all(np.isfinite(self.phase)):
            raise ConfigError("target phase must be finite everywhere")
        if np.any(self.amplitude < 0) or np.any(self.amplitude > 1):
            raise ConfigError("target amplitude must lie in [0, 1]")

    def gradients(self):
        if self._gx is None:
            gy, gx = np.gradient(self.phase, self.pitch)
            self._gx, self._gy = gx, gy
        return self._gx, self._gy

    def _index_coords(self, x, y):
        x0, y0 = self.origin
        return (np.asarray(y) - y0) / self.pitch, (np.asarray(x) - x0) / self.pitch

    def kick_at(self, x, y):
        """Phase gradient (d/dx, d/dy) at sample-plane positions, bilinear."""
        gx, gy = self.gradients()
        iy, ix = self._index_coords(x, y)
        coords = np.vstack([iy, ix])
        kx = ndimage.map_coordinates(gx, coords, order=1, mode="constant", cval=0.0)
        ky = ndimage.map_coordinates(gy, coords, order=1, mode="constant", cval=0.0)
        return kx, ky

    def amplitude_at(self, x, y):
        iy, ix = self._index_coords(x, y)
        coords = np.vstack([iy, ix])
        return ndimage.map_coordinates(self.amplitude, coords, order=1, mode="constant", cval=1.0)


def _smooth_step(phase: np.ndarray, pitch: float, edge_width: float):
    """Box-filter a binary phase map so each step becomes a linear ramp.

    The filter size is rounded to the nearest odd pixel count; returns the
    smoothed map and the realized ramp width in um.
    """
    k = max(1, int(round(edge_width / pitch)))
    if k % 2 == 0:
        k += 1
    if k == 1:
        return phase, pitch
    return ndimage.uniform_filter(phase, size=k, mode="constant"), k * pitch


def bar_positions(spec: TargetSpec):
    """Centered bar intervals [(lo, hi), ...] along the varying axis, um."""
    total = spec.n_bars * spec.bar_width + (spec.n_bars - 1) * spec.bar_gap
    start = -total / 2
    return [
        (start + i * (spec.bar_width + spec.bar_gap),
         start + i * (spec.bar_width + spec.bar_gap) + spec.bar_width)
        for i in range(spec.n_bars)
    ]


def bar_edge_bands(spec: TargetSpec, target: TargetMap):
    """Ground-truth (rising, falling) edge intervals along the bar axis.

    Rising: phase increases with coordinate (bar entry); falling: bar exit.
    Each interval spans the realized smoothing ramp.
    """
    half = target.edge_width / 2
    rising = [(lo - half, lo + half) for lo, _ in bar_positions(spec)]
    falling = [(hi - half, hi + half) for _, hi in bar_positions(spec)]
    return rising, falling


def build_target(spec: TargetSpec) -> TargetMap:
    spec.validate()
    if spec.kind == "from_image":
        img = read_pgm(spec.image_path)
        phase = img.astype(np.float64) / np.iinfo(img.dtype).max * spec.phi_max
        n = max(phase.shape)
        pitch = spec.size / n
        x0 = -phase.shape[1] * pitch / 2
        y0 = -phase.shape[0] * pitch / 2
        return TargetMap(phase, np.ones_like(phase), pitch, (x0, y0))

    n = int(round(spec.size / spec.pitch)) + 1
    axis = np.linspace(-spec.size / 2, spec.size / 2, n)
    phase = np.zeros((n, n))
    origin = (axis[0], axis[0])
    edge_width = 0.0

    if spec.kind == "usaf_bars":
        phi0 = phase_from_etch(spec.etch_depth, spec.refractive_index, spec.wavelength)
        u = axis  # varying-axis coordinate
        bars = np.zeros(n)
        for lo, hi in bar_positions(spec):
            bars[(u >= lo) & (u <= hi)] = phi0
        if spec.bar_axis == "x":
            phase = np.broadcast_to(bars[None, :], (n, n)).copy()
        else:
            phase = np.broadcast_to(bars[:, None], (n, n)).copy()
        phase, edge_width = _smooth_step(phase, spec.pitch, spec.edge_width or spec.pitch)
    elif spec.kind == "blob_phantom":
        xx, yy = np.meshgrid(axis, axis)
        for cx, cy, height, width in spec.blobs:
            if width <= 0:
                raise ConfigError(f"blob width must be > 0, got {width}")
            phase += height * np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / width**2)

    return TargetMap(phase, np.ones((n, n)), spec.pitch, origin, edge_width=edge_width)


def interact(stream, target: TargetMap, rng: np.random.Generator):
    """Apply the sample to the signal branch of a pair stream.

    Returns (survived_stream, survival_mask).  Surviving signal photons have
    their wavevector kicked by the local phase gradient; idlers are untouched.
    The survival draw consumes exactly len(stream) uniforms from ``rng``.
    """
    amp = target.amplitude_at(stream.x, stream.y)
    survive = rng.random(len(stream)) < amp**2
    out = stream.take(survive)
    kx, ky = target.kick_at(out.x, out.y)
    out.ksx = out.ksx + kx
    out.ksy = out.ksy + ky
    return out, survive
