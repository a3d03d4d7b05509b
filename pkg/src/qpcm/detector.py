"""Intensified event-camera model.

Each incident photon is detected with a fixed efficiency and, when detected,
blooms into a small cluster of pixel events sharing one jittered, quantized
timestamp.  Dark counts are uniform single-pixel events.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

RNG_DOMAIN_NEAR = 2
RNG_DOMAIN_FAR = 3
RNG_DOMAIN_DARK = 4

FWHM_TO_SIGMA = 2 * np.sqrt(2 * np.log(2))

FLAG_PLANE_FAR = 0x0001   # bit0: 0 = near arm, 1 = far arm
FLAG_DARK = 0x0002        # bit1: synthetic dark count


@dataclass
class CameraConfig:
    sensor_size: tuple = (256, 256)
    efficiency: float = 0.07
    jitter_fwhm: float = 16.0          # ns
    time_bin: float = 1.5625           # ns, timestamp quantization
    dark_rate: float = 0.0             # events / s over the whole sensor
    cluster_size_mean: float = 4.0     # mean activated pixels per detection
    tot_scale: int = 32                # peak time-over-threshold, arbitrary units
    rng_seed: int = 0

    def __post_init__(self):
        if isinstance(self.sensor_size, list):
            self.sensor_size = tuple(self.sensor_size)

    def validate(self):
        if not 0 < self.efficiency <= 1:
            raise ConfigError(f"camera.efficiency must be in (0, 1], got {self.efficiency}")
        if self.jitter_fwhm < 0:
            raise ConfigError(f"camera.jitter_fwhm must be >= 0, got {self.jitter_fwhm}")
        if self.dark_rate < 0:
            raise ConfigError(f"camera.dark_rate must be >= 0, got {self.dark_rate}")
        if self.cluster_size_mean < 1:
            raise ConfigError(
                f"camera.cluster_size_mean must be >= 1, got {self.cluster_size_mean}"
            )
        if self.time_bin <= 0:
            raise ConfigError(f"camera.time_bin must be > 0, got {self.time_bin}")
        if self.tot_scale < 1:
            raise ConfigError(f"camera.tot_scale must be >= 1, got {self.tot_scale}")


@dataclass
class RawEventStream:
    """Columnar raw pixel hits; toa in ns, always a multiple of time_bin."""

    toa: np.ndarray    # float64 ns
    x: np.ndarray      # uint16
    y: np.ndarray      # uint16
    tot: np.ndarray    # uint16
    flags: np.ndarray  # uint16

    def __len__(self):
        return self.toa.size

    def take(self, idx) -> "RawEventStream":
        return RawEventStream(*(getattr(self, f)[idx] for f in _FIELDS))

    def sort_time(self) -> "RawEventStream":
        """Stable global ordering: (toa, x, y, flags)."""
        order = np.lexsort((self.flags, self.y, self.x, self.toa))
        return self.take(order)

    @staticmethod
    def concat(streams) -> "RawEventStream":
        streams = list(streams)
        if not streams:
            return RawEventStream.empty()
        return RawEventStream(
            *(np.concatenate([getattr(s, f) for s in streams]) for f in _FIELDS)
        )

    @staticmethod
    def empty() -> "RawEventStream":
        return RawEventStream(
            np.empty(0), np.empty(0, np.uint16), np.empty(0, np.uint16),
            np.empty(0, np.uint16), np.empty(0, np.uint16),
        )


_FIELDS = ("toa", "x", "y", "tot", "flags")


def _quantize(t_ns, time_bin):
    return np.maximum(np.round(np.asarray(t_ns) / time_bin), 0) * time_bin


def detect(px, py, t_ns, cfg: CameraConfig, rng: np.random.Generator,
           plane_far: bool = False):
    """Detect photons at continuous sensor coordinates (px, py) and times t_ns.

    Returns (events, detected_mask).  Cluster pixels stay within the 3x3
    neighborhood of the seed pixel, so every cluster is 8-connected.
    """
    px = np.asarray(px, dtype=np.float64)
    py = np.asarray(py, dtype=np.float64)
    t_ns = np.asarray(t_ns, dtype=np.float64)
    n = px.size
    detected = rng.random(n) < cfg.efficiency
    px, py, t_ns = px[detected], py[detected], t_ns[detected]
    m = px.size
    if m == 0:
        return RawEventStream.empty(), detected

    sizes = rng.poisson(cfg.cluster_size_mean - 1, m) + 1
    jitter = rng.normal(0.0, cfg.jitter_fwhm / FWHM_TO_SIGMA, m) if cfg.jitter_fwhm > 0 \
        else np.zeros(m)
    toa = _quantize(t_ns + jitter, cfg.time_bin)

    total = int(sizes.sum())
    cid = np.repeat(np.arange(m), sizes)
    # Gaussian placement (sigma = 0.5 px) clamped to the seed's 3x3 block;
    # the first member of every cluster is the seed itself.
    off = np.clip(np.round(rng.normal(0.0, 0.5, (total, 2))), -1, 1).astype(np.int64)
    first = np.r_[0, np.cumsum(sizes)[:-1]]
    off[first] = 0
    # Integer coordinates are pixel centers; the seed is the nearest pixel.
    seed_x = np.round(px).astype(np.int64)
    seed_y = np.round(py).astype(np.int64)
    ex = np.clip(seed_x[cid] + off[:, 0], 0, cfg.sensor_size[0] - 1)
    ey = np.clip(seed_y[cid] + off[:, 1], 0, cfg.sensor_size[1] - 1)

    # Collapse duplicate pixels within a cluster.
    key = (cid * 9 + (ex - seed_x[cid] + 1) * 3 + (ey - seed_y[cid] + 1))
    _, keep = np.unique(key, return_index=True)
    keep.sort()
    cid, ex, ey = cid[keep], ex[keep], ey[keep]

    dist = np.hypot(ex - px[cid], ey - py[cid])
    tot = np.maximum(1, np.round(cfg.tot_scale * (1 - dist / 2))).astype(np.uint16)

    flags = np.full(cid.size, FLAG_PLANE_FAR if plane_far else 0, dtype=np.uint16)
    events = RawEventStream(
        toa=toa[cid],
        x=ex.astype(np.uint16),
        y=ey.astype(np.uint16),
        tot=tot,
        flags=flags,
    )
    return events, detected


def generate_darks(cfg: CameraConfig, duration_s: float,
                   rng: np.random.Generator) -> RawEventStream:
    """Uniform Poisson background: single-pixel clusters over the whole sensor."""
    if duration_s <= 0:
        raise ConfigError(f"dark generation duration must be > 0, got {duration_s}")
    n = rng.poisson(cfg.dark_rate * duration_s) if cfg.dark_rate > 0 else 0
    if n == 0:
        return RawEventStream.empty()
    toa = _quantize(np.sort(rng.uniform(0, duration_s * 1e9, n)), cfg.time_bin)
    x = rng.integers(0, cfg.sensor_size[0], n, dtype=np.uint16)
    y = rng.integers(0, cfg.sensor_size[1], n, dtype=np.uint16)
    return RawEventStream(
        toa=toa, x=x, y=y,
        tot=np.ones(n, np.uint16),
        flags=np.full(n, FLAG_DARK, np.uint16),
    )
