"""Coincidence image accumulation, DPC formation, and line-visibility metrics.

A DPC frame is the normalized difference of two aperture-selected images,
2*(R - L)/(R + L), masked where the summed counts fall below a threshold.
Visibility is (Imax - Imin)/(Imax + Imin) over the mean peak and trough
heights of an integrated line profile.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import AnalysisError, ConfigError, ShapeError
from .optics import Region
from .pgm import encode_pgm, write_pgm


@dataclass
class ImageFrame:
    counts: np.ndarray    # (H, W) int64, region pixels / bin factor
    exposure: float       # s
    meta: dict = field(default_factory=dict)

    @property
    def total(self):
        return int(self.counts.sum())


@dataclass
class DpcFrame:
    values: np.ndarray    # (H, W) float64 in [-2, 2]; 0 where invalid
    valid: np.ndarray     # (H, W) bool
    meta: dict = field(default_factory=dict)


@dataclass
class LineRoi:
    """Line segment in frame pixel coordinates with a transverse band width."""

    x0: float
    y0: float
    x1: float
    y1: float
    width: float = 5.0    # px, transverse averaging extent

    def validate(self, shape):
        h, w = shape
        for x, y in ((self.x0, self.y0), (self.x1, self.y1)):
            if not (0 <= x <= w - 1 and 0 <= y <= h - 1):
                raise ConfigError(f"roi endpoint ({x}, {y}) outside {w}x{h} frame")
        if self.width <= 0:
            raise ConfigError(f"roi width must be > 0, got {self.width}")
        if np.hypot(self.x1 - self.x0, self.y1 - self.y0) < 2:
            raise ConfigError("roi line segment is too short")

    def to_dict(self):
        return {"x0": self.x0, "y0": self.y0, "x1": self.x1, "y1": self.y1,
                "width": self.width}

    @staticmethod
    def from_dict(d):
        try:
            return LineRoi(float(d["x0"]), float(d["y0"]), float(d["x1"]),
                           float(d["y1"]), float(d.get("width", 5.0)))
        except (KeyError, TypeError) as e:
            raise ConfigError(f"invalid roi object: {e}")


@dataclass
class VisibilityReport:
    v: float
    i_max_bar: float
    i_min_bar: float
    roi: LineRoi
    profile: np.ndarray
    peak_positions: list
    trough_positions: list

    def to_dict(self):
        return {
            "v": self.v,
            "i_max_bar": self.i_max_bar,
            "i_min_bar": self.i_min_bar,
            "roi": self.roi.to_dict(),
            "profile": [float(p) for p in self.profile],
            "peak_positions": self.peak_positions,
            "trough_positions": self.trough_positions,
        }


def _bin_indices(x, y, region: Region, bin_factor: int):
    ix = np.round(np.asarray(x)).astype(np.int64) - region.x0
    iy = np.round(np.asarray(y)).astype(np.int64) - region.y0
    ok = (ix >= 0) & (ix < region.width) & (iy >= 0) & (iy < region.height)
    return ix[ok] // bin_factor, iy[ok] // bin_factor, ok


def _check_bin(region: Region, bin_factor: int):
    if bin_factor < 1:
        raise ConfigError(f"bin factor must be >= 1, got {bin_factor}")
    if region.width % bin_factor or region.height % bin_factor:
        raise ConfigError(
            f"bin factor {bin_factor} does not divide region "
            f"{region.width}x{region.height}"
        )


def _histogram2d(ix, iy, shape):
    flat = np.bincount(iy * shape[1] + ix, minlength=shape[0] * shape[1])
    return flat.reshape(shape).astype(np.int64)


def accumulate(pairs, region: Region, bin_factor: int = 1, exposure: float = 0.0,
               meta: dict | None = None) -> ImageFrame:
    """Histogram the near coordinates of coincidence pairs over the near region."""
    _check_bin(region, bin_factor)
    shape = (region.height // bin_factor, region.width // bin_factor)
    ix, iy, _ = _bin_indices(pairs.near_x, pairs.near_y, region, bin_factor)
    counts = _histogram2d(ix, iy, shape)
    m = {"bin": bin_factor, **(meta or {})}
    return ImageFrame(counts=counts, exposure=exposure, meta=m)


def accumulate_photons(photons, region: Region, bin_factor: int = 1,
                       exposure: float = 0.0, meta: dict | None = None) -> ImageFrame:
    """Histogram single photon events (no pairing) over a camera region."""
    _check_bin(region, bin_factor)
    shape = (region.height // bin_factor, region.width // bin_factor)
    ix, iy, _ = _bin_indices(photons.x, photons.y, region, bin_factor)
    counts = _histogram2d(ix, iy, shape)
    m = {"bin": bin_factor, **(meta or {})}
    return ImageFrame(counts=counts, exposure=exposure, meta=m)


def dpc(i_r: ImageFrame, i_l: ImageFrame, min_counts: int = 10) -> DpcFrame:
    """Differential phase contrast: 2*(R - L)/(R + L) where counts suffice."""
    if i_r.counts.shape != i_l.counts.shape:
        raise ShapeError(
            f"DPC frames must share geometry: {i_r.counts.shape} vs {i_l.counts.shape}"
        )
    r = i_r.counts.astype(np.float64)
    l = i_l.counts.astype(np.float64)
    total = r + l
    valid = total >= min_counts
    values = np.zeros_like(total)
    np.divide(2.0 * (r - l), total, out=values, where=valid)
    meta = {
        "mask_r": i_r.meta.get("mask", ""),
        "mask_l": i_l.meta.get("mask", ""),
        "min_counts": min_counts,
    }
    return DpcFrame(values=values, valid=valid, meta=meta)


def line_profile(frame: ImageFrame, roi: LineRoi) -> np.ndarray:
    """Counts integrated transverse to the ROI line, sampled at 1 px steps."""
    roi.validate(frame.counts.shape)
    length = np.hypot(roi.x1 - roi.x0, roi.y1 - roi.y0)
    n = int(np.floor(length)) + 1
    t = np.linspace(0.0, length, n)
    ux, uy = (roi.x1 - roi.x0) / length, (roi.y1 - roi.y0) / length
    px_, py_ = -uy, ux  # transverse unit vector
    n_t = max(1, int(np.floor(roi.width)))
    offs = (np.arange(n_t) - (n_t - 1) / 2)
    xs = roi.x0 + t[:, None] * ux + offs[None, :] * px_
    ys = roi.y0 + t[:, None] * uy + offs[None, :] * py_
    vals = ndimage.map_coordinates(
        frame.counts.astype(np.float64), np.vstack([ys.ravel(), xs.ravel()]),
        order=1, mode="constant", cval=0.0,
    ).reshape(n, n_t)
    return vals.sum(axis=1)


def _smooth3(profile):
    padded = np.pad(profile, 1, mode="edge")
    return np.convolve(padded, np.ones(3) / 3, mode="valid")


def visibility(frame: ImageFrame, roi: LineRoi, n_lines: int = 3) -> VisibilityReport:
    """Peak/trough visibility of a bar profile.

    The profile is smoothed with a 3-sample moving average; peaks are strict
    local maxima above the profile median (the n_lines tallest are kept), and
    troughs are the minima between consecutive peaks.
    """
    if n_lines < 1:
        raise ConfigError(f"n_lines must be >= 1, got {n_lines}")
    profile = line_profile(frame, roi)
    sm = _smooth3(profile)
    med = np.median(sm)
    interior = np.arange(1, sm.size - 1)
    is_peak = (sm[interior] > sm[interior - 1]) & (sm[interior] > sm[interior + 1]) \
        & (sm[interior] > med)
    peaks = interior[is_peak]
    if peaks.size < n_lines:
        raise AnalysisError(
            f"found {peaks.size} profile maxima, expected {n_lines}", profile=profile
        )
    keep = peaks[np.argsort(sm[peaks], kind="stable")[::-1][:n_lines]]
    keep.sort()
    troughs = []
    for a, b in zip(keep[:-1], keep[1:]):
        troughs.append(int(a + np.argmin(sm[a:b + 1])))
    i_max = float(np.mean(sm[keep]))
    i_min = float(np.mean(sm[troughs])) if troughs else float(np.min(sm))
    v = (i_max - i_min) / (i_max + i_min) if (i_max + i_min) > 0 else 0.0
    return VisibilityReport(
        v=float(v), i_max_bar=i_max, i_min_bar=i_min, roi=roi, profile=profile,
        peak_positions=[int(p) for p in keep],
        trough_positions=[int(p) for p in troughs],
    )


# ---------------------------------------------------------------------------
# File exports

def frame_pgm_bytes(frame: ImageFrame) -> bytes:
    return encode_pgm(np.clip(frame.counts, 0, 65535).astype(np.uint16), maxval=65535)


def frame_to_pgm(frame: ImageFrame, path):
    with open(path, "wb") as fh:
        fh.write(frame_pgm_bytes(frame))


def frame_to_csv(frame: ImageFrame, path):
    np.savetxt(path, frame.counts, fmt="%d", delimiter=",")


def dpc_to_csv(frame: DpcFrame, path):
    np.savetxt(path, frame.values, fmt="%.9g", delimiter=",")


def dpc_to_pgm(frame: DpcFrame, path):
    # Declared linear mapping [-2, 2] -> [0, 255]; invalid pixels sit at 128.
    g = np.round((np.clip(frame.values, -2, 2) + 2) / 4 * 255).astype(np.uint8)
    write_pgm(path, g, maxval=255)


def profile_to_csv(report: VisibilityReport, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["sample", "integrated_counts"])
        for i, p in enumerate(report.profile):
            w.writerow([i, f"{p:.9g}"])
