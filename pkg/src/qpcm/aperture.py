"""Digital Fourier-plane apertures.

A mask selects coincidence pairs by where the far-field (idler) photon
landed.  Masks live in far-region pixel coordinates: the half-plane pivot is
the region center, and disk/annulus centers are given relative to it.  All
boundaries are closed (>=), and during partition operations boundary points
belong to the base mask, not its complement.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .optics import Region

KINDS = ("full", "half_plane", "disk", "annulus", "bitmap")


@dataclass
class ApertureMask:
    kind: str
    label: str = ""
    angle: float = 0.0                 # rad, half_plane normal direction
    offset: float = 0.0                # px, half_plane signed distance from center
    center: tuple = (0.0, 0.0)         # px relative to region center (disk/annulus)
    radius: float = 0.0                # px, disk
    r_in: float = 0.0                  # px, annulus
    r_out: float = 0.0
    bitmap: np.ndarray | None = None   # (height, width) bool over the far region

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"mask.kind must be one of {KINDS}, got {self.kind!r}")
        self.angle = float(np.mod(self.angle, 2 * np.pi))
        if isinstance(self.center, list):
            self.center = tuple(self.center)
        if self.kind == "disk" and self.radius <= 0:
            raise ConfigError(f"disk mask radius must be > 0, got {self.radius}")
        if self.kind == "annulus":
            if self.r_in <= 0 or self.r_out <= self.r_in:
                raise ConfigError(
                    f"annulus mask needs 0 < r_in < r_out, got ({self.r_in}, {self.r_out})"
                )
        if self.kind == "bitmap":
            if self.bitmap is None:
                raise ConfigError("bitmap mask requires a grid")
            self.bitmap = np.asarray(self.bitmap, dtype=bool)
            if self.bitmap.ndim != 2:
                raise ConfigError("bitmap mask grid must be 2-D")


def contains(mask: ApertureMask, px, py, region: Region):
    """Vectorized membership of far-field coordinates (sensor pixels)."""
    px = np.asarray(px, dtype=np.float64)
    py = np.asarray(py, dtype=np.float64)
    cx, cy = region.center
    rx, ry = px - cx, py - cy
    if mask.kind == "full":
        return np.ones(px.shape, dtype=bool)
    if mask.kind == "half_plane":
        return rx * np.cos(mask.angle) + ry * np.sin(mask.angle) >= mask.offset
    if mask.kind == "disk":
        return np.hypot(rx - mask.center[0], ry - mask.center[1]) <= mask.radius
    if mask.kind == "annulus":
        d = np.hypot(rx - mask.center[0], ry - mask.center[1])
        return (d >= mask.r_in) & (d <= mask.r_out)
    # bitmap: indexed by integer pixel within the region
    if mask.bitmap.shape != (region.height, region.width):
        raise ConfigError(
            f"bitmap mask shape {mask.bitmap.shape} does not match far region "
            f"{(region.height, region.width)}"
        )
    ix = np.round(px).astype(np.int64) - region.x0
    iy = np.round(py).astype(np.int64) - region.y0
    ok = (ix >= 0) & (ix < region.width) & (iy >= 0) & (iy < region.height)
    out = np.zeros(px.shape, dtype=bool)
    out[ok] = mask.bitmap[iy[ok], ix[ok]]
    return out


def rasterize(mask: ApertureMask, region: Region) -> np.ndarray:
    """Boolean grid of mask membership at integer pixels of the far region."""
    xs = np.arange(region.x0, region.x1)
    ys = np.arange(region.y0, region.y1)
    xx, yy = np.meshgrid(xs, ys)
    return contains(mask, xx.ravel(), yy.ravel(), region).reshape(region.height, region.width)


def complement(mask: ApertureMask, region: Region) -> ApertureMask:
    label = f"not({mask.label})" if mask.label else "complement"
    if mask.kind == "half_plane":
        return ApertureMask("half_plane", label=label,
                            angle=mask.angle + np.pi, offset=-mask.offset)
    if mask.kind == "bitmap":
        return ApertureMask("bitmap", label=label, bitmap=~mask.bitmap)
    return ApertureMask("bitmap", label=label, bitmap=~rasterize(mask, region))


def area(mask: ApertureMask, region: Region) -> int:
    return int(np.count_nonzero(rasterize(mask, region)))


def select_pairs(pairs, mask: ApertureMask, region: Region):
    """Keep pairs whose far coordinate lies in the mask; order preserved."""
    sel = contains(mask, pairs.far_x, pairs.far_y, region)
    return pairs.take(sel), int(np.count_nonzero(sel))


def intersect(mask_a: ApertureMask, mask_b: ApertureMask, region: Region) -> ApertureMask:
    return ApertureMask("bitmap", label=f"({mask_a.label})&({mask_b.label})",
                        bitmap=rasterize(mask_a, region) & rasterize(mask_b, region))


# ---------------------------------------------------------------------------
# Serialization: the UI <-> service schema.

def _rle_encode(row: np.ndarray):
    """Run lengths alternating False/True, starting with the False count."""
    runs = []
    val = False
    n = 0
    for v in row.tolist():
        if v == val:
            n += 1
        else:
            runs.append(n)
            val = v
            n = 1
    runs.append(n)
    return runs


def _rle_decode(runs, width):
    out = np.zeros(width, dtype=bool)
    pos = 0
    val = False
    for n in runs:
        if n < 0 or pos + n > width:
            raise ConfigError("bitmap mask row run lengths exceed row width")
        out[pos:pos + n] = val
        pos += n
        val = not val
    if pos != width:
        raise ConfigError("bitmap mask row run lengths do not cover the row")
    return out


def mask_to_dict(mask: ApertureMask) -> dict:
    d = {"kind": mask.kind, "label": mask.label}
    if mask.kind == "half_plane":
        d.update(angle=mask.angle, offset=mask.offset)
    elif mask.kind == "disk":
        d.update(center=list(mask.center), radius=mask.radius)
    elif mask.kind == "annulus":
        d.update(center=list(mask.center), r_in=mask.r_in, r_out=mask.r_out)
    elif mask.kind == "bitmap":
        d.update(width=mask.bitmap.shape[1], height=mask.bitmap.shape[0],
                 rows=[_rle_encode(r) for r in mask.bitmap])
    return d


def mask_from_dict(d: dict) -> ApertureMask:
    if not isinstance(d, dict) or "kind" not in d:
        raise ConfigError("mask object must be a mapping with a 'kind' field")
    kind = d["kind"]
    if kind not in KINDS:
        raise ConfigError(f"mask.kind must be one of {KINDS}, got {kind!r}")
    label = d.get("label", "")
    if kind == "full":
        return ApertureMask("full", label=label)
    if kind == "half_plane":
        return ApertureMask("half_plane", label=label,
                            angle=float(d.get("angle", 0.0)),
                            offset=float(d.get("offset", 0.0)))
    try:
        if kind == "disk":
            return ApertureMask("disk", label=label,
                                center=tuple(d.get("center", (0.0, 0.0))),
                                radius=float(d["radius"]))
        if kind == "annulus":
            return ApertureMask("annulus", label=label,
                                center=tuple(d.get("center", (0.0, 0.0))),
                                r_in=float(d["r_in"]), r_out=float(d["r_out"]))
        width, height, rows = d["width"], d["height"], d["rows"]
    except KeyError as e:
        raise ConfigError(f"{kind} mask missing field {e}")
    if len(rows) != height:
        raise ConfigError(f"bitmap mask has {len(rows)} rows, header says {height}")
    grid = np.stack([_rle_decode(r, width) for r in rows]) if height else \
        np.zeros((0, width), bool)
    return ApertureMask("bitmap", label=label, bitmap=grid)


def load_mask(path) -> ApertureMask:
    with open(path) as fh:
        try:
            return mask_from_dict(json.load(fh))
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid mask JSON: {e}")


def save_mask(path, mask: ApertureMask):
    with open(path, "w") as fh:
        json.dump(mask_to_dict(mask), fh, indent=2)
        fh.write("\n")
