"""Cluster identification and centroiding of raw event streams.

Two raw events belong to the same cluster when they are 8-connected in pixel
space and within the time gate of each other.  Each cluster collapses to one
photon event at the ToT-weighted mean pixel index, timestamped by its
earliest member.

Coordinate convention: integer values are pixel centers, so a single-pixel
cluster at pixel (10, 20) centroids to exactly (10.0, 20.0).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .detector import RawEventStream
from .errors import StreamOrderError
from .optics import Region

PLANE_NEAR = 0
PLANE_FAR = 1


@dataclass
class PhotonEventStream:
    """Columnar centroided single-photon detections."""

    toa: np.ndarray       # float64 ns
    x: np.ndarray         # float64 sub-pixel coordinate
    y: np.ndarray
    n_pixels: np.ndarray  # uint16
    plane: np.ndarray     # uint8, PLANE_NEAR / PLANE_FAR

    def __len__(self):
        return self.toa.size

    def take(self, idx) -> "PhotonEventStream":
        return PhotonEventStream(*(getattr(self, f)[idx] for f in _FIELDS))

    def split_planes(self):
        near = self.take(self.plane == PLANE_NEAR)
        far = self.take(self.plane == PLANE_FAR)
        return near, far

    @staticmethod
    def concat(streams) -> "PhotonEventStream":
        streams = list(streams)
        if not streams:
            return PhotonEventStream.empty()
        return PhotonEventStream(
            *(np.concatenate([getattr(s, f) for s in streams]) for f in _FIELDS)
        )

    @staticmethod
    def empty() -> "PhotonEventStream":
        z = np.empty(0)
        return PhotonEventStream(z, z, z, np.empty(0, np.uint16), np.empty(0, np.uint8))


_FIELDS = ("toa", "x", "y", "n_pixels", "plane")


def _multirange(lo, hi):
    """Concatenate [lo[i], hi[i]) ranges into one index array."""
    counts = hi - lo
    total = int(counts.sum())
    if total == 0:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    owner = np.repeat(np.arange(lo.size), counts)
    starts = np.repeat(lo - np.r_[0, np.cumsum(counts)[:-1]], counts)
    return owner, starts + np.arange(total)


def _cluster_labels(ev: RawEventStream, time_gate: float, sensor_w: int, sensor_h: int):
    n = len(ev)
    # Coarse partition at time gaps > gate; clusters cannot straddle these.
    part = np.zeros(n, np.int64)
    if n > 1:
        part[1:] = np.cumsum(np.diff(ev.toa) > time_gate)

    span = (sensor_w + 2) * (sensor_h + 2)
    x = ev.x.astype(np.int64) + 1
    y = ev.y.astype(np.int64) + 1
    key = part * span + x * (sensor_h + 2) + y
    order = np.argsort(key, kind="stable")
    skey = key[order]

    src_all, dst_all = [], []
    for dx in (-1, 0, 1):
        for dy in (-1, 0, 1):
            target = part * span + (x + dx) * (sensor_h + 2) + (y + dy)
            lo = np.searchsorted(skey, target, side="left")
            hi = np.searchsorted(skey, target, side="right")
            owner, pos = _multirange(lo, hi)
            j = order[pos]
            ok = np.abs(ev.toa[owner] - ev.toa[j]) <= time_gate
            src_all.append(owner[ok])
            dst_all.append(j[ok])
    src = np.concatenate(src_all)
    dst = np.concatenate(dst_all)
    graph = coo_matrix((np.ones(src.size, np.int8), (src, dst)), shape=(n, n))
    n_clusters, labels = connected_components(graph, directed=False)
    return n_clusters, labels


def cluster_and_centroid(ev: RawEventStream, near_region: Region, far_region: Region,
                         time_gate: float = 100.0, sensor_size=(256, 256)):
    """Collapse a time-sorted raw stream into photon events.

    Returns (photons, stats); clusters whose centroid lies in neither camera
    region are dropped and counted in stats["dropped_out_of_region"].
    """
    n = len(ev)
    stats = {"input_events": n, "clusters": 0, "dropped_clusters": 0,
             "dropped_out_of_region": 0}
    if n == 0:
        return PhotonEventStream.empty(), stats
    if np.any(np.diff(ev.toa) < 0):
        raise StreamOrderError("raw event stream is not sorted by time of arrival")

    k, labels = _cluster_labels(ev, time_gate, *sensor_size)
    w = ev.tot.astype(np.float64)
    wsum = np.bincount(labels, weights=w, minlength=k)
    cx = np.bincount(labels, weights=w * ev.x, minlength=k) / wsum
    cy = np.bincount(labels, weights=w * ev.y, minlength=k) / wsum
    npx = np.bincount(labels, minlength=k).astype(np.uint16)

    order = np.argsort(labels, kind="stable")
    starts = np.searchsorted(labels[order], np.arange(k))
    toa = np.minimum.reduceat(ev.toa[order], starts)

    in_near = near_region.contains(cx, cy)
    in_far = far_region.contains(cx, cy)
    keep = in_near | in_far
    plane = np.where(in_far, PLANE_FAR, PLANE_NEAR).astype(np.uint8)

    stats["clusters"] = int(k)
    stats["dropped_clusters"] = int(np.count_nonzero(~keep))
    stats["dropped_out_of_region"] = int(npx[~keep].sum())

    out = PhotonEventStream(toa=toa[keep], x=cx[keep], y=cy[keep],
                            n_pixels=npx[keep], plane=plane[keep])
    order = np.lexsort((out.y, out.x, out.toa))
    out = out.take(order)
    return out, stats
