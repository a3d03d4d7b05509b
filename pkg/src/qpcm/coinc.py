"""Coincidence identification between near-field and far-field photon streams.

Events pair when their arrival times differ by strictly less than the window.
Multi-candidate neighborhoods are resolved greedily by ascending |dt| with a
deterministic (near index, far index) tie-break; each event joins at most one
pair and all unpaired events are discarded (counted as singles).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .centroid import PhotonEventStream
from .errors import ConfigError, StreamOrderError

POLICIES = ("closest_time", "first_come")


@dataclass
class CoincidenceConfig:
    window: float = 20.0            # ns, pairs require |dt| < window
    policy: str = "closest_time"

    def validate(self):
        if self.window <= 0:
            raise ConfigError(f"coincidence.window must be > 0, got {self.window}")
        if self.policy not in POLICIES:
            raise ConfigError(
                f"coincidence.policy must be one of {POLICIES}, got {self.policy!r}"
            )


@dataclass
class CoincidencePairStream:
    """Columnar matched pairs, sorted by near-event time of arrival."""

    near_toa: np.ndarray   # float64 ns
    dt: np.ndarray         # float64 ns, far.toa - near.toa
    near_x: np.ndarray
    near_y: np.ndarray
    far_x: np.ndarray
    far_y: np.ndarray

    def __len__(self):
        return self.near_toa.size

    def take(self, idx) -> "CoincidencePairStream":
        return CoincidencePairStream(*(getattr(self, f)[idx] for f in _FIELDS))

    @staticmethod
    def concat(streams) -> "CoincidencePairStream":
        streams = list(streams)
        if not streams:
            return CoincidencePairStream.empty()
        return CoincidencePairStream(
            *(np.concatenate([getattr(s, f) for s in streams]) for f in _FIELDS)
        )

    @staticmethod
    def empty() -> "CoincidencePairStream":
        z = np.empty(0)
        return CoincidencePairStream(z, z, z, z, z, z)


_FIELDS = ("near_toa", "dt", "near_x", "near_y", "far_x", "far_y")


def _check_sorted(stream, name):
    if len(stream) > 1 and np.any(np.diff(stream.toa) < 0):
        raise StreamOrderError(f"{name} photon stream is not sorted by time of arrival")


def _candidates(near, far, window):
    """All (i, j) with |far.toa[j] - near.toa[i]| < window, via two pointers."""
    lo = np.searchsorted(far.toa, near.toa - window, side="right")
    hi = np.searchsorted(far.toa, near.toa + window, side="left")
    counts = hi - lo
    total = int(counts.sum())
    i = np.repeat(np.arange(len(near)), counts)
    starts = np.repeat(lo - np.r_[0, np.cumsum(counts)[:-1]], counts)
    j = starts + np.arange(total)
    return i, j


def _greedy_match(i, j, adt, order):
    matched_i = {}
    used_j = set()
    for a, b in zip(i[order].tolist(), j[order].tolist()):
        if a not in matched_i and b not in used_j:
            matched_i[a] = b
            used_j.add(b)
    return matched_i


def pair_events(near: PhotonEventStream, far: PhotonEventStream,
                cfg: CoincidenceConfig):
    """Match the two time-sorted streams into coincidence pairs.

    Returns (pairs, stats).
    """
    cfg.validate()
    _check_sorted(near, "near")
    _check_sorted(far, "far")

    i, j = _candidates(near, far, cfg.window)
    dt = far.toa[j] - near.toa[i]
    adt = np.abs(dt)

    if cfg.policy == "closest_time":
        order = np.lexsort((j, i, adt))
    else:  # first_come: earliest near first, then closest |dt|
        order = np.lexsort((j, adt, i))

    matched = _greedy_match(i, j, adt, order)

    mi = np.fromiter(matched.keys(), np.int64, len(matched))
    mj = np.fromiter((matched[a] for a in mi), np.int64, len(matched))
    order2 = np.argsort(near.toa[mi], kind="stable")
    mi, mj = mi[order2], mj[order2]

    pairs = CoincidencePairStream(
        near_toa=near.toa[mi],
        dt=far.toa[mj] - near.toa[mi],
        near_x=near.x[mi], near_y=near.y[mi],
        far_x=far.x[mj], far_y=far.y[mj],
    )
    multi = int(np.count_nonzero(np.bincount(i, minlength=len(near)) > 1)
                + np.count_nonzero(np.bincount(j, minlength=len(far)) > 1))
    stats = {
        "pairs": len(pairs),
        "singles_near": len(near) - len(pairs),
        "singles_far": len(far) - len(pairs),
        "multi_candidate_count": multi,
    }
    return pairs, stats


def pair_events_chunked(near: PhotonEventStream, far: PhotonEventStream,
                        cfg: CoincidenceConfig, n_chunks: int):
    """Pair in independent time slices split at gaps > window; equals pair_events."""
    cfg.validate()
    _check_sorted(near, "near")
    _check_sorted(far, "far")
    all_toa = np.sort(np.concatenate([near.toa, far.toa]))
    if all_toa.size == 0:
        return pair_events(near, far, cfg)
    gap_edges = all_toa[1:][np.diff(all_toa) > cfg.window]  # partition start times
    # Pick chunk boundaries from the available gap edges.
    if gap_edges.size == 0 or n_chunks <= 1:
        return pair_events(near, far, cfg)
    picks = gap_edges[np.linspace(0, gap_edges.size - 1, n_chunks - 1).astype(int)]
    bounds = np.unique(picks)
    edges = np.r_[-np.inf, bounds, np.inf]
    parts = []
    stats = {"pairs": 0, "singles_near": 0, "singles_far": 0, "multi_candidate_count": 0}
    for lo, hi in zip(edges[:-1], edges[1:]):
        nsel = near.take((near.toa >= lo) & (near.toa < hi))
        fsel = far.take((far.toa >= lo) & (far.toa < hi))
        p, s = pair_events(nsel, fsel, cfg)
        parts.append(p)
        for key in stats:
            stats[key] += s[key]
    return CoincidencePairStream.concat(parts), stats


def accidental_rate(rate_near: float, rate_far: float, window_ns: float) -> float:
    """Expected accidental pairs per second for independent Poisson streams."""
    if rate_near < 0 or rate_far < 0:
        raise ConfigError("rates must be >= 0")
    return 2.0 * rate_near * rate_far * window_ns * 1e-9


def dt_histogram(pairs: CoincidencePairStream, window_ns: float, bin_ns: float = 1.0):
    """Signed time-difference histogram; returns (bin_start_ns, counts)."""
    edges = np.arange(-window_ns, window_ns + bin_ns, bin_ns)
    counts, _ = np.histogram(pairs.dt, bins=edges)
    return edges[:-1], counts
