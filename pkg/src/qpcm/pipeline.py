"""End-to-end simulation driver.

Chains pair generation, sample interaction, imaging optics, and the camera
model into a raw event stream, then centroiding and coincidence pairing.
Every stochastic stage draws from an RNG stream keyed by (run seed, stage
domain, time-chunk index), so results are independent of worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import detector, pairgen, sample
from .centroid import PhotonEventStream, cluster_and_centroid
from .coinc import CoincidencePairStream, pair_events
from .config import RunConfig
from .detector import RawEventStream, generate_darks
from .optics import map_far, map_near, objective_accept


def _rng(seed, domain, chunk):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(domain, chunk)))


@dataclass
class Truth:
    """Ground-truth sub-pixel coordinates and times of detected photons."""

    near_x: np.ndarray = field(default_factory=lambda: np.empty(0))
    near_y: np.ndarray = field(default_factory=lambda: np.empty(0))
    near_t: np.ndarray = field(default_factory=lambda: np.empty(0))
    far_x: np.ndarray = field(default_factory=lambda: np.empty(0))
    far_y: np.ndarray = field(default_factory=lambda: np.empty(0))
    far_t: np.ndarray = field(default_factory=lambda: np.empty(0))


def _simulate_chunk(cfg: RunConfig, target, chunk: int, collect_truth: bool):
    pairs = pairgen._generate_chunk(cfg.source, chunk)
    stats = {"generated_pairs": len(pairs)}

    # Signal branch: sample kick/absorption, objective acceptance, imaging.
    sig, survived = sample.interact(pairs, target, _rng(cfg.seed, sample.RNG_DOMAIN, chunk))
    stats["signal_absorbed"] = int(len(pairs) - len(sig))
    accepted = objective_accept(sig.ksx, sig.ksy, cfg.optics)
    stats["signal_rejected_na"] = int(np.count_nonzero(~accepted))
    sig = sig.take(accepted)
    npx, npy, in_near = map_near(sig.x, sig.y, cfg.optics)
    stats["near_out_of_field"] = int(np.count_nonzero(~in_near))

    # Idler branch: direct Fourier-plane imaging of every pair.
    fpx, fpy, in_far = map_far(pairs.kix, pairs.kiy, cfg.optics)
    stats["far_out_of_field"] = int(np.count_nonzero(~in_far))

    near_ev, near_det = detector.detect(
        npx[in_near], npy[in_near], sig.t[in_near], cfg.camera,
        _rng(cfg.seed, detector.RNG_DOMAIN_NEAR, chunk), plane_far=False,
    )
    far_ev, far_det = detector.detect(
        fpx[in_far], fpy[in_far], pairs.t[in_far], cfg.camera,
        _rng(cfg.seed, detector.RNG_DOMAIN_FAR, chunk), plane_far=True,
    )
    stats["near_detected"] = int(np.count_nonzero(near_det))
    stats["far_detected"] = int(np.count_nonzero(far_det))

    truth = None
    if collect_truth:
        truth = Truth(
            near_x=npx[in_near][near_det], near_y=npy[in_near][near_det],
            near_t=sig.t[in_near][near_det],
            far_x=fpx[in_far][far_det], far_y=fpy[in_far][far_det],
            far_t=pairs.t[in_far][far_det],
        )
    return RawEventStream.concat([near_ev, far_ev]), stats, truth


def simulate_raw(cfg: RunConfig, workers: int = 1, collect_truth: bool = False):
    """Run source + sample + optics + camera; returns (raw, stats[, truth]).

    The raw stream is globally time-sorted and byte-identical for any worker
    count.
    """
    cfg.validate()
    target = sample.build_target(cfg.target)
    chunks = range(pairgen.num_chunks(cfg.source))

    def work(c):
        return _simulate_chunk(cfg, target, c, collect_truth)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, chunks))
    else:
        results = [work(c) for c in chunks]

    parts = [r[0] for r in results]
    stats = {}
    for _, s, _ in results:
        for k, v in s.items():
            stats[k] = stats.get(k, 0) + v

    darks = generate_darks(cfg.camera, cfg.source.duration,
                           _rng(cfg.seed, detector.RNG_DOMAIN_DARK, 0))
    stats["dark_events"] = len(darks)
    raw = RawEventStream.concat(parts + [darks]).sort_time()

    if collect_truth:
        truth = Truth(*(
            np.concatenate([getattr(r[2], f.name) for r in results])
            for f in Truth.__dataclass_fields__.values()
        ))
        return raw, stats, truth
    return raw, stats


def centroid_raw(raw: RawEventStream, cfg: RunConfig):
    return cluster_and_centroid(
        raw, cfg.optics.near_region, cfg.optics.far_region,
        time_gate=cfg.centroid.time_gate, sensor_size=cfg.optics.sensor_size,
    )


def pair_photons(photons: PhotonEventStream, cfg: RunConfig):
    near, far = photons.split_planes()
    return pair_events(near, far, cfg.coincidence)


@dataclass
class PipelineResult:
    raw: RawEventStream
    photons: PhotonEventStream
    pairs: CoincidencePairStream
    stats: dict
    truth: Truth | None = None


def run_pipeline(cfg: RunConfig, workers: int = 1,
                 collect_truth: bool = False) -> PipelineResult:
    """Full chain: simulate, centroid, pair."""
    if collect_truth:
        raw, stats, truth = simulate_raw(cfg, workers, collect_truth=True)
    else:
        raw, stats = simulate_raw(cfg, workers)
        truth = None
    photons, cstats = centroid_raw(raw, cfg)
    pairs, pstats = pair_photons(photons, cfg)
    stats = {**stats, **{f"centroid_{k}": v for k, v in cstats.items()},
             **{f"coinc_{k}": v for k, v in pstats.items()}}
    return PipelineResult(raw=raw, photons=photons, pairs=pairs, stats=stats, truth=truth)
