"""Stochastic source of down-converted photon pairs.

Pairs carry correlated transverse birth positions and anti-correlated
transverse wavevectors.  Emission times form a homogeneous Poisson process
(CW pump).  Generation is chunked over fixed-duration time slices, each with
its own counter-derived RNG stream, so the output is identical no matter how
many workers consume the chunks.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

# Spawn-key domain separating this module's RNG streams from other stages.
RNG_DOMAIN = 0


@dataclass
class SourceConfig:
    pair_rate: float = 2.0e5          # pairs / s
    pos_sigma: float = 12.0           # um, marginal birth-position spread per axis
    pos_corr_sigma: float = 0.5       # um, spread of signal-idler position difference
    k_sigma: float = 1.0              # rad/um, marginal transverse wavevector spread
    k_sum_sigma: float = 0.05         # rad/um, spread of k_s + k_i per axis
    wavelength: float = 810.0         # nm
    pump_wavelength: float = 405.0    # nm
    duration: float = 1.0             # s
    rng_seed: int = 0
    chunk_duration: float = 0.1       # s, fixed slice size for parallel generation

    def validate(self):
        for name in ("pos_sigma", "k_sigma"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"source.{name} must be > 0, got {getattr(self, name)}")
        # Zero is the perfect-correlation limit and is explicitly allowed.
        for name in ("pos_corr_sigma", "k_sum_sigma"):
            if getattr(self, name) < 0:
                raise ConfigError(f"source.{name} must be >= 0, got {getattr(self, name)}")
        if self.k_sum_sigma > self.k_sigma:
            raise ConfigError(
                f"source.k_sum_sigma ({self.k_sum_sigma}) must not exceed "
                f"k_sigma ({self.k_sigma}): anti-correlation regime"
            )
        if self.pair_rate <= 0:
            raise ConfigError(f"source.pair_rate must be > 0, got {self.pair_rate}")
        if self.duration <= 0:
            raise ConfigError(f"source.duration must be > 0, got {self.duration}")
        if self.chunk_duration <= 0:
            raise ConfigError(f"source.chunk_duration must be > 0, got {self.chunk_duration}")
        if self.pos_corr_sigma / 2 >= self.pos_sigma:
            raise ConfigError(
                "source.pos_corr_sigma must be < 2*pos_sigma so the joint "
                "position distribution is realizable"
            )
        if self.wavelength <= 0 or self.pump_wavelength <= 0:
            raise ConfigError("source wavelengths must be > 0")


@dataclass
class PairStream:
    """Columnar stream of photon pairs, sorted by emission time."""

    t: np.ndarray         # ns since exposure start
    x: np.ndarray         # um, signal birth position
    y: np.ndarray
    ksx: np.ndarray       # rad/um, signal transverse wavevector
    ksy: np.ndarray
    kix: np.ndarray       # rad/um, idler transverse wavevector
    kiy: np.ndarray

    def __len__(self):
        return self.t.size

    def take(self, idx) -> "PairStream":
        return PairStream(*(getattr(self, f)[idx] for f in _PAIR_FIELDS))

    @staticmethod
    def concat(streams) -> "PairStream":
        streams = list(streams)
        if not streams:
            return PairStream.empty()
        return PairStream(
            *(np.concatenate([getattr(s, f) for s in streams]) for f in _PAIR_FIELDS)
        )

    @staticmethod
    def empty() -> "PairStream":
        z = np.empty(0)
        return PairStream(z, z, z, z, z, z, z)


_PAIR_FIELDS = ("t", "x", "y", "ksx", "ksy", "kix", "kiy")


def _chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(RNG_DOMAIN, chunk)))


def _generate_chunk(cfg: SourceConfig, chunk: int) -> PairStream:
    t0 = chunk * cfg.chunk_duration
    t1 = min(t0 + cfg.chunk_duration, cfg.duration)
    rng = _chunk_rng(cfg.rng_seed, chunk)
    n = rng.poisson(cfg.pair_rate * (t1 - t0))
    t = np.sort(rng.uniform(t0 * 1e9, t1 * 1e9, n))

    # Position: mean + half-difference so the signal-idler difference has
    # spread pos_corr_sigma while each marginal has spread pos_sigma.
    sig_mean = np.sqrt(cfg.pos_sigma**2 - cfg.pos_corr_sigma**2 / 4)
    mean = rng.normal(0.0, sig_mean, (n, 2))
    diff = rng.normal(0.0, cfg.pos_corr_sigma, (n, 2))
    r_signal = mean + diff / 2

    # Momentum: anti-correlated part + common half-sum.
    sig_anti = np.sqrt(cfg.k_sigma**2 - cfg.k_sum_sigma**2 / 4)
    anti = rng.normal(0.0, sig_anti, (n, 2))
    ksum = rng.normal(0.0, cfg.k_sum_sigma, (n, 2))
    k_s = anti + ksum / 2
    k_i = -anti + ksum / 2

    return PairStream(
        t=t,
        x=r_signal[:, 0],
        y=r_signal[:, 1],
        ksx=k_s[:, 0],
        ksy=k_s[:, 1],
        kix=k_i[:, 0],
        kiy=k_i[:, 1],
    )


def num_chunks(cfg: SourceConfig) -> int:
    return int(np.ceil(cfg.duration / cfg.chunk_duration))


def generate_pairs(cfg: SourceConfig, workers: int = 1) -> PairStream:
    """Generate the full pair stream for the configured exposure.

    The stream is time-sorted and bitwise reproducible from ``cfg.rng_seed``
    regardless of ``workers``.
    """
    cfg.validate()
    chunks = range(num_chunks(cfg))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda c: _generate_chunk(cfg, c), chunks))
    else:
        parts = [_generate_chunk(cfg, c) for c in chunks]
    return PairStream.concat(parts)


def iter_chunks(cfg: SourceConfig):
    """Yield (chunk_index, PairStream) pairs in time order."""
    cfg.validate()
    for c in range(num_chunks(cfg)):
        yield c, _generate_chunk(cfg, c)
