"""Bit-exact binary persistence of event, photon, and pair streams.

Fixed-width little-endian records behind a small self-describing header.
Timestamps are stored as unsigned tick counts of the header's time_bin (the
default bin is a fractional number of ns, so raw nanoseconds would not be an
integer); sub-pixel coordinates are 24.8 fixed point.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from .centroid import PhotonEventStream
from .coinc import CoincidencePairStream
from .detector import RawEventStream
from .errors import BadMagicError, StoreError, TruncatedFileError, VersionError
from .optics import Region

MAGIC = b"QPCMEVT1"
VERSION = 1

KIND_RAW = 0
KIND_PHOTON = 1
KIND_PAIR = 2
KIND_NAMES = {KIND_RAW: "raw", KIND_PHOTON: "photon", KIND_PAIR: "pair"}

_HEADER_FMT = "<8sHHHHd8HI"
_HEADER_SIZE = struct.calcsize(_HEADER_FMT)

RAW_DTYPE = np.dtype([
    ("toa", "<u8"), ("x", "<u2"), ("y", "<u2"), ("tot", "<u2"), ("flags", "<u2"),
])
PHOTON_DTYPE = np.dtype([
    ("toa", "<u8"), ("x", "<u4"), ("y", "<u4"), ("n_pixels", "<u2"),
    ("plane", "u1"), ("pad", "u1"), ("reserved", "<u4"),
])
PAIR_DTYPE = np.dtype([
    ("near_toa", "<u8"), ("dt", "<i4"), ("near_x", "<u4"), ("near_y", "<u4"),
    ("far_x", "<u4"), ("far_y", "<u4"), ("reserved", "<u4"),
])
_DTYPES = {KIND_RAW: RAW_DTYPE, KIND_PHOTON: PHOTON_DTYPE, KIND_PAIR: PAIR_DTYPE}

FIXED_POINT = 256.0  # 8 fractional bits


@dataclass
class EventFileHeader:
    record_kind: int
    sensor_size: tuple = (256, 256)
    time_bin: float = 1.5625
    near_region: Region = Region(10, 73, 120, 183)
    far_region: Region = Region(136, 73, 246, 183)
    meta: dict = None

    def __post_init__(self):
        if self.meta is None:
            self.meta = {}

    def pack(self) -> bytes:
        meta_bytes = json.dumps(self.meta, sort_keys=True).encode()
        n, f = self.near_region, self.far_region
        return struct.pack(
            _HEADER_FMT, MAGIC, VERSION, self.record_kind,
            self.sensor_size[0], self.sensor_size[1], self.time_bin,
            n.x0, n.y0, n.x1, n.y1, f.x0, f.y0, f.x1, f.y1,
            len(meta_bytes),
        ) + meta_bytes

    @staticmethod
    def unpack(fh, path) -> "EventFileHeader":
        head = fh.read(_HEADER_SIZE)
        if len(head) < _HEADER_SIZE:
            raise TruncatedFileError(f"{path}: truncated header ({len(head)} bytes)")
        (magic, version, kind, sw, sh, time_bin,
         nx0, ny0, nx1, ny1, fx0, fy0, fx1, fy1, meta_len) = struct.unpack(_HEADER_FMT, head)
        if magic != MAGIC:
            raise BadMagicError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
        if version != VERSION:
            raise VersionError(f"{path}: unsupported version {version}, expected {VERSION}")
        if kind not in _DTYPES:
            raise StoreError(f"{path}: unknown record kind {kind}")
        meta_bytes = fh.read(meta_len)
        if len(meta_bytes) < meta_len:
            raise TruncatedFileError(f"{path}: truncated metadata block")
        return EventFileHeader(
            record_kind=kind, sensor_size=(sw, sh), time_bin=time_bin,
            near_region=Region(nx0, ny0, nx1, ny1),
            far_region=Region(fx0, fy0, fx1, fy1),
            meta=json.loads(meta_bytes) if meta_len else {},
        )


def _ticks(toa_ns, time_bin):
    return np.round(np.asarray(toa_ns) / time_bin).astype(np.uint64)


def _fixed(v):
    return np.round(np.maximum(np.asarray(v), 0.0) * FIXED_POINT).astype(np.uint32)


def stream_to_records(stream, header: EventFileHeader) -> np.ndarray:
    kind = header.record_kind
    rec = np.zeros(len(stream), dtype=_DTYPES[kind])
    if kind == KIND_RAW:
        rec["toa"] = _ticks(stream.toa, header.time_bin)
        rec["x"], rec["y"] = stream.x, stream.y
        rec["tot"], rec["flags"] = stream.tot, stream.flags
    elif kind == KIND_PHOTON:
        rec["toa"] = _ticks(stream.toa, header.time_bin)
        rec["x"], rec["y"] = _fixed(stream.x), _fixed(stream.y)
        rec["n_pixels"] = stream.n_pixels
        rec["plane"] = stream.plane
    else:
        rec["near_toa"] = _ticks(stream.near_toa, header.time_bin)
        rec["dt"] = np.round(np.asarray(stream.dt) / header.time_bin).astype(np.int32)
        rec["near_x"], rec["near_y"] = _fixed(stream.near_x), _fixed(stream.near_y)
        rec["far_x"], rec["far_y"] = _fixed(stream.far_x), _fixed(stream.far_y)
    return rec


def records_to_stream(rec: np.ndarray, header: EventFileHeader):
    kind = header.record_kind
    tb = header.time_bin
    if kind == KIND_RAW:
        return RawEventStream(
            toa=rec["toa"].astype(np.float64) * tb,
            x=rec["x"].copy(), y=rec["y"].copy(),
            tot=rec["tot"].copy(), flags=rec["flags"].copy(),
        )
    if kind == KIND_PHOTON:
        return PhotonEventStream(
            toa=rec["toa"].astype(np.float64) * tb,
            x=rec["x"].astype(np.float64) / FIXED_POINT,
            y=rec["y"].astype(np.float64) / FIXED_POINT,
            n_pixels=rec["n_pixels"].copy(),
            plane=rec["plane"].copy(),
        )
    return CoincidencePairStream(
        near_toa=rec["near_toa"].astype(np.float64) * tb,
        dt=rec["dt"].astype(np.float64) * tb,
        near_x=rec["near_x"].astype(np.float64) / FIXED_POINT,
        near_y=rec["near_y"].astype(np.float64) / FIXED_POINT,
        far_x=rec["far_x"].astype(np.float64) / FIXED_POINT,
        far_y=rec["far_y"].astype(np.float64) / FIXED_POINT,
    )


def write_events(path, stream, header: EventFileHeader):
    with open(path, "wb") as fh:
        fh.write(header.pack())
        stream_to_records(stream, header).tofile(fh)


def iter_records(path, chunk_records: int = 1 << 20):
    """Yield (header, record_chunk) without loading the whole file."""
    with open(path, "rb") as fh:
        header = EventFileHeader.unpack(fh, path)
        dtype = _DTYPES[header.record_kind]
        offset = fh.tell()
        while True:
            buf = fh.read(chunk_records * dtype.itemsize)
            if not buf:
                break
            if len(buf) % dtype.itemsize:
                raise TruncatedFileError(
                    f"{path}: file ends mid-record at byte offset "
                    f"{offset + len(buf) - len(buf) % dtype.itemsize}"
                )
            yield header, np.frombuffer(buf, dtype=dtype)
            offset += len(buf)


def read_header(path) -> EventFileHeader:
    with open(path, "rb") as fh:
        return EventFileHeader.unpack(fh, path)


def read_events(path):
    """Read the whole file; returns (stream, header)."""
    header = read_header(path)
    chunks = [rec for _, rec in iter_records(path)]
    rec = np.concatenate(chunks) if chunks else np.empty(0, _DTYPES[header.record_kind])
    return records_to_stream(rec, header), header


def import_csv_events(path, header: EventFileHeader) -> RawEventStream:
    """Adapter for third-party time-tagger exports: CSV with toa_ns,x,y,tot."""
    data = np.genfromtxt(path, delimiter=",", names=True, dtype=None, encoding="utf-8")
    for col in ("toa_ns", "x", "y", "tot"):
        if col not in (data.dtype.names or ()):
            raise StoreError(f"{path}: CSV import requires column '{col}'")
    data = np.atleast_1d(data)
    return RawEventStream(
        toa=np.round(data["toa_ns"] / header.time_bin) * header.time_bin,
        x=data["x"].astype(np.uint16),
        y=data["y"].astype(np.uint16),
        tot=data["tot"].astype(np.uint16),
        flags=np.zeros(data.size, np.uint16),
    )
