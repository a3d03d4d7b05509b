"""Minimal portable-graymap (PGM) reader/writer, 8-bit and 16-bit binary."""

from __future__ import annotations

import re

import numpy as np

from .errors import ConfigError


def read_pgm(path) -> np.ndarray:
    """Read a binary (P5) or ASCII (P2) graymap; returns uint8 or uint16 array."""
    with open(path, "rb") as fh:
        data = fh.read()
    if not data[:2] in (b"P5", b"P2"):
        raise ConfigError(f"{path}: not a PGM file (bad magic {data[:2]!r})")
    # Strip comments, then parse the four header tokens.
    header = []
    pos = 0
    while len(header) < 4:
        m = re.match(rb"\s*(#[^\n]*\n|\S+)", data[pos:])
        if m is None:
            raise ConfigError(f"{path}: truncated PGM header")
        tok = m.group(1)
        pos += m.end()
        if not tok.startswith(b"#"):
            header.append(tok)
    magic, width, height, maxval = header[0], int(header[1]), int(header[2]), int(header[3])
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    count = width * height
    if magic == b"P5":
        raw = data[pos + 1 : pos + 1 + count * dtype.itemsize]
        if len(raw) < count * dtype.itemsize:
            raise ConfigError(f"{path}: truncated PGM pixel data")
        img = np.frombuffer(raw, dtype=dtype, count=count)
    else:
        img = np.array(data[pos:].split()[:count], dtype=np.int64).astype(dtype)
        if img.size < count:
            raise ConfigError(f"{path}: truncated PGM pixel data")
    return img.reshape(height, width).astype(np.uint16 if maxval > 255 else np.uint8)


def encode_pgm(img: np.ndarray, maxval: int | None = None) -> bytes:
    """Binary (P5) graymap bytes; 16-bit samples are big-endian per the format."""
    img = np.asarray(img)
    if maxval is None:
        maxval = 65535 if img.dtype.itemsize > 1 else 255
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    body = np.clip(img, 0, maxval).astype(dtype)
    return f"P5\n{img.shape[1]} {img.shape[0]}\n{maxval}\n".encode() + body.tobytes()


def write_pgm(path, img: np.ndarray, maxval: int | None = None):
    with open(path, "wb") as fh:
        fh.write(encode_pgm(img, maxval))
