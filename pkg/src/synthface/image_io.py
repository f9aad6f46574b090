"""Image and buffer file formats: binary PGM/PPM (8-bit) and raw depth dumps."""

from __future__ import annotations

import struct

import numpy as np


def quantize(img: np.ndarray) -> np.ndarray:
    """Snap float image values in [0,1] to the 8-bit grid (k/255)."""
    return np.round(np.clip(img, 0.0, 1.0) * 255.0) / 255.0


def _to_u8(img: np.ndarray) -> np.ndarray:
    return np.round(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)


def write_pgm(path, img: np.ndarray) -> None:
    """Single-channel image (H, W) with float values in [0,1], or bool mask."""
    if img.dtype == bool:
        data = np.where(img, 255, 0).astype(np.uint8)
    else:
        data = _to_u8(img)
    h, w = data.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode())
        f.write(data.tobytes())


def write_ppm(path, img: np.ndarray) -> None:
    """RGB image (H, W, 3) with float values in [0,1]."""
    data = _to_u8(img)
    h, w, _ = data.shape
    with open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode())
        f.write(data.tobytes())


def _read_pnm_header(f):
    magic = f.readline().strip()
    fields = []
    while len(fields) < 3:
        line = f.readline()
        if not line:
            raise ValueError("truncated PNM header")
        text = line.split(b"#")[0]
        fields += text.split()
    w, h, maxval = (int(x) for x in fields[:3])
    if maxval != 255:
        raise ValueError(f"unsupported PNM maxval {maxval}")
    return magic, w, h


def read_pgm(path) -> np.ndarray:
    """Returns float image (H, W) with values k/255."""
    with open(path, "rb") as f:
        magic, w, h = _read_pnm_header(f)
        if magic != b"P5":
            raise ValueError(f"not a binary PGM file: magic {magic!r}")
        data = np.frombuffer(f.read(w * h), dtype=np.uint8).reshape(h, w)
    return data.astype(np.float64) / 255.0


def read_ppm(path) -> np.ndarray:
    with open(path, "rb") as f:
        magic, w, h = _read_pnm_header(f)
        if magic != b"P6":
            raise ValueError(f"not a binary PPM file: magic {magic!r}")
        data = np.frombuffer(f.read(w * h * 3), dtype=np.uint8).reshape(h, w, 3)
    return data.astype(np.float64) / 255.0


def write_depth(path, depth: np.ndarray) -> None:
    """Raw float32 little-endian with u32 width/height header."""
    h, w = depth.shape
    with open(path, "wb") as f:
        f.write(struct.pack("<II", w, h))
        f.write(depth.astype("<f4").tobytes())


def read_depth(path) -> np.ndarray:
    with open(path, "rb") as f:
        w, h = struct.unpack("<II", f.read(8))
        data = np.frombuffer(f.read(4 * w * h), dtype="<f4").reshape(h, w)
    return data.copy()
