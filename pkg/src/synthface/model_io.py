"""Binary MFM1 model file format.

Layout (little-endian): magic ``MFM1``; u32 N, M, n_id, n_exp, n_tex; then
float64 arrays mu_S, A_id (column-major), A_exp, mu_T, A_T; u32 triangle
triples; optional trailer ``LMK1`` + u32 K + u32 landmark vertex indices.
Round-trips are bit-exact.
"""

from __future__ import annotations

import hashlib
import io
import struct

import numpy as np

from .model import MorphableModel

MAGIC = b"MFM1"
LANDMARK_MAGIC = b"LMK1"


class ModelFormatError(ValueError):
    pass


def model_to_bytes(model: MorphableModel) -> bytes:
    buf = io.BytesIO()
    n = model.n_vertices
    m = model.triangles.shape[0]
    buf.write(MAGIC)
    buf.write(struct.pack("<5I", n, m, model.n_id, model.n_exp, model.n_tex))
    buf.write(model.mu_shape.astype("<f8").tobytes())
    buf.write(np.asfortranarray(model.basis_id.astype("<f8")).tobytes(order="F"))
    buf.write(np.asfortranarray(model.basis_exp.astype("<f8")).tobytes(order="F"))
    buf.write(model.mu_tex.astype("<f8").tobytes())
    buf.write(np.asfortranarray(model.basis_tex.astype("<f8")).tobytes(order="F"))
    buf.write(model.triangles.astype("<u4").tobytes())
    if model.landmark_indices is not None:
        buf.write(LANDMARK_MAGIC)
        buf.write(struct.pack("<I", model.landmark_indices.shape[0]))
        buf.write(model.landmark_indices.astype("<u4").tobytes())
    return buf.getvalue()


def model_from_bytes(data: bytes) -> MorphableModel:
    if data[:4] != MAGIC:
        raise ModelFormatError(f"bad model magic {data[:4]!r}, expected {MAGIC!r}")
    off = 4
    n, m, n_id, n_exp, n_tex = struct.unpack_from("<5I", data, off)
    off += 20

    def read_f8(count, shape=None, order="C"):
        nonlocal off
        arr = np.frombuffer(data, dtype="<f8", count=count, offset=off).copy()
        off += 8 * count
        if shape is not None:
            arr = arr.reshape(shape, order=order)
        return arr

    mu_s = read_f8(3 * n)
    a_id = read_f8(3 * n * n_id, (3 * n, n_id), order="F")
    a_exp = read_f8(3 * n * n_exp, (3 * n, n_exp), order="F")
    mu_t = read_f8(3 * n)
    a_tex = read_f8(3 * n * n_tex, (3 * n, n_tex), order="F")
    tris = np.frombuffer(data, dtype="<u4", count=3 * m, offset=off) \
        .copy().reshape(m, 3).astype(np.int64)
    off += 12 * m

    landmarks = None
    if off < len(data):
        if data[off:off + 4] != LANDMARK_MAGIC:
            raise ModelFormatError("unrecognized trailer in model file")
        k = struct.unpack_from("<I", data, off + 4)[0]
        landmarks = np.frombuffer(data, dtype="<u4", count=k, offset=off + 8) \
            .copy().astype(np.int64)
    return MorphableModel(mu_s, a_id, a_exp, mu_t, a_tex, tris,
                          landmark_indices=landmarks)


def save_model(model: MorphableModel, path) -> None:
    with open(path, "wb") as f:
        f.write(model_to_bytes(model))


def load_model(path) -> MorphableModel:
    with open(path, "rb") as f:
        data = f.read()
    try:
        return model_from_bytes(data)
    except ModelFormatError as exc:
        raise ModelFormatError(f"{path}: {exc}") from None


def model_digest(model: MorphableModel) -> str:
    """SHA-256 hex digest of the serialized model."""
    return hashlib.sha256(model_to_bytes(model)).hexdigest()
