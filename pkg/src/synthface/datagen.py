"""Synthetic training corpus generation.

Each sample pairs a rendered, masked grayscale face image (ground-truth
geometry alpha_gt) with the shading image of an intermediate geometry alpha_t
drawn between a random geometry and alpha_gt, both projected with the same
pose.  Sample i uses an RNG stream derived from (master_seed, i), so the
output bytes are independent of generation order and worker count.
"""

from __future__ import annotations

import os
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import defaults
from .image_io import quantize, read_pgm, write_pgm
from .model import (GeometryCoefficients, MorphableModel,
                    sample_geometry_coefficients, sample_texture_coefficients,
                    synthesize_geometry, synthesize_texture)
from .model_io import model_digest
from .render import (LightingParams, PoseParams, compute_vertex_normals,
                     face_width_of, luminance, nominal_focal, phong_shade,
                     rasterize, render_shading_image, sample_lighting,
                     sample_pose)

MAX_POSE_RETRIES = 8


@dataclass
class TrainingSample:
    face_image: np.ndarray      # (H, W) grayscale, zero outside the alpha_t mask
    shading_image: np.ndarray   # (H, W) grayscale of the alpha_t geometry
    alpha_t: GeometryCoefficients
    alpha_gt: GeometryCoefficients
    pose: PoseParams
    lighting: LightingParams
    sample_id: int


@dataclass
class DatasetManifest:
    model_hash: str
    count: int
    width: int
    height: int
    master_seed: int
    entries: list      # (sample_id, face_file, shading_file, coeff_file)


def sample_intermediate(rng: np.random.Generator,
                        alpha_gt: GeometryCoefficients,
                        u: float | None = None) -> GeometryCoefficients:
    """alpha_t = u * alpha_gt + (1-u) * alpha_rand, u ~ Uniform[0,1].

    `u` can be forced for testing; alpha_rand is always drawn so the stream
    advances identically either way.
    """
    gt = alpha_gt.vector
    alpha_rand = rng.standard_normal(gt.shape[0])
    u_drawn = rng.uniform(0.0, 1.0)
    if u is None:
        u = u_drawn
    vec = u * gt + (1.0 - u) * alpha_rand
    return GeometryCoefficients.from_vector(vec, alpha_gt.alpha_id.shape[0])


def render_face_image(model: MorphableModel, coeffs, tcoeffs, pose,
                      lighting, width, height):
    """Phong-shaded color render of the synthesized face, plus its raster."""
    mesh = synthesize_geometry(model, coeffs)
    tex = synthesize_texture(model, tcoeffs)
    albedo = np.clip(tex.colors, 0.0, 1.0)
    normals = compute_vertex_normals(mesh)
    vertex_colors = phong_shade(albedo, normals, lighting)
    return rasterize(mesh, vertex_colors, pose, width, height)


def generate_sample(rng: np.random.Generator,
                    model: MorphableModel,
                    width: int = defaults.IMAGE_WIDTH,
                    height: int = defaults.IMAGE_HEIGHT,
                    sample_id: int = 0,
                    force_u: float | None = None) -> TrainingSample:
    alpha_gt = sample_geometry_coefficients(rng, model)
    tcoeffs = sample_texture_coefficients(rng, model)
    alpha_t = sample_intermediate(rng, alpha_gt, u=force_u)
    lighting = sample_lighting(rng)

    mean_mesh = model.mean_mesh
    f0 = nominal_focal(mean_mesh, height)
    fw = face_width_of(mean_mesh)
    mesh_t = synthesize_geometry(model, alpha_t)

    for attempt in range(MAX_POSE_RETRIES):
        pose = sample_pose(rng, f0, fw)
        face_raster = render_face_image(model, alpha_gt, tcoeffs, pose,
                                        lighting, width, height)
        shading_raster = render_shading_image(mesh_t, pose, width, height)
        if face_raster.mask.any() and shading_raster.mask.any():
            break
    else:
        raise RuntimeError(
            f"no non-degenerate pose found in {MAX_POSE_RETRIES} attempts")

    face_gray = quantize(luminance(face_raster.image))
    face_gray[~shading_raster.mask] = 0.0
    shading = quantize(shading_raster.image)
    shading[~shading_raster.mask] = 0.0
    return TrainingSample(face_gray, shading, alpha_t, alpha_gt,
                          pose, lighting, sample_id)


def rng_for_sample(master_seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([master_seed, index]))


# ---------------------------------------------------------------------------
# Coefficient file: sequence of u32-length-prefixed float64 arrays
# (alpha_t, alpha_gt, pose [f, R row-major, t], lighting [ka kd ks shin, dir]).

def _write_arrays(path, arrays) -> None:
    with open(path, "wb") as f:
        for arr in arrays:
            arr = np.asarray(arr, dtype=np.float64).reshape(-1)
            f.write(struct.pack("<I", arr.shape[0]))
            f.write(arr.astype("<f8").tobytes())


def _read_arrays(path):
    arrays = []
    with open(path, "rb") as f:
        while True:
            head = f.read(4)
            if not head:
                break
            n = struct.unpack("<I", head)[0]
            arrays.append(np.frombuffer(f.read(8 * n), dtype="<f8").copy())
    return arrays


def save_coeff_vector(path, vec: np.ndarray) -> None:
    """Single coefficient vector in the length-prefixed float64 format."""
    _write_arrays(path, [vec])


def load_coeff_vector(path) -> np.ndarray:
    arrays = _read_arrays(path)
    if len(arrays) != 1:
        raise ValueError(f"expected one coefficient array in {path}, "
                         f"found {len(arrays)}")
    return arrays[0]


def save_sample_coeffs(path, sample: TrainingSample) -> None:
    pose_vec = np.concatenate([[sample.pose.f],
                               sample.pose.rotation.reshape(-1),
                               sample.pose.translation])
    light = sample.lighting
    light_vec = np.concatenate([[light.k_ambient, light.k_diffuse,
                                 light.k_specular, light.shininess],
                                light.light_dir])
    _write_arrays(path, [sample.alpha_t.vector, sample.alpha_gt.vector,
                         pose_vec, light_vec])


def load_sample_coeffs(path, n_id: int):
    at, agt, pose_vec, light_vec = _read_arrays(path)
    pose = PoseParams(float(pose_vec[0]), pose_vec[1:10].reshape(3, 3),
                      pose_vec[10:13])
    lighting = LightingParams(float(light_vec[0]), float(light_vec[1]),
                              float(light_vec[2]), float(light_vec[3]),
                              light_vec[4:7])
    return (GeometryCoefficients.from_vector(at, n_id),
            GeometryCoefficients.from_vector(agt, n_id),
            pose, lighting)


# ---------------------------------------------------------------------------
# Dataset directory

def _sample_files(i: int):
    return (f"sample_{i:06d}_face.pgm",
            f"sample_{i:06d}_shading.pgm",
            f"sample_{i:06d}_coeffs.bin")


def _generate_range(args):
    master_seed, model, indices, out_dir, width, height = args
    for i in indices:
        sample = generate_sample(rng_for_sample(master_seed, i), model,
                                 width, height, sample_id=i)
        face_f, shade_f, coeff_f = _sample_files(i)
        write_pgm(os.path.join(out_dir, face_f), sample.face_image)
        write_pgm(os.path.join(out_dir, shade_f), sample.shading_image)
        save_sample_coeffs(os.path.join(out_dir, coeff_f), sample)
    return len(indices)


def generate_dataset(master_seed: int,
                     model: MorphableModel,
                     count: int,
                     out_dir,
                     width: int = defaults.IMAGE_WIDTH,
                     height: int = defaults.IMAGE_HEIGHT,
                     workers: int = 1) -> DatasetManifest:
    """Write `count` samples plus a manifest; bytes independent of `workers`."""
    if count < 1:
        raise ValueError("count must be >= 1")
    os.makedirs(out_dir, exist_ok=True)

    indices = list(range(count))
    if workers > 1:
        chunks = [indices[k::workers] for k in range(workers)]
        jobs = [(master_seed, model, chunk, out_dir, width, height)
                for chunk in chunks if chunk]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            list(pool.map(_generate_range, jobs))
    else:
        _generate_range((master_seed, model, indices, out_dir, width, height))

    entries = [(i, *_sample_files(i)) for i in indices]
    manifest = DatasetManifest(model_digest(model), count, width, height,
                               master_seed, entries)
    save_manifest(os.path.join(out_dir, "manifest.txt"), manifest)
    return manifest


def save_manifest(path, manifest: DatasetManifest) -> None:
    lines = [f"model_hash={manifest.model_hash}",
             f"count={manifest.count}",
             f"width={manifest.width}",
             f"height={manifest.height}",
             f"master_seed={manifest.master_seed}",
             ""]
    for sid, face_f, shade_f, coeff_f in manifest.entries:
        lines.append(f"{sid} {face_f} {shade_f} {coeff_f}")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def load_manifest(path) -> DatasetManifest:
    header = {}
    entries = []
    with open(path) as f:
        lines = [ln.rstrip("\n") for ln in f]
    k = 0
    while k < len(lines) and "=" in lines[k]:
        key, val = lines[k].split("=", 1)
        header[key] = val
        k += 1
    for ln in lines[k:]:
        if not ln.strip():
            continue
        sid, face_f, shade_f, coeff_f = ln.split()
        entries.append((int(sid), face_f, shade_f, coeff_f))
    manifest = DatasetManifest(header["model_hash"], int(header["count"]),
                               int(header["width"]), int(header["height"]),
                               int(header["master_seed"]), entries)
    base = os.path.dirname(os.path.abspath(path))
    for _, *files in entries:
        for name in files:
            p = os.path.join(base, name)
            if not os.path.exists(p):
                raise FileNotFoundError(f"manifest references missing file {p}")
    return manifest


def load_dataset(dataset_dir, model: MorphableModel) -> list[TrainingSample]:
    manifest = load_manifest(os.path.join(dataset_dir, "manifest.txt"))
    if manifest.model_hash != model_digest(model):
        raise ValueError("dataset was generated with a different model")
    samples = []
    for sid, face_f, shade_f, coeff_f in manifest.entries:
        face = read_pgm(os.path.join(dataset_dir, face_f))
        shading = read_pgm(os.path.join(dataset_dir, shade_f))
        at, agt, pose, lighting = load_sample_coeffs(
            os.path.join(dataset_dir, coeff_f), model.n_id)
        samples.append(TrainingSample(face, shading, at, agt, pose,
                                      lighting, sid))
    return samples
