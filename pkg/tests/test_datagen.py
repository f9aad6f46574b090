import hashlib
import os

import numpy as np
import pytest

from synthface.datagen import (generate_dataset, generate_sample,
                               load_coeff_vector, load_dataset, load_manifest,
                               load_sample_coeffs, rng_for_sample,
                               sample_intermediate, save_coeff_vector,
                               save_sample_coeffs)
from synthface.model import GeometryCoefficients, sample_geometry_coefficients
from synthface.render import render_shading_image
from synthface.model import synthesize_geometry


# ---------------------------------------------------------------------------
# Intermediate coefficient sampling

def test_intermediate_endpoints(small_model, rng):
    gt = sample_geometry_coefficients(rng, small_model)
    at = sample_intermediate(np.random.default_rng(1), gt, u=1.0)
    assert np.array_equal(at.vector, gt.vector)
    r = np.random.default_rng(1)
    expected_rand = r.standard_normal(15)
    at0 = sample_intermediate(np.random.default_rng(1), gt, u=0.0)
    assert np.array_equal(at0.vector, expected_rand)


def test_intermediate_stream_advances_identically(small_model, rng):
    gt = sample_geometry_coefficients(rng, small_model)
    r1 = np.random.default_rng(2)
    r2 = np.random.default_rng(2)
    sample_intermediate(r1, gt)
    sample_intermediate(r2, gt, u=0.5)
    assert r1.standard_normal() == r2.standard_normal()


def test_intermediate_variance_third(small_model):
    gt = GeometryCoefficients.zeros(10, 5)
    r = np.random.default_rng(3)
    draws = np.stack([sample_intermediate(r, gt).vector for _ in range(8000)])
    # alpha_t = (1-u) * alpha_rand with u ~ U[0,1]: variance = E[(1-u)^2] = 1/3
    var = draws.reshape(-1).var()
    assert abs(var - 1 / 3) < 0.05 / 3


# ---------------------------------------------------------------------------
# Single-sample generation

def test_generate_sample_deterministic(small_model):
    a = generate_sample(rng_for_sample(5, 2), small_model, 64, 64, sample_id=2)
    b = generate_sample(rng_for_sample(5, 2), small_model, 64, 64, sample_id=2)
    assert np.array_equal(a.face_image, b.face_image)
    assert np.array_equal(a.shading_image, b.shading_image)
    assert np.array_equal(a.alpha_gt.vector, b.alpha_gt.vector)
    assert a.pose.f == b.pose.f


def test_face_masked_by_shading_mask(small_model):
    s = generate_sample(rng_for_sample(5, 3), small_model, 64, 64)
    shading_raster = render_shading_image(
        synthesize_geometry(small_model, s.alpha_t), s.pose, 64, 64)
    assert not np.any(s.face_image[~shading_raster.mask])
    assert not np.any(s.shading_image[~shading_raster.mask])


def test_forced_u_one_aligns_masks(small_model):
    s = generate_sample(rng_for_sample(5, 4), small_model, 64, 64, force_u=1.0)
    gt_raster = render_shading_image(
        synthesize_geometry(small_model, s.alpha_gt), s.pose, 64, 64)
    at_raster = render_shading_image(
        synthesize_geometry(small_model, s.alpha_t), s.pose, 64, 64)
    assert np.array_equal(gt_raster.mask, at_raster.mask)


def test_images_are_quantized(small_model):
    s = generate_sample(rng_for_sample(5, 6), small_model, 64, 64)
    for img in (s.face_image, s.shading_image):
        steps = img * 255.0
        assert np.abs(steps - np.round(steps)).max() < 1e-9


# ---------------------------------------------------------------------------
# Coefficient files

def test_coeff_vector_roundtrip(tmp_path, rng):
    vec = rng.standard_normal(17)
    path = tmp_path / "c.bin"
    save_coeff_vector(path, vec)
    assert np.array_equal(load_coeff_vector(path), vec)


def test_sample_coeffs_roundtrip(tmp_path, small_model):
    s = generate_sample(rng_for_sample(5, 7), small_model, 64, 64)
    path = tmp_path / "s.bin"
    save_sample_coeffs(path, s)
    at, agt, pose, lighting = load_sample_coeffs(path, small_model.n_id)
    assert np.array_equal(at.vector, s.alpha_t.vector)
    assert np.array_equal(agt.vector, s.alpha_gt.vector)
    assert pose.f == s.pose.f
    assert np.array_equal(pose.rotation, s.pose.rotation)
    assert np.array_equal(pose.translation, s.pose.translation)
    assert lighting.k_diffuse == s.lighting.k_diffuse
    assert np.array_equal(lighting.light_dir, s.lighting.light_dir)


# ---------------------------------------------------------------------------
# Dataset directories

def dir_digest(path):
    h = hashlib.sha256()
    for name in sorted(os.listdir(path)):
        h.update(name.encode())
        with open(os.path.join(path, name), "rb") as f:
            h.update(f.read())
    return h.hexdigest()


def test_dataset_worker_count_invariance(tmp_path, small_model):
    d1 = tmp_path / "w1"
    d3 = tmp_path / "w3"
    generate_dataset(4, small_model, 4, d1, width=64, height=64, workers=1)
    generate_dataset(4, small_model, 4, d3, width=64, height=64, workers=3)
    assert dir_digest(d1) == dir_digest(d3)


def test_dataset_roundtrip_and_seed_sensitivity(tmp_path, small_model):
    d = tmp_path / "ds"
    manifest = generate_dataset(8, small_model, 3, d, width=64, height=64)
    assert manifest.count == 3
    samples = load_dataset(d, small_model)
    assert len(samples) == 3
    direct = generate_sample(rng_for_sample(8, 1), small_model, 64, 64,
                             sample_id=1)
    assert np.array_equal(samples[1].face_image, direct.face_image)
    assert np.array_equal(samples[1].alpha_gt.vector, direct.alpha_gt.vector)

    d2 = tmp_path / "ds2"
    generate_dataset(9, small_model, 3, d2, width=64, height=64)
    other = load_dataset(d2, small_model)
    assert not np.array_equal(other[0].alpha_gt.vector,
                              samples[0].alpha_gt.vector)


def test_manifest_missing_file_detected(tmp_path, small_model):
    d = tmp_path / "ds"
    generate_dataset(8, small_model, 2, d, width=64, height=64)
    os.remove(d / "sample_000001_face.pgm")
    with pytest.raises(FileNotFoundError):
        load_manifest(d / "manifest.txt")


def test_load_dataset_rejects_wrong_model(tmp_path, small_model, fit_model):
    d = tmp_path / "ds"
    generate_dataset(8, small_model, 2, d, width=64, height=64)
    with pytest.raises(ValueError):
        load_dataset(d, fit_model)


def test_generate_dataset_rejects_bad_count(tmp_path, small_model):
    with pytest.raises(ValueError):
        generate_dataset(1, small_model, 0, tmp_path / "x")
