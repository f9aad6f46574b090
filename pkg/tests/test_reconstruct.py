import numpy as np
import pytest

from synthface.datagen import generate_sample, rng_for_sample
from synthface.model import (GeometryCoefficients, geometry_loss,
                             synthesize_geometry)
from synthface.reconstruct import (IEFConfig, LinearPredictor,
                                   extract_features, ief_reconstruct,
                                   load_predictor, mask_by_generic_projection,
                                   save_predictor, train_linear_predictor)
from synthface.render import PoseParams, nominal_focal, render_shading_image


@pytest.fixture(scope="module")
def corpus(fit_model):
    return [generate_sample(rng_for_sample(1, i), fit_model, 64, 64,
                            sample_id=i) for i in range(200)]


@pytest.fixture(scope="module")
def cfg64():
    return IEFConfig(width=64, height=64)


# ---------------------------------------------------------------------------
# Config and features

def test_config_validation():
    with pytest.raises(ValueError):
        IEFConfig(iterations=0)
    with pytest.raises(ValueError):
        IEFConfig(width=100, height=100, feature_downsample=8)
    assert IEFConfig(width=200, height=200, feature_downsample=8).feature_dim \
        == 2 * 25 * 25 + 1


def test_features_constant_image(cfg64):
    face = np.full((64, 64), 0.25)
    shading = np.full((64, 64), 0.75)
    f = extract_features(face, shading, cfg64)
    blocks = (64 // 8) ** 2
    assert f.shape == (2 * blocks + 1,)
    assert np.allclose(f[:blocks], 0.25)
    assert np.allclose(f[blocks:-1], 0.75)
    assert f[-1] == 1.0


def test_features_checkerboard(cfg64):
    tile = np.kron(np.indices((8, 8)).sum(axis=0) % 2, np.ones((8, 8)))
    f = extract_features(tile, np.zeros((64, 64)), cfg64)
    # within each 8x8 pooling block the pattern is constant 0 or 1; pooling
    # pairs of blocks at half resolution gives exact 0/1 values per entry
    assert set(np.unique(f[:64])) == {0.0, 1.0}
    finer = extract_features(
        np.kron(np.indices((16, 16)).sum(axis=0) % 2, np.ones((4, 4))),
        np.zeros((64, 64)), cfg64)
    assert np.allclose(finer[:64], 0.5)


def test_features_shape_mismatch(cfg64):
    with pytest.raises(ValueError):
        extract_features(np.zeros((32, 32)), np.zeros((64, 64)), cfg64)


# ---------------------------------------------------------------------------
# Training

def test_identity_dataset_learns_passthrough(fit_model, corpus, cfg64):
    from dataclasses import replace
    ident = [replace(s, alpha_t=s.alpha_gt) for s in corpus]
    pred = train_linear_predictor(ident, fit_model, cfg64, ridge_lambda=1e-8)
    losses = []
    for s in ident[:50]:
        feats = extract_features(s.face_image, s.shading_image, cfg64)
        out = pred(feats, s.alpha_t.vector)
        losses.append(geometry_loss(
            fit_model, GeometryCoefficients.from_vector(out, fit_model.n_id),
            s.alpha_gt))
    assert np.mean(losses) < 1e-6


def test_huge_ridge_predicts_mean(fit_model, corpus, cfg64):
    pred = train_linear_predictor(corpus, fit_model, cfg64, ridge_lambda=1e12)
    gt = np.stack([s.alpha_gt.vector for s in corpus])
    feats = extract_features(corpus[0].face_image, corpus[0].shading_image,
                             cfg64)
    out = pred(feats, corpus[0].alpha_t.vector)
    assert np.abs(out).max() < 0.1 * np.abs(gt.mean(axis=0)).max() + 0.05


def test_training_beats_zero_predictor(fit_model, corpus, cfg64):
    pred = train_linear_predictor(corpus, fit_model, cfg64, ridge_lambda=1e-1)
    total = 0.0
    zero_total = 0.0
    for s in corpus:
        feats = extract_features(s.face_image, s.shading_image, cfg64)
        out = GeometryCoefficients.from_vector(
            pred(feats, s.alpha_t.vector), fit_model.n_id)
        total += geometry_loss(fit_model, out, s.alpha_gt)
        zero_total += geometry_loss(
            fit_model, GeometryCoefficients.zeros(30, 10), s.alpha_gt)
    assert total < zero_total


def test_training_input_validation(fit_model, cfg64):
    with pytest.raises(ValueError):
        train_linear_predictor([], fit_model, cfg64)
    with pytest.raises(ValueError):
        train_linear_predictor([], fit_model, cfg64, ridge_lambda=0.0)


# ---------------------------------------------------------------------------
# The feedback loop

def test_ideal_predictor_converges_in_one_step(fit_model, corpus, cfg64):
    s = corpus[0]
    target = s.alpha_gt.vector

    def oracle(features, alpha):
        return target

    res = ief_reconstruct(s.face_image, s.pose, oracle, fit_model, cfg64)
    assert len(res.iterates) == cfg64.iterations + 1
    assert np.array_equal(res.iterates[0], np.zeros(40))
    got = GeometryCoefficients.from_vector(res.iterates[1], 30)
    assert geometry_loss(fit_model, got, s.alpha_gt) == 0.0


def test_zero_predictor_stays_at_mean(fit_model, corpus, cfg64):
    s = corpus[0]
    zero = LinearPredictor(np.zeros((40, cfg64.feature_dim + 40)),
                           np.zeros(40))
    res = ief_reconstruct(s.face_image, s.pose, zero, fit_model, cfg64)
    for it in res.iterates:
        assert np.array_equal(it, np.zeros(40))
    assert np.array_equal(res.final_mesh.vertices,
                          fit_model.mean_mesh.vertices)


def test_loop_masks_input_by_estimate(fit_model, corpus, cfg64):
    s = corpus[0]
    seen = []

    def spy(features, alpha):
        seen.append(features.copy())
        return np.zeros(40)

    ief_reconstruct(s.face_image, s.pose, spy, fit_model, cfg64)
    mean_raster = render_shading_image(fit_model.mean_mesh, s.pose, 64, 64)
    masked = np.where(mean_raster.mask, s.face_image, 0.0)
    shading = np.where(mean_raster.mask, mean_raster.image, 0.0)
    expected = extract_features(masked, shading, cfg64)
    assert np.array_equal(seen[0], expected)


def test_wrong_predictor_output_rejected(fit_model, corpus, cfg64):
    s = corpus[0]
    with pytest.raises(ValueError):
        ief_reconstruct(s.face_image, s.pose,
                        lambda f, a: np.zeros(7), fit_model, cfg64)


def test_generic_projection_mask(fit_model):
    f0 = nominal_focal(fit_model.mean_mesh, 64)
    pose = PoseParams.identity(f0)
    img = np.ones((64, 64))
    masked = mask_by_generic_projection(img, pose, fit_model)
    raster = render_shading_image(fit_model.mean_mesh, pose, 64, 64)
    assert np.array_equal(masked > 0, raster.mask)
    # idempotence
    assert np.array_equal(mask_by_generic_projection(masked, pose, fit_model),
                          masked)


# ---------------------------------------------------------------------------
# Predictor file format

def test_predictor_roundtrip_bit_exact(tmp_path, rng):
    pred = LinearPredictor(rng.standard_normal((12, 40)),
                           rng.standard_normal(12))
    path = tmp_path / "p.prd"
    save_predictor(path, pred)
    loaded = load_predictor(path)
    assert np.array_equal(loaded.weight, pred.weight)
    assert np.array_equal(loaded.bias, pred.bias)
    assert loaded.feature_dim == 28
    assert loaded.n_coeffs == 12


def test_predictor_bad_magic(tmp_path):
    path = tmp_path / "bad.prd"
    path.write_bytes(b"NOPE" + b"\x00" * 16)
    with pytest.raises(ValueError):
        load_predictor(path)
