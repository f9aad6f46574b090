"""Iterative error-feedback reconstruction with a pluggable predictor.

The loop starts at the mean face (all-zero coefficients), renders a shading
image of the current estimate, masks the input image with the estimate's
coverage, and asks the predictor for updated coefficients.  The desk-scale
predictor is a ridge-trained linear map on pooled-pixel features; anything
with the same call signature plugs in unchanged.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np

from . import defaults
from .model import (GeometryCoefficients, Mesh, MorphableModel,
                    synthesize_geometry)
from .render import PoseParams, RasterOutput, render_shading_image


@dataclass(frozen=True)
class IEFConfig:
    iterations: int = defaults.IEF_ITERATIONS
    width: int = defaults.IMAGE_WIDTH
    height: int = defaults.IMAGE_HEIGHT
    feature_downsample: int = defaults.FEATURE_DOWNSAMPLE

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.width % self.feature_downsample or self.height % self.feature_downsample:
            raise ValueError("image dims must be divisible by feature_downsample")

    @property
    def feature_dim(self) -> int:
        blocks = (self.width // self.feature_downsample) \
            * (self.height // self.feature_downsample)
        return 2 * blocks + 1


class Predictor(Protocol):
    """Pure mapping (features, current coefficients) -> new coefficient vector."""

    def __call__(self, features: np.ndarray, alpha: np.ndarray) -> np.ndarray: ...


@dataclass
class ReconstructionResult:
    iterates: list          # coefficient vectors, length iterations + 1; [0] is zero
    final_mesh: Mesh
    final_shading: RasterOutput
    pose: PoseParams

    def final_coefficients(self, model: MorphableModel) -> GeometryCoefficients:
        return GeometryCoefficients.from_vector(self.iterates[-1], model.n_id)


def _block_mean(img: np.ndarray, k: int) -> np.ndarray:
    h, w = img.shape
    return img.reshape(h // k, k, w // k, k).mean(axis=(1, 3)).reshape(-1)


def extract_features(face_image: np.ndarray, shading_image: np.ndarray,
                     config: IEFConfig) -> np.ndarray:
    """Block-averaged pixels of both channels plus a trailing constant 1."""
    expected = (config.height, config.width)
    if face_image.shape != expected or shading_image.shape != expected:
        raise ValueError(
            f"image dims {face_image.shape}/{shading_image.shape} do not match "
            f"config {expected}")
    k = config.feature_downsample
    return np.concatenate([_block_mean(face_image, k),
                           _block_mean(shading_image, k),
                           [1.0]])


@dataclass
class LinearPredictor:
    """pred = weight @ [features; alpha] + bias."""

    weight: np.ndarray    # (n_coeffs, feature_dim + n_coeffs)
    bias: np.ndarray      # (n_coeffs,)

    def __call__(self, features: np.ndarray, alpha: np.ndarray) -> np.ndarray:
        x = np.concatenate([features, alpha])
        if x.shape[0] != self.weight.shape[1]:
            raise ValueError(
                f"predictor expects input dim {self.weight.shape[1]}, "
                f"got {x.shape[0]}")
        return self.weight @ x + self.bias

    @property
    def n_coeffs(self) -> int:
        return self.weight.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.weight.shape[1] - self.weight.shape[0]


def train_linear_predictor(samples,
                           model: MorphableModel,
                           config: IEFConfig,
                           ridge_lambda: float = defaults.RIDGE_LAMBDA) -> LinearPredictor:
    """Ridge regression from [features; alpha_t] to alpha_gt.

    The loss is measured in vertex space through the shape basis, so the
    normal equations carry the basis Gram matrix as output-space weighting;
    for orthonormal-basis models this reduces to plain ridge regression.
    """
    samples = list(samples)
    if not samples:
        raise ValueError("training set is empty")
    if ridge_lambda <= 0:
        raise ValueError("ridge_lambda must be > 0")
    n_coeffs = model.n_id + model.n_exp
    n_in = config.feature_dim + n_coeffs

    x = np.empty((len(samples), n_in + 1))       # trailing column trains the bias
    y = np.empty((len(samples), n_coeffs))
    for r, s in enumerate(samples):
        feats = extract_features(s.face_image, s.shading_image, config)
        x[r, :config.feature_dim] = feats
        x[r, config.feature_dim:n_in] = s.alpha_t.vector
        x[r, n_in] = 1.0
        y[r] = s.alpha_gt.vector

    basis = model.shape_basis
    gram = basis.T @ basis
    xtx = x.T @ x
    xty = x.T @ y

    # Row-space eigenbasis of the Gram matrix decouples the weighted problem
    # into independent ridge solves, one per distinct eigenvalue.
    evals, evecs = np.linalg.eigh(gram)
    if np.allclose(evals, 1.0, atol=1e-8):
        params = np.linalg.solve(xtx + ridge_lambda * np.eye(n_in + 1), xty).T
    else:
        rhs = xty @ evecs                         # columns in eigen coordinates
        sol = np.empty_like(rhs)
        rounded = np.round(evals, 10)
        for val in np.unique(rounded):
            cols = rounded == val
            d = float(np.mean(evals[cols]))
            sol[:, cols] = np.linalg.solve(d * xtx + ridge_lambda * np.eye(n_in + 1),
                                           d * rhs[:, cols])
        params = (sol @ evecs.T).T
    return LinearPredictor(weight=params[:, :n_in], bias=params[:, n_in])


def ief_reconstruct(face_image: np.ndarray,
                    pose: PoseParams,
                    predictor: Callable,
                    model: MorphableModel,
                    config: IEFConfig | None = None) -> ReconstructionResult:
    """Run the error-feedback loop from the mean face."""
    config = config or IEFConfig()
    if face_image.shape != (config.height, config.width):
        raise ValueError(
            f"image shape {face_image.shape} does not match config "
            f"({config.height}, {config.width})")
    n_coeffs = model.n_id + model.n_exp
    alpha = np.zeros(n_coeffs)
    iterates = [alpha.copy()]
    prev_mask = np.ones(face_image.shape, dtype=bool)
    shading = None

    for _ in range(config.iterations):
        mesh = synthesize_geometry(
            model, GeometryCoefficients.from_vector(alpha, model.n_id))
        raster = render_shading_image(mesh, pose, config.width, config.height)
        if raster.mask.any():
            mask = raster.mask
            shading_img = np.where(mask, raster.image, 0.0)
            shading = raster
        else:
            # degenerate estimate: keep the previous mask and shading
            mask = prev_mask
            shading_img = shading.image if shading is not None \
                else np.zeros_like(face_image)
        masked = np.where(mask, face_image, 0.0)
        features = extract_features(masked, shading_img, config)
        alpha = np.asarray(predictor(features, alpha), dtype=np.float64)
        if alpha.shape != (n_coeffs,):
            raise ValueError("predictor returned a wrong-sized coefficient vector")
        iterates.append(alpha.copy())
        prev_mask = mask

    final_coeffs = GeometryCoefficients.from_vector(alpha, model.n_id)
    final_mesh = synthesize_geometry(model, final_coeffs)
    final_shading = render_shading_image(final_mesh, pose,
                                         config.width, config.height)
    return ReconstructionResult(iterates, final_mesh, final_shading, pose)


def mask_by_generic_projection(face_image: np.ndarray,
                               pose: PoseParams,
                               model: MorphableModel) -> np.ndarray:
    """Zero the image outside the mean face's coverage under the given pose."""
    height, width = face_image.shape
    raster = render_shading_image(model.mean_mesh, pose, width, height)
    if not raster.mask.any():
        raise ValueError("mean-face projection covers no pixels; pose is invalid")
    return np.where(raster.mask, face_image, 0.0)


# ---------------------------------------------------------------------------
# PRD1 predictor file format

PREDICTOR_MAGIC = b"PRD1"


def save_predictor(path, predictor: LinearPredictor) -> None:
    with open(path, "wb") as f:
        f.write(PREDICTOR_MAGIC)
        f.write(struct.pack("<II", predictor.feature_dim, predictor.n_coeffs))
        f.write(predictor.weight.astype("<f8").tobytes(order="C"))
        f.write(predictor.bias.astype("<f8").tobytes())


def load_predictor(path) -> LinearPredictor:
    with open(path, "rb") as f:
        data = f.read()
    if data[:4] != PREDICTOR_MAGIC:
        raise ValueError(f"bad predictor magic {data[:4]!r}")
    feature_dim, n_coeffs = struct.unpack_from("<II", data, 4)
    n_in = feature_dim + n_coeffs
    weight = np.frombuffer(data, dtype="<f8", count=n_coeffs * n_in,
                           offset=12).copy().reshape(n_coeffs, n_in)
    bias = np.frombuffer(data, dtype="<f8", count=n_coeffs,
                         offset=12 + 8 * n_coeffs * n_in).copy()
    return LinearPredictor(weight, bias)
