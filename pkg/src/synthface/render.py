"""Weak-perspective projection, Phong shading and z-buffered rasterization.

Conventions:
  - image origin top-left, y grows downward; pixel centers at (x+0.5, y+0.5)
  - projection p = f * [I2|0] (R P + t), mapped to pixels by the image-center
    offset with the y axis flipped
  - meshes face +z, so the depth test keeps the LARGEST rotated z
  - top-left fill rule on shared triangle edges
Shading is Gouraud style: Phong evaluated per vertex, colors interpolated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import defaults
from .model import Mesh

FRONTAL_LIGHT = np.array([0.0, 0.0, 1.0])
VIEW_DIR = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class PoseParams:
    f: float                 # weak-perspective scale
    rotation: np.ndarray     # (3, 3)
    translation: np.ndarray  # (3,)

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=np.float64)
        t = np.asarray(self.translation, dtype=np.float64)
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)
        if self.f <= 0:
            raise ValueError("pose scale f must be > 0")
        if np.abs(r.T @ r - np.eye(3)).max() > 1e-10:
            raise ValueError("rotation is not orthogonal")
        if abs(np.linalg.det(r) - 1.0) > 1e-10:
            raise ValueError("rotation determinant must be +1")

    @classmethod
    def identity(cls, f: float = 1.0) -> "PoseParams":
        return cls(f, np.eye(3), np.zeros(3))


@dataclass(frozen=True)
class LightingParams:
    k_ambient: float
    k_diffuse: float
    k_specular: float
    shininess: float
    light_dir: np.ndarray    # unit 3-vector

    def __post_init__(self):
        d = np.asarray(self.light_dir, dtype=np.float64)
        object.__setattr__(self, "light_dir", d)
        if min(self.k_ambient, self.k_diffuse, self.k_specular) < 0:
            raise ValueError("reflectance constants must be >= 0")
        if self.shininess <= 0:
            raise ValueError("shininess must be > 0")
        if abs(np.linalg.norm(d) - 1.0) > 1e-10:
            raise ValueError("light_dir must be a unit vector")


@dataclass
class RasterOutput:
    image: np.ndarray   # (H, W) or (H, W, 3), float in [0,1]
    mask: np.ndarray    # (H, W) bool
    depth: np.ndarray   # (H, W), rotated-space z; -inf outside the mask


# ---------------------------------------------------------------------------
# Projection

def project_vertices(mesh: Mesh, pose: PoseParams,
                     width: int, height: int):
    """Returns ((N,2) pixel coordinates, (N,) rotated-space depths)."""
    cam = mesh.vertices @ pose.rotation.T + pose.translation
    pts = np.empty((cam.shape[0], 2))
    pts[:, 0] = width / 2.0 + pose.f * cam[:, 0]
    pts[:, 1] = height / 2.0 - pose.f * cam[:, 1]
    return pts, cam[:, 2].copy()


def compute_vertex_normals(mesh: Mesh) -> np.ndarray:
    """Area-weighted vertex normals; (0,0,1) fallback for degenerate vertices."""
    v = mesh.vertices
    t = mesh.triangles
    e1 = v[t[:, 1]] - v[t[:, 0]]
    e2 = v[t[:, 2]] - v[t[:, 0]]
    face_n = np.cross(e1, e2)       # magnitude = 2 * area
    acc = np.zeros_like(v)
    for k in range(3):
        np.add.at(acc, t[:, k], face_n)
    norms = np.linalg.norm(acc, axis=1)
    bad = norms < 1e-300
    acc[bad] = (0.0, 0.0, 1.0)
    norms[bad] = 1.0
    return acc / norms[:, None]


def phong_shade(albedo: np.ndarray, normal: np.ndarray,
                lighting: LightingParams,
                view_dir: np.ndarray = VIEW_DIR) -> np.ndarray:
    """Phong reflectance per vertex; albedo (..., 3), normal (..., 3) unit.

    Output clamped to [0,1].
    """
    albedo = np.asarray(albedo, dtype=np.float64)
    normal = np.asarray(normal, dtype=np.float64)
    l = lighting.light_dir
    ln = np.maximum(normal @ l, 0.0)
    refl = 2.0 * (normal @ l)[..., None] * normal - l
    rv = np.maximum(refl @ view_dir, 0.0)
    out = (lighting.k_ambient
           + lighting.k_diffuse * ln[..., None]
           + lighting.k_specular * (rv ** lighting.shininess)[..., None]) * albedo
    return np.clip(out, 0.0, 1.0)


# ---------------------------------------------------------------------------
# Rasterization

def _edge(ax, ay, bx, by, px, py):
    return (bx - ax) * (py - ay) - (by - ay) * (px - ax)


def _top_left(ax, ay, bx, by):
    dx = bx - ax
    dy = by - ay
    return (dy == 0) & (dx < 0) | (dy > 0)


def rasterize(mesh: Mesh, colors: np.ndarray, pose: PoseParams,
              width: int, height: int) -> RasterOutput:
    """Z-buffered triangle fill with barycentric color interpolation."""
    colors = np.asarray(colors, dtype=np.float64)
    if colors.shape[0] != mesh.vertices.shape[0]:
        raise ValueError("per-vertex color count does not match the mesh")
    pts, depths = project_vertices(mesh, pose, width, height)
    channels = 1 if colors.ndim == 1 else colors.shape[1]
    cols = colors.reshape(-1, channels)

    image = np.zeros((height, width, channels))
    mask = np.zeros((height, width), dtype=bool)
    depth = np.full((height, width), -np.inf)
    out = RasterOutput(image[..., 0] if channels == 1 else image, mask, depth)

    tri = mesh.triangles
    x = pts[tri, 0]      # (M, 3)
    y = pts[tri, 1]
    # orient every triangle positively (swap vertices 1 and 2 where needed)
    area2 = (x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) \
        - (y[:, 1] - y[:, 0]) * (x[:, 2] - x[:, 0])
    flip = area2 < 0
    tri = tri.copy()
    tri[flip] = tri[flip][:, [0, 2, 1]]
    x[flip] = x[flip][:, [0, 2, 1]]
    y[flip] = y[flip][:, [0, 2, 1]]
    area2 = np.abs(area2)
    keep = area2 > 0
    tri_ids = np.nonzero(keep)[0]
    if tri_ids.size == 0:
        return out
    tri, x, y, area2 = tri[keep], x[keep], y[keep], area2[keep]

    # candidate pixels: clipped bounding box per triangle
    ix0 = np.clip(np.ceil(x.min(axis=1) - 0.5).astype(np.int64), 0, width)
    ix1 = np.clip(np.floor(x.max(axis=1) - 0.5).astype(np.int64), -1, width - 1)
    iy0 = np.clip(np.ceil(y.min(axis=1) - 0.5).astype(np.int64), 0, height)
    iy1 = np.clip(np.floor(y.max(axis=1) - 0.5).astype(np.int64), -1, height - 1)
    bw = np.maximum(ix1 - ix0 + 1, 0)
    bh = np.maximum(iy1 - iy0 + 1, 0)
    counts = bw * bh
    nonempty = counts > 0
    if not nonempty.any():
        return out
    tri, x, y, area2, tri_ids = (a[nonempty] for a in (tri, x, y, area2, tri_ids))
    ix0, iy0, bw, bh, counts = (a[nonempty] for a in (ix0, iy0, bw, bh, counts))

    total = int(counts.sum())
    rep = np.repeat(np.arange(tri.shape[0]), counts)
    start = np.concatenate([[0], np.cumsum(counts)[:-1]])
    local = np.arange(total) - np.repeat(start, counts)
    px = (ix0[rep] + local % bw[rep] + 0.5).astype(np.float64)
    py = (iy0[rep] + local // bw[rep] + 0.5).astype(np.float64)

    xr, yr = x[rep], y[rep]
    inside = np.ones(total, dtype=bool)
    bary = np.empty((total, 3))
    for k in range(3):
        a, b = (k + 1) % 3, (k + 2) % 3
        e = _edge(xr[:, a], yr[:, a], xr[:, b], yr[:, b], px, py)
        tl = _top_left(xr[:, a], yr[:, a], xr[:, b], yr[:, b])
        inside &= (e > 0) | ((e == 0) & tl)
        bary[:, k] = e
    if not inside.any():
        return out
    rep = rep[inside]
    bary = bary[inside] / area2[rep][:, None]
    px_i = (px[inside] - 0.5).astype(np.int64)
    py_i = (py[inside] - 0.5).astype(np.int64)

    frag_depth = np.einsum("fk,fk->f", bary, depths[tri[rep]])
    frag_color = np.einsum("fk,fkc->fc", bary, cols[tri[rep]])
    pix = py_i * width + px_i

    # resolve: per pixel keep the largest depth, ties to the lowest triangle id
    order = np.lexsort((-tri_ids[rep], frag_depth, pix))
    pix_sorted = pix[order]
    last = np.nonzero(np.diff(pix_sorted, append=-1))[0]
    win = order[last]

    py_w, px_w = pix[win] // width, pix[win] % width
    mask[py_w, px_w] = True
    depth[py_w, px_w] = frag_depth[win]
    image[py_w, px_w] = frag_color[win]
    return out


def render_shading_image(mesh: Mesh, pose: PoseParams,
                         width: int, height: int) -> RasterOutput:
    """Lambertian gray render under a frontal light, unit albedo."""
    normals = compute_vertex_normals(mesh)
    gray = np.maximum(normals @ FRONTAL_LIGHT, 0.0)
    return rasterize(mesh, gray, pose, width, height)


# ---------------------------------------------------------------------------
# Randomized scene parameters

def sample_lighting(rng: np.random.Generator,
                    means=(defaults.PHONG_MEAN_AMBIENT,
                           defaults.PHONG_MEAN_DIFFUSE,
                           defaults.PHONG_MEAN_SPECULAR),
                    sigmas=(defaults.PHONG_SIGMA_AMBIENT,
                            defaults.PHONG_SIGMA_DIFFUSE,
                            defaults.PHONG_SIGMA_SPECULAR),
                    shininess: float = defaults.PHONG_SHININESS) -> LightingParams:
    """Reflectance constants around the configured means; frontal light direction."""
    ka, kd, ks = (max(m + s * rng.standard_normal(), 0.0)
                  for m, s in zip(means, sigmas))
    # uniform area measure on the z > 0 hemisphere
    z = rng.uniform(0.0, 1.0)
    phi = rng.uniform(0.0, 2.0 * np.pi)
    r = np.sqrt(max(1.0 - z * z, 0.0))
    light = np.array([r * np.cos(phi), r * np.sin(phi), z])
    light /= np.linalg.norm(light)
    return LightingParams(ka, kd, ks, shininess, light)


def rotation_from_euler(yaw: float, pitch: float, roll: float) -> np.ndarray:
    """R = Rz(roll) @ Rx(pitch) @ Ry(yaw), angles in radians."""
    cy, sy = np.cos(yaw), np.sin(yaw)
    cp, sp = np.cos(pitch), np.sin(pitch)
    cr, sr = np.cos(roll), np.sin(roll)
    ry = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
    rx = np.array([[1, 0, 0], [0, cp, -sp], [0, sp, cp]])
    rz = np.array([[cr, -sr, 0], [sr, cr, 0], [0, 0, 1]])
    return rz @ rx @ ry


def nominal_focal(mesh: Mesh, image_height: int,
                  fill_frac: float = defaults.POSE_FILL_FRAC) -> float:
    """Scale at which the mesh spans `fill_frac` of the image height."""
    extent = mesh.vertices[:, 1].max() - mesh.vertices[:, 1].min()
    if extent <= 0:
        raise ValueError("mesh has no vertical extent")
    return fill_frac * image_height / extent


def face_width_of(mesh: Mesh) -> float:
    return float(mesh.vertices[:, 0].max() - mesh.vertices[:, 0].min())


def sample_pose(rng: np.random.Generator,
                f0: float,
                face_width: float,
                rot_sigma_deg: float = defaults.POSE_ROTATION_SIGMA_DEG,
                trans_frac: float = defaults.POSE_TRANSLATION_FRAC,
                scale_frac: float = defaults.POSE_SCALE_FRAC) -> PoseParams:
    """Near-frontal pose: normal Euler angles, small translation, scale jitter."""
    sigma = np.deg2rad(rot_sigma_deg)
    yaw, pitch, roll = sigma * rng.standard_normal(3)
    r = rotation_from_euler(yaw, pitch, roll)
    t = np.zeros(3)
    t[:2] = trans_frac * face_width * rng.standard_normal(2)
    f = f0 * (1.0 + scale_frac * rng.standard_normal())
    f = max(f, 1e-3 * f0)
    return PoseParams(f, r, t)


def luminance(rgb: np.ndarray) -> np.ndarray:
    """Rec.601 grayscale conversion of an (..., 3) image."""
    return rgb @ np.array([0.299, 0.587, 0.114])
