"""Linear UV-texture space, texture application, and image metrics.

Texture images are real-valued RGB arrays in [0, 1]; the linear model shares
the PCA kernel used for shape. Texture application binds an image to a mesh
with bilinear, half-texel-centered, clamp-to-edge sampling.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np
from PIL import Image

from bipar import pca
from bipar.mesh import Mesh, MeshError


@dataclass(frozen=True)
class TextureImage:
    """Row-major RGB image with float64 channels in [0, 1]."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.ascontiguousarray(np.asarray(self.pixels, dtype=np.float64))
        if px.ndim != 3 or px.shape[2] != 3:
            raise ValueError(f"pixels must be (H, W, 3), got {px.shape}")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def to_rgb8(self) -> np.ndarray:
        return np.clip(np.rint(self.pixels * 255.0), 0, 255).astype(np.uint8)


def save_png(tex: TextureImage, path) -> None:
    Image.fromarray(tex.to_rgb8(), mode="RGB").save(path, format="PNG")


def load_png(path) -> TextureImage:
    img = Image.open(path).convert("RGB")
    return TextureImage(np.asarray(img, dtype=np.float64) / 255.0)


@dataclass(frozen=True)
class TextureModel:
    """Mean image plus orthonormal texel-displacement basis."""

    width: int
    height: int
    basis: pca.LinearBasis

    @property
    def n_components(self) -> int:
        return self.basis.n_components

    @property
    def singular_values(self) -> np.ndarray:
        return self.basis.singular_values

    def mean_image(self) -> TextureImage:
        return TextureImage(self.basis.mean.reshape(self.height, self.width, 3))

    def sigmas(self) -> np.ndarray:
        return self.basis.sigmas()


def fit_texture_pca(images: "list[TextureImage]", n_tex: int) -> TextureModel:
    """PCA over flattened texel channels of same-size images."""
    if len(images) < 2:
        raise ValueError(f"need at least 2 images, got {len(images)}")
    w, h = images[0].width, images[0].height
    for i, img in enumerate(images):
        if (img.width, img.height) != (w, h):
            raise ValueError(f"image {i} is {img.width}x{img.height}, expected {w}x{h}")
    data = np.stack([img.pixels.ravel() for img in images])
    return TextureModel(width=w, height=h, basis=pca.fit_linear_basis(data, n_tex))


def eval_texture(model: TextureModel, coeffs: np.ndarray, clamp: bool = True) -> TextureImage:
    """mean + sum(c_i * component_i), channels clamped to [0, 1] on output."""
    flat = pca.evaluate(model.basis, coeffs)
    if clamp:
        flat = np.clip(flat, 0.0, 1.0)
    return TextureImage(flat.reshape(model.height, model.width, 3))


def project_texture(model: TextureModel, image: TextureImage) -> np.ndarray:
    if (image.width, image.height) != (model.width, model.height):
        raise ValueError(f"image is {image.width}x{image.height}, model expects {model.width}x{model.height}")
    return pca.project(model.basis, image.pixels.ravel())


def sample_bilinear(tex: TextureImage, uv: np.ndarray) -> np.ndarray:
    """Bilinear sample at a UV coordinate.

    Half-texel-centered: uv = ((x + 0.5)/W, (y + 0.5)/H) hits texel (y, x)
    exactly; coordinates outside [0, 1] clamp to the edge texels. v indexes
    rows directly (v = 0 is row 0).
    """
    px = tex.pixels
    h, w = px.shape[:2]
    x = float(uv[0]) * w - 0.5
    y = float(uv[1]) * h - 0.5
    x = min(max(x, 0.0), w - 1.0)
    y = min(max(y, 0.0), h - 1.0)
    x0, y0 = int(math.floor(x)), int(math.floor(y))
    x1, y1 = min(x0 + 1, w - 1), min(y0 + 1, h - 1)
    fx, fy = x - x0, y - y0
    top = (1.0 - fx) * px[y0, x0] + fx * px[y0, x1]
    bot = (1.0 - fx) * px[y1, x0] + fx * px[y1, x1]
    return (1.0 - fy) * top + fy * bot


@dataclass(frozen=True)
class TexturedMesh:
    """A mesh bound to a texture image through its per-vertex UVs."""

    mesh: Mesh
    texture: TextureImage

    def sample_at_vertex(self, i: int) -> np.ndarray:
        return sample_bilinear(self.texture, self.mesh.uvs[i])


def apply_texture(mesh: Mesh, tex: TextureImage) -> TexturedMesh:
    """Bind a texture image to a UV-carrying mesh."""
    if not mesh.has_uvs:
        raise MeshError("mesh has no UVs to bind a texture to")
    if tex.width == 0 or tex.height == 0:
        raise ValueError("texture is empty")
    return TexturedMesh(mesh=mesh, texture=tex)


def texture_metrics(a: TextureImage, b: TextureImage) -> tuple[float, float]:
    """(MSE, PSNR) over channels with peak 1.0; identical images report
    PSNR = +inf."""
    if a.pixels.shape != b.pixels.shape:
        raise ValueError(f"dimension mismatch: {a.pixels.shape} vs {b.pixels.shape}")
    diff = a.pixels - b.pixels
    mse = float(np.mean(diff * diff))
    psnr = math.inf if mse == 0.0 else 10.0 * math.log10(1.0 / mse)
    return mse, psnr


_HEADER_NAME = "texture_model.json"
_COMPONENTS_NAME = "texture_components.bin"
_MEAN_NAME = "texture_mean.bin"


def save_texture_model(model: TextureModel, dirpath) -> None:
    """Persist like the shape model: flat little-endian float64 binaries plus
    a JSON header (mean stays real-valued, not quantized to PNG)."""
    os.makedirs(dirpath, exist_ok=True)
    model.basis.mean.astype("<f8").tofile(os.path.join(dirpath, _MEAN_NAME))
    model.basis.components.astype("<f8").tofile(os.path.join(dirpath, _COMPONENTS_NAME))
    header = {
        "n_tex": model.n_components,
        "width": model.width,
        "height": model.height,
        "singular_values": model.singular_values.tolist(),
        "sample_count": model.basis.sample_count,
        "clamped": model.basis.clamped,
    }
    with open(os.path.join(dirpath, _HEADER_NAME), "w") as fh:
        json.dump(header, fh)


def load_texture_model(dirpath) -> TextureModel:
    with open(os.path.join(dirpath, _HEADER_NAME)) as fh:
        header = json.load(fh)
    w, h, n = header["width"], header["height"], header["n_tex"]
    dims = w * h * 3
    mean = np.fromfile(os.path.join(dirpath, _MEAN_NAME), dtype="<f8")
    comps = np.fromfile(os.path.join(dirpath, _COMPONENTS_NAME), dtype="<f8")
    if mean.size != dims or comps.size != n * dims:
        raise ValueError("texture model binary sizes do not match the header")
    basis = pca.LinearBasis(
        mean=mean,
        components=comps.reshape(n, dims),
        singular_values=np.asarray(header["singular_values"], dtype=np.float64),
        sample_count=int(header.get("sample_count", 2)),
        clamped=bool(header.get("clamped", False)),
    )
    return TextureModel(width=w, height=h, basis=basis)
