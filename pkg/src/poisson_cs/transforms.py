"""Orthonormal sparsifying bases and the overlapping-patch image pipeline.

Bases are exactly orthonormal (synthesis and analysis are mutual inverses
and preserve the l2 norm), which the reconstruction bound requires.  The
image pipeline vectorizes overlapping square patches, reconstructs each one
independently, and reassembles by averaging every pixel over all patches
covering it.  Grayscale images travel as 8- or 16-bit PGM files.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass

import numpy as np
from scipy.fft import dctn, idctn

from .errors import InvalidParamError, LengthMismatchError

__all__ = [
    "BasisKind",
    "OrthonormalBasis",
    "identity_basis",
    "dct2_basis",
    "PatchGrid",
    "extract_patches",
    "reassemble",
    "read_pgm",
    "write_pgm",
]


class BasisKind(enum.Enum):
    IDENTITY = "identity"
    DCT2 = "dct2"


@dataclass(frozen=True)
class OrthonormalBasis:
    """Synthesis operator x = Psi @ theta and its inverse (analysis).

    ``patch_shape`` is the (h, w) layout of the vectorized signal for the
    2-D DCT basis and None for the identity.
    """

    kind: BasisKind
    dim: int
    patch_shape: tuple[int, int] | None = None

    def synthesize(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.size != self.dim:
            raise LengthMismatchError(f"expected length {self.dim}, got {theta.size}")
        if self.kind is BasisKind.IDENTITY:
            return theta.copy()
        h, w = self.patch_shape
        return idctn(theta.reshape(h, w), norm="ortho").reshape(-1)

    def analyze(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.size != self.dim:
            raise LengthMismatchError(f"expected length {self.dim}, got {x.size}")
        if self.kind is BasisKind.IDENTITY:
            return x.copy()
        h, w = self.patch_shape
        return dctn(x.reshape(h, w), norm="ortho").reshape(-1)

    def matrix(self) -> np.ndarray:
        """Dense Psi; columns are the synthesized canonical coefficients."""
        if self.kind is BasisKind.IDENTITY:
            return np.eye(self.dim)
        psi = np.empty((self.dim, self.dim))
        e = np.zeros(self.dim)
        for j in range(self.dim):
            e[j] = 1.0
            psi[:, j] = self.synthesize(e)
            e[j] = 0.0
        return psi


def identity_basis(dim: int) -> OrthonormalBasis:
    if dim < 1:
        raise InvalidParamError("dim must be >= 1")
    return OrthonormalBasis(kind=BasisKind.IDENTITY, dim=dim)


def dct2_basis(patch_h: int, patch_w: int | None = None) -> OrthonormalBasis:
    """Orthonormal 2-D type-II cosine basis on vectorized h x w patches."""
    patch_w = patch_h if patch_w is None else patch_w
    if patch_h < 1 or patch_w < 1:
        raise InvalidParamError("patch sides must be >= 1")
    return OrthonormalBasis(
        kind=BasisKind.DCT2, dim=patch_h * patch_w, patch_shape=(patch_h, patch_w)
    )


@dataclass(frozen=True)
class PatchGrid:
    """Overlapping-patch layout over an image."""

    image_h: int
    image_w: int
    patch: int = 7
    stride: int = 1

    def __post_init__(self):
        if self.patch > min(self.image_h, self.image_w):
            raise InvalidParamError("patch larger than image")
        if self.stride < 1:
            raise InvalidParamError("stride must be >= 1")

    @property
    def rows(self) -> range:
        return range(0, self.image_h - self.patch + 1, self.stride)

    @property
    def cols(self) -> range:
        return range(0, self.image_w - self.patch + 1, self.stride)

    @property
    def n_patches(self) -> int:
        return len(self.rows) * len(self.cols)


def extract_patches(image, grid: PatchGrid) -> np.ndarray:
    """Vectorized patches, one row per patch, in row-major grid order."""
    image = np.asarray(image, dtype=float)
    if image.shape != (grid.image_h, grid.image_w):
        raise LengthMismatchError(
            f"image shape {image.shape} does not match grid "
            f"({grid.image_h}, {grid.image_w})"
        )
    k = grid.patch
    out = np.empty((grid.n_patches, k * k))
    idx = 0
    for r in grid.rows:
        for c in grid.cols:
            out[idx] = image[r : r + k, c : c + k].reshape(-1)
            idx += 1
    return out


def reassemble(patches_est, grid: PatchGrid) -> np.ndarray:
    """Average overlapping patch estimates back into an image.

    Pixels covered by no patch (possible for stride > 1 near the far edges)
    are left at 0.
    """
    patches_est = np.asarray(patches_est, dtype=float)
    if patches_est.shape != (grid.n_patches, grid.patch * grid.patch):
        raise LengthMismatchError("patch array does not match grid layout")
    k = grid.patch
    acc = np.zeros((grid.image_h, grid.image_w))
    cover = np.zeros((grid.image_h, grid.image_w))
    idx = 0
    for r in grid.rows:
        for c in grid.cols:
            acc[r : r + k, c : c + k] += patches_est[idx].reshape(k, k)
            cover[r : r + k, c : c + k] += 1.0
            idx += 1
    covered = cover > 0.0
    acc[covered] /= cover[covered]
    return acc


def read_pgm(path) -> np.ndarray:
    """Read an 8- or 16-bit PGM (binary P5 or ASCII P2) as a float array."""
    with open(path, "rb") as f:
        data = f.read()
    header = []
    pos = 0
    while len(header) < 4:
        match = re.compile(rb"\s*(?:#[^\n]*\n)*\s*(\S+)").match(data, pos)
        if match is None:
            raise InvalidParamError(f"{path}: truncated PGM header")
        header.append(match.group(1))
        pos = match.end()
    magic, width, height, maxval = header[0], int(header[1]), int(header[2]), int(header[3])
    if magic == b"P5":
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        count = width * height
        img = np.frombuffer(data, dtype=dtype, count=count, offset=pos + 1)
        return img.reshape(height, width).astype(float)
    if magic == b"P2":
        vals = np.array(data[pos:].split(), dtype=float)
        return vals.reshape(height, width)
    raise InvalidParamError(f"{path}: unsupported PGM magic {magic!r}")


def write_pgm(path, image, maxval: int = 255) -> None:
    """Write a float image as binary PGM, clipping and rounding to [0, maxval]."""
    if maxval not in (255, 65535):
        raise InvalidParamError("maxval must be 255 or 65535")
    image = np.asarray(image, dtype=float)
    quant = np.clip(np.rint(image), 0, maxval)
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    with open(path, "wb") as f:
        f.write(f"P5\n{image.shape[1]} {image.shape[0]}\n{maxval}\n".encode())
        f.write(quant.astype(dtype).tobytes())
