"""Seeded test-image perturbations: pixel corruption, block occlusion, projection.

Corrupted pixels and noise-filled blocks take independent uniform values on
``[0, max(y)]``. Texture fills tile a grayscale image over the block, scaled
to the same range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .gallery import GalleryError, read_image
from .numcore import make_rng, unvectorize_image, vectorize_image

__all__ = [
    "Fill",
    "NOISE",
    "Kind",
    "Perturbation",
    "PerturbedImage",
    "parse_fill",
    "corrupt_pixels",
    "occlude_block",
    "occlusion_side",
    "gaussian_projection",
]


def _round_half_up(v: float) -> int:
    return int(math.floor(v + 0.5))


@dataclass(frozen=True)
class Fill:
    texture: str | None = None

    @property
    def label(self) -> str:
        return "noise" if self.texture is None else f"texture:{self.texture}"


NOISE = Fill()


def parse_fill(text: str) -> Fill:
    """``noise`` or ``texture:PATH``."""
    if text == "noise":
        return NOISE
    if text.startswith("texture:") and len(text) > len("texture:"):
        return Fill(text[len("texture:"):])
    raise ValueError(f"fill must be 'noise' or 'texture:PATH', got {text!r}")


class Kind(str, Enum):
    NONE = "none"
    CORRUPT = "corrupt"
    OCCLUDE = "occlude"
    PROJECT = "project"


@dataclass(frozen=True)
class Perturbation:
    """One perturbation level; ``level`` is a fraction, or ``d`` for projections."""

    kind: Kind
    level: float
    fill: Fill = NOISE
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.kind in (Kind.CORRUPT, Kind.OCCLUDE) and not 0.0 <= self.level <= 1.0:
            raise ValueError(f"fraction must lie in [0, 1], got {self.level}")
        if self.kind is Kind.PROJECT and (self.level < 1 or self.level != int(self.level)):
            raise ValueError(f"projection dimension must be a positive integer, got {self.level}")

    def apply(self, y, shape: tuple[int, int] | None = None,
              rng: np.random.Generator | None = None) -> "PerturbedImage":
        rng = rng if rng is not None else make_rng(self.seed)
        if self.kind is Kind.CORRUPT:
            return corrupt_pixels(y, self.level, rng)
        if self.kind is Kind.OCCLUDE:
            if shape is None:
                raise ValueError("block occlusion needs the image shape")
            return occlude_block(y, shape, self.level, self.fill, rng)
        if self.kind is Kind.PROJECT:
            y = np.asarray(y, dtype=float)
            phi = gaussian_projection(y.shape[0], int(self.level), rng)
            return PerturbedImage(phi @ y, np.zeros(0, dtype=int), phi)
        return PerturbedImage(np.array(y, dtype=float), np.zeros(0, dtype=int))


@dataclass
class PerturbedImage:
    y: np.ndarray
    true_support: np.ndarray
    phi: np.ndarray | None = field(default=None, repr=False)


def _fill_range(y: np.ndarray) -> tuple[float, float]:
    hi = float(y.max()) if y.size else 0.0
    return min(0.0, hi), max(0.0, hi)


def corrupt_pixels(y, fraction: float, rng: np.random.Generator) -> PerturbedImage:
    """Replace ``round(fraction * len(y))`` random pixels with uniform noise."""
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must lie in [0, 1], got {fraction}")
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    k = min(_round_half_up(fraction * n), n)
    out = y.copy()
    idx = np.sort(rng.choice(n, size=k, replace=False)) if k else np.zeros(0, dtype=int)
    lo, hi = _fill_range(y)
    out[idx] = rng.uniform(lo, hi, size=k)
    return PerturbedImage(out, idx)


def occlusion_side(shape: tuple[int, int], fraction: float) -> int:
    h, w = shape
    return min(_round_half_up(math.sqrt(fraction * h * w)), h, w)


def _texture_patch(path: str, side: int, scale: float) -> np.ndarray:
    try:
        tex = read_image(path)
    except GalleryError as exc:
        raise ValueError(f"texture unreadable: {exc}") from exc
    reps = (-(-side // tex.shape[0]), -(-side // tex.shape[1]))
    return np.tile(tex, reps)[:side, :side] * scale


def occlude_block(y, shape: tuple[int, int], fraction: float, fill: Fill,
                  rng: np.random.Generator) -> PerturbedImage:
    """Overwrite a random square block covering about ``fraction`` of the image.

    The block side is ``round(sqrt(fraction * h * w))`` clamped to the image,
    and the block is placed uniformly at random fully inside the image.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must lie in [0, 1], got {fraction}")
    y = np.asarray(y, dtype=float)
    h, w = shape
    if h * w != y.shape[0]:
        raise ValueError(f"image shape {shape} does not match {y.shape[0]} pixels")
    side = occlusion_side(shape, fraction)
    if side == 0:
        return PerturbedImage(y.copy(), np.zeros(0, dtype=int))
    r0 = int(rng.integers(0, h - side + 1))
    c0 = int(rng.integers(0, w - side + 1))
    lo, hi = _fill_range(y)
    if fill.texture is None:
        patch = rng.uniform(lo, hi, size=(side, side))
    else:
        patch = _texture_patch(fill.texture, side, hi)
    img = unvectorize_image(y, shape).copy()
    img[r0:r0 + side, c0:c0 + side] = patch
    mask = np.zeros(shape, dtype=bool)
    mask[r0:r0 + side, c0:c0 + side] = True
    return PerturbedImage(vectorize_image(img), np.flatnonzero(vectorize_image(mask)))


def gaussian_projection(m: int, d: int, rng: np.random.Generator, identity: bool = False) -> np.ndarray:
    """``d x m`` matrix of iid ``N(0, 1/d)`` entries; ``identity=True`` returns ``I`` (needs ``d == m``)."""
    if not 1 <= d <= m:
        raise ValueError(f"need 1 <= d <= m, got d={d}, m={m}")
    if identity:
        if d != m:
            raise ValueError("identity projection needs d == m")
        return np.eye(m)
    return rng.standard_normal((d, m)) / math.sqrt(d)
