"""Labeled training dictionaries, image ingestion and the occlusion basis."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Hashable, Sequence

import numpy as np

from .numcore import make_rng, normalize_columns, vectorize_image

__all__ = [
    "GalleryError",
    "ClassRange",
    "Gallery",
    "TestSet",
    "OcclusionBasis",
    "SynthSpec",
    "IMAGE_SUFFIXES",
    "read_image",
    "resize_bilinear",
    "load_images",
    "load_gallery",
    "load_testset",
    "synth_gallery",
    "synth_bases",
    "build_occlusion_basis",
    "class_subvector",
    "save_npz",
    "load_npz",
]

IMAGE_SUFFIXES = (".pgm", ".png")


class GalleryError(ValueError):
    """Bad gallery input; the message names the offending path when there is one."""


@dataclass(frozen=True)
class ClassRange:
    class_id: Hashable
    start: int
    count: int

    @property
    def stop(self) -> int:
        return self.start + self.count


@dataclass(frozen=True)
class Gallery:
    """Dictionary ``a = [A_1 | ... | A_k]`` with unit-norm columns."""

    a: np.ndarray
    class_ranges: tuple[ClassRange, ...]
    image_shape: tuple[int, int] | None = None

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise GalleryError(f"dictionary must be a nonempty matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise GalleryError("dictionary contains non-finite entries")
        pos = 0
        ids = set()
        for cr in self.class_ranges:
            if cr.start != pos or cr.count < 1:
                raise GalleryError(f"class ranges must be contiguous and nonempty (at {cr.class_id!r})")
            if cr.class_id in ids:
                raise GalleryError(f"duplicate class id {cr.class_id!r}")
            ids.add(cr.class_id)
            pos = cr.stop
        if pos != a.shape[1]:
            raise GalleryError(f"class ranges cover {pos} columns, dictionary has {a.shape[1]}")
        if not np.allclose(np.linalg.norm(a, axis=0), 1.0, rtol=0, atol=1e-10):
            raise GalleryError("dictionary columns must have unit l2 norm")
        if self.image_shape is not None and self.image_shape[0] * self.image_shape[1] != a.shape[0]:
            raise GalleryError(f"image shape {self.image_shape} does not match {a.shape[0]} pixels")
        a.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "class_ranges", tuple(self.class_ranges))

    @classmethod
    def from_blocks(cls, blocks: Sequence[np.ndarray], class_ids: Sequence[Hashable] | None = None,
                    image_shape: tuple[int, int] | None = None, normalize: bool = True) -> "Gallery":
        if class_ids is None:
            class_ids = list(range(len(blocks)))
        ranges, pos = [], 0
        for cid, b in zip(class_ids, blocks):
            b = np.atleast_2d(b)
            ranges.append(ClassRange(cid, pos, b.shape[1]))
            pos += b.shape[1]
        a = np.hstack(blocks)
        if normalize:
            a = normalize_columns(a)
        return cls(a, tuple(ranges), image_shape)

    @property
    def n_pixels(self) -> int:
        return self.a.shape[0]

    @property
    def class_ids(self) -> list:
        return [cr.class_id for cr in self.class_ranges]

    def range_of(self, class_id: Hashable) -> ClassRange:
        for cr in self.class_ranges:
            if cr.class_id == class_id:
                return cr
        raise KeyError(f"unknown class id {class_id!r}")

    def block(self, class_id: Hashable) -> np.ndarray:
        cr = self.range_of(class_id)
        return self.a[:, cr.start:cr.stop]

    def column_labels(self) -> list:
        return [cr.class_id for cr in self.class_ranges for _ in range(cr.count)]


@dataclass(frozen=True)
class TestSet:
    """Held-out test vectors (columns of ``y``) with ground-truth labels."""

    __test__ = False  # not a pytest class

    y: np.ndarray
    labels: tuple
    image_shape: tuple[int, int] | None = None

    def __len__(self) -> int:
        return self.y.shape[1]

    def __iter__(self):
        for j in range(self.y.shape[1]):
            yield self.y[:, j], self.labels[j]


@dataclass(frozen=True)
class OcclusionBasis:
    w: np.ndarray
    grid: tuple[int, int]


@dataclass(frozen=True)
class SynthSpec:
    """Union-of-subspaces gallery generator settings.

    ``class_similarity`` in ``[0, 1)`` mixes a common Gaussian center into
    every class's generating matrix before orthonormalization, which makes
    class subspaces close to one another (as face subspaces are). ``0`` draws
    each class basis independently.
    """

    n_classes: int
    subspace_dim: int
    images_per_class: int
    ambient_dim: int
    noise_sigma: float = 0.0
    seed: int = 0
    tests_per_class: int = 5
    class_similarity: float = 0.0
    image_shape: tuple[int, int] | None = None

    def __post_init__(self):
        if min(self.n_classes, self.subspace_dim, self.images_per_class, self.ambient_dim) < 1:
            raise GalleryError("synthetic gallery dimensions must be positive")
        if not self.subspace_dim <= self.images_per_class <= self.ambient_dim:
            raise GalleryError("need subspace_dim <= images_per_class <= ambient_dim")
        if self.noise_sigma < 0:
            raise GalleryError("noise_sigma must be nonnegative")
        if self.tests_per_class < 0:
            raise GalleryError("tests_per_class must be nonnegative")
        if not 0.0 <= self.class_similarity < 1.0:
            raise GalleryError("class_similarity must lie in [0, 1)")
        if self.image_shape is not None and self.image_shape[0] * self.image_shape[1] != self.ambient_dim:
            raise GalleryError(f"image_shape {self.image_shape} must multiply to ambient_dim {self.ambient_dim}")

    def resolved_shape(self) -> tuple[int, int]:
        if self.image_shape is not None:
            return tuple(self.image_shape)
        return _near_square(self.ambient_dim)


def _near_square(n: int) -> tuple[int, int]:
    # h >= w, h * w == n, as square as possible
    for w in range(int(math.isqrt(n)), 0, -1):
        if n % w == 0:
            return n // w, w
    return n, 1


# ---------------------------------------------------------------------------
# image files


def read_image(path: str | Path) -> np.ndarray:
    """8-bit grayscale image as floats in ``[0, 1]``."""
    from PIL import Image

    path = Path(path)
    try:
        with Image.open(path) as im:
            if im.mode not in ("L", "1"):
                raise GalleryError(f"{path}: expected a grayscale image, got mode {im.mode}")
            arr = np.asarray(im.convert("L"), dtype=float)
    except GalleryError:
        raise
    except Exception as exc:  # PIL raises a zoo of types for unreadable files
        raise GalleryError(f"{path}: cannot read image ({exc})") from exc
    return arr / 255.0


def resize_bilinear(img: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Bilinear resize with half-pixel centers and no antialias prefilter."""
    img = np.asarray(img, dtype=float)
    h, w = img.shape
    oh, ow = shape
    if (oh, ow) == (h, w):
        return img.copy()

    def axis(n_in, n_out):
        src = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
        src = np.clip(src, 0.0, n_in - 1)
        i0 = np.floor(src).astype(int)
        i1 = np.minimum(i0 + 1, n_in - 1)
        return i0, i1, src - i0

    r0, r1, fr = axis(h, oh)
    c0, c1, fc = axis(w, ow)
    top = img[r0][:, c0] * (1 - fc) + img[r0][:, c1] * fc
    bot = img[r1][:, c0] * (1 - fc) + img[r1][:, c1] * fc
    return top * (1 - fr)[:, None] + bot * fr[:, None]


def _class_dirs(root: Path) -> list[Path]:
    if not root.is_dir():
        raise GalleryError(f"{root}: not a directory")
    dirs = sorted((p for p in root.iterdir() if p.is_dir()), key=lambda p: p.name)
    if not dirs:
        raise GalleryError(f"{root}: no class subdirectories")
    return dirs


def load_images(root: str | Path, resize_to: tuple[int, int] | None = None):
    """Read ``root/<class_id>/<image>`` into raw ``[0, 1]`` columns.

    Returns ``(matrix, labels, files, image_shape)``. Classes are ordered by
    sorted directory name and files by sorted filename, so the result does
    not depend on filesystem enumeration order.
    """
    root = Path(root)
    cols, labels, files = [], [], []
    shape = tuple(resize_to) if resize_to is not None else None
    for d in _class_dirs(root):
        imgs = sorted((p for p in d.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES), key=lambda p: p.name)
        if not imgs:
            raise GalleryError(f"{d}: empty class directory")
        for p in imgs:
            img = read_image(p)
            if resize_to is not None:
                img = resize_bilinear(img, resize_to)
            if shape is None:
                shape = img.shape
            elif img.shape != shape:
                raise GalleryError(f"{p}: image is {img.shape[0]}x{img.shape[1]}, expected {shape[0]}x{shape[1]}")
            cols.append(vectorize_image(img))
            labels.append(d.name)
            files.append(p)
    return np.column_stack(cols), labels, files, shape


def load_gallery(root_path: str | Path, resize_to: tuple[int, int] | None = None) -> Gallery:
    m, labels, files, shape = load_images(root_path, resize_to)
    norms = np.linalg.norm(m, axis=0)
    if np.any(norms == 0.0):
        raise GalleryError(f"{files[int(np.argmin(norms))]}: zero-norm column")
    ranges, start = [], 0
    for cid in dict.fromkeys(labels):
        n = labels.count(cid)
        ranges.append(ClassRange(cid, start, n))
        start += n
    return Gallery(m / norms, tuple(ranges), shape)


def load_testset(root_path: str | Path, resize_to: tuple[int, int] | None = None) -> TestSet:
    """Same layout as :func:`load_gallery`; vectors are left unnormalized."""
    m, labels, _, shape = load_images(root_path, resize_to)
    return TestSet(m, tuple(labels), shape)


# ---------------------------------------------------------------------------
# synthetic galleries


def _synth(spec: SynthSpec):
    rng = make_rng(spec.seed)
    m, d = spec.ambient_dim, spec.subspace_dim
    sim = spec.class_similarity
    center = rng.standard_normal((m, d)) if sim > 0 else None
    bases, blocks, tests, labels = [], [], [], []
    for c in range(spec.n_classes):
        g = rng.standard_normal((m, d))
        if center is not None:
            g = math.sqrt(sim) * center + math.sqrt(1.0 - sim) * g
        q, _ = np.linalg.qr(g)
        bases.append(q)
        train = q @ rng.standard_normal((d, spec.images_per_class))
        if spec.noise_sigma > 0:
            train += spec.noise_sigma * rng.standard_normal(train.shape)
        blocks.append(train)
        if spec.tests_per_class:
            t = q @ rng.standard_normal((d, spec.tests_per_class))
            if spec.noise_sigma > 0:
                t += spec.noise_sigma * rng.standard_normal(t.shape)
            tests.append(t / np.linalg.norm(t, axis=0))
            labels.extend([c] * spec.tests_per_class)
    return bases, blocks, tests, labels


def synth_gallery(spec: SynthSpec) -> tuple[Gallery, TestSet]:
    """Union-of-subspaces gallery plus held-out test vectors.

    Training columns are ``basis @ coeffs + noise_sigma * noise`` and are then
    l2-normalized. Test vectors come from the same subspaces (with the same
    dense noise level) and are scaled to unit norm.
    """
    _, blocks, tests, labels = _synth(spec)
    shape = spec.resolved_shape()
    gallery = Gallery.from_blocks(blocks, list(range(spec.n_classes)), shape)
    y = np.hstack(tests) if tests else np.zeros((spec.ambient_dim, 0))
    return gallery, TestSet(y, tuple(labels), shape)


def synth_bases(spec: SynthSpec) -> list[np.ndarray]:
    """Orthonormal generating bases behind :func:`synth_gallery` for ``spec``."""
    return _synth(spec)[0]


# ---------------------------------------------------------------------------
# occlusion basis


def build_occlusion_basis(image_shape: tuple[int, int], grid: tuple[int, int]) -> OcclusionBasis:
    """Normalized indicator columns of a ``grid`` tiling of the image.

    Tiles have ``h // gr`` rows and ``w // gc`` columns; the last tile in each
    direction absorbs the remainder. Columns are ordered row-of-tiles major.
    """
    h, w = image_shape
    gr, gc = grid
    if gr < 1 or gc < 1:
        raise GalleryError(f"occlusion grid must be positive, got {grid}")
    if gr > h or gc > w:
        raise GalleryError(f"grid {grid} is finer than the {h}x{w} image")
    rb = [i * (h // gr) for i in range(gr)] + [h]
    cb = [j * (w // gc) for j in range(gc)] + [w]
    cols = []
    for i in range(gr):
        for j in range(gc):
            tile = np.zeros((h, w))
            tile[rb[i]:rb[i + 1], cb[j]:cb[j + 1]] = 1.0
            v = vectorize_image(tile)
            cols.append(v / np.linalg.norm(v))
    return OcclusionBasis(np.column_stack(cols), (gr, gc))


def class_subvector(g: Gallery, x: np.ndarray, class_id: Hashable) -> np.ndarray:
    x = np.asarray(x)
    if x.shape[0] != g.a.shape[1]:
        raise ValueError(f"coefficient vector has length {x.shape[0]}, gallery has {g.a.shape[1]} columns")
    cr = g.range_of(class_id)
    return x[cr.start:cr.stop]


# ---------------------------------------------------------------------------
# on-disk synthetic datasets


def save_npz(path: str | Path, gallery: Gallery, tests: TestSet | None = None) -> None:
    ids = np.array([str(c) for c in gallery.class_ids])
    counts = np.array([cr.count for cr in gallery.class_ranges])
    payload = dict(a=gallery.a, class_ids=ids, counts=counts,
                   image_shape=np.array(gallery.image_shape or (0, 0)))
    if tests is not None:
        payload.update(test_y=tests.y, test_labels=np.array([str(l) for l in tests.labels]))
    try:
        np.savez(path, **payload)
    except OSError as exc:
        raise GalleryError(f"{path}: cannot write ({exc})") from exc


def load_npz(path: str | Path) -> tuple[Gallery, TestSet | None]:
    try:
        with np.load(path, allow_pickle=False) as z:
            data = {k: z[k] for k in z.files}
    except (OSError, ValueError) as exc:
        raise GalleryError(f"{path}: cannot read ({exc})") from exc
    shape = tuple(int(v) for v in data["image_shape"])
    shape = None if shape == (0, 0) else shape
    ids = [str(c) for c in data["class_ids"]]
    ranges, pos = [], 0
    for cid, n in zip(ids, data["counts"]):
        ranges.append(ClassRange(cid, pos, int(n)))
        pos += int(n)
    g = Gallery(data["a"], tuple(ranges), shape)
    t = None
    if "test_y" in data:
        t = TestSet(data["test_y"], tuple(str(l) for l in data["test_labels"]), shape)
    return g, t
