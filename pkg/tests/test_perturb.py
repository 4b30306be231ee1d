import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from PIL import Image

from sparseface.numcore import make_rng, unvectorize_image
from sparseface.perturb import (
    Fill,
    Kind,
    Perturbation,
    corrupt_pixels,
    gaussian_projection,
    occlude_block,
    occlusion_side,
    parse_fill,
)

NOISE = Fill()


def image(n=100, seed=0):
    return make_rng(seed).uniform(0.1, 1.0, n)


def test_corrupt_fraction_zero_and_one():
    y = image()
    p = corrupt_pixels(y, 0.0, make_rng(1))
    assert np.array_equal(p.y, y) and p.true_support.size == 0
    p = corrupt_pixels(y, 1.0, make_rng(1))
    assert np.array_equal(p.true_support, np.arange(100))


def test_corrupt_half_is_counted_and_reproducible():
    y = image()
    a = corrupt_pixels(y, 0.5, make_rng(2))
    b = corrupt_pixels(y, 0.5, make_rng(2))
    assert a.true_support.size == 50
    assert np.array_equal(a.y, b.y) and np.array_equal(a.true_support, b.true_support)


def test_corrupt_rejects_bad_fraction():
    with pytest.raises(ValueError):
        corrupt_pixels(image(), 1.5, make_rng(0))


@given(st.floats(0, 1), st.integers(0, 10**6))
def test_corruption_support_and_range(frac, seed):
    y = image(200, seed % 7)
    p = corrupt_pixels(y, frac, make_rng(seed))
    assert p.true_support.size == int(np.floor(frac * 200 + 0.5))
    changed = np.flatnonzero(p.y != y)
    if p.true_support.size:
        agree = np.isin(p.true_support, changed).mean()
        assert agree >= 0.99
    assert set(changed) <= set(p.true_support)
    filled = p.y[p.true_support]
    assert np.all((filled >= 0) & (filled <= y.max()))


def test_occlusion_zero_is_identity():
    y = image(36)
    p = occlude_block(y, (6, 6), 0.0, NOISE, make_rng(0))
    assert np.array_equal(p.y, y) and p.true_support.size == 0


def test_full_occlusion_covers_image():
    y = image(36)
    p = occlude_block(y, (6, 6), 1.0, NOISE, make_rng(0))
    assert np.array_equal(p.true_support, np.arange(36))


def test_thirty_percent_on_thirty_by_thirty():
    assert occlusion_side((30, 30), 0.3) == 16
    p = occlude_block(image(900), (30, 30), 0.3, NOISE, make_rng(3))
    mask = unvectorize_image(np.isin(np.arange(900), p.true_support), (30, 30))
    rows, cols = np.flatnonzero(mask.any(axis=1)), np.flatnonzero(mask.any(axis=0))
    assert rows.size == 16 and cols.size == 16 and mask.sum() == 256
    assert np.all(np.diff(rows) == 1) and np.all(np.diff(cols) == 1)


@given(st.integers(2, 12), st.integers(2, 12), st.floats(0, 1), st.integers(0, 10**6))
def test_occlusion_is_rectangle_in_range(h, w, frac, seed):
    y = make_rng(seed).uniform(0.1, 1.0, h * w)
    p = occlude_block(y, (h, w), frac, NOISE, make_rng(seed))
    side = occlusion_side((h, w), frac)
    mask = unvectorize_image(np.isin(np.arange(h * w), p.true_support), (h, w))
    assert mask.sum() == side * side
    if side:
        r, c = np.nonzero(mask)
        assert r.max() - r.min() + 1 == side and c.max() - c.min() + 1 == side
    filled = p.y[p.true_support]
    assert np.all((filled >= 0) & (filled <= y.max()))


def test_texture_fill(tmp_path):
    tex = tmp_path / "t.png"
    Image.fromarray(np.array([[0, 255], [255, 0]], dtype=np.uint8)).save(tex)
    y = np.full(16, 0.5)
    p = occlude_block(y, (4, 4), 0.25, parse_fill(f"texture:{tex}"), make_rng(0))
    assert p.true_support.size == 4
    assert sorted(p.y[p.true_support]) == [0.0, 0.0, 0.5, 0.5]


def test_parse_fill():
    assert parse_fill("noise") == NOISE
    assert parse_fill("texture:a.png").texture == "a.png"
    with pytest.raises(ValueError):
        parse_fill("stripes")


def test_projection_identity_and_determinism():
    assert np.array_equal(gaussian_projection(5, 5, make_rng(0), identity=True), np.eye(5))
    a = gaussian_projection(500, 30, make_rng(1))
    assert np.array_equal(a, gaussian_projection(500, 30, make_rng(1)))
    with pytest.raises(ValueError):
        gaussian_projection(5, 6, make_rng(0))
    with pytest.raises(ValueError):
        gaussian_projection(5, 3, make_rng(0), identity=True)


def test_projection_entry_variance():
    phi = gaussian_projection(500, 30, make_rng(4))
    assert phi.size >= 10**4
    assert abs(phi.var() * 30 - 1.0) <= 0.15


def test_perturbation_records():
    y = image(16)
    with pytest.raises(ValueError):
        Perturbation(Kind.CORRUPT, 2.0)
    with pytest.raises(ValueError):
        Perturbation(Kind.PROJECT, 2.5)
    with pytest.raises(ValueError):
        Perturbation("occlude", 0.2).apply(y)
    out = Perturbation("project", 4).apply(y, rng=make_rng(0))
    assert out.y.shape == (4,) and out.phi.shape == (4, 16)
    a = Perturbation("corrupt", 0.25, seed=3).apply(y)
    assert np.array_equal(a.y, Perturbation("corrupt", 0.25, seed=3).apply(y).y)
