import numpy as np
import pytest

from sparseface.classify import (
    Method,
    MethodTag,
    classify_l2_occlusion,
    classify_l2_plain,
    classify_l2_projected,
    classify_projected,
    classify_src,
    decide,
)
from sparseface.gallery import Gallery, OcclusionBasis, SynthSpec, build_occlusion_basis, synth_gallery
from sparseface.numcore import make_rng, vectorize_image
from sparseface.perturb import corrupt_pixels


@pytest.fixture(scope="module")
def separated():
    return synth_gallery(SynthSpec(4, 3, 6, 80, seed=21, tests_per_class=2))


def orthogonal_gallery(shape=(6, 6), dims=(2, 2, 2), seed=0):
    """Classes span mutually orthogonal subspaces avoiding the first pixel block."""
    m = shape[0] * shape[1]
    q, _ = np.linalg.qr(make_rng(seed).standard_normal((m, sum(dims))))
    blocks, pos = [], 0
    for d in dims:
        blocks.append(q[:, pos:pos + d])
        pos += d
    return Gallery.from_blocks(blocks, list(range(len(dims))), shape)


# --- src ------------------------------------------------------------------

def test_src_training_column(separated):
    g, _ = separated
    y = g.a[:, 8].copy()
    d = classify_src(g, y)
    assert d.label == 1 and d.converged
    assert d.residuals[1] <= 1e-4


def test_single_class_always_wins():
    g, t = synth_gallery(SynthSpec(1, 2, 4, 20, seed=2, tests_per_class=1))
    for method in (classify_src, classify_l2_plain):
        assert method(g, t.y[:, 0]).label == 0


def test_src_survives_thirty_percent_corruption():
    g, t = synth_gallery(SynthSpec(3, 5, 10, 300, seed=3, tests_per_class=1))
    j = t.labels.index(2)
    y = corrupt_pixels(t.y[:, j], 0.3, make_rng(4)).y
    assert classify_src(g, y).label == 2


def test_src_label_invariant_to_scaling(separated):
    g, t = separated
    y = corrupt_pixels(t.y[:, 3], 0.2, make_rng(5)).y
    base = classify_src(g, y).label
    for c in (0.1, 7.0):
        assert classify_src(g, c * y).label == base


def test_src_shape_check(separated):
    g, _ = separated
    with pytest.raises(ValueError):
        classify_src(g, np.ones(3))


# --- l2 -------------------------------------------------------------------

def test_l2_orthogonal_training_column():
    g = orthogonal_gallery()
    d = classify_l2_plain(g, g.a[:, 3])
    assert d.label == 1
    assert d.residuals[1] <= 1e-8


def test_l2_orthogonal_target_ties_to_lowest_id():
    g = orthogonal_gallery()
    f = np.linalg.svd(g.a, full_matrices=True)[0][:, -1]
    d = classify_l2_plain(g, 2.0 * f)
    assert np.allclose(d.coefficients, 0.0, atol=1e-12)
    assert np.allclose(d.residuals, 2.0)
    assert d.label == 0


def test_decide_tie_break():
    assert decide([1.0, 1.0 + 1e-13, 0.5 + 0.5]) == 0
    assert decide([2.0, 1.0, 1.0]) == 1
    assert decide([2.0, 1.0, 1.0 - 1e-6]) == 2


def test_l2w_absorbs_block_occlusion():
    shape = (6, 6)
    w = build_occlusion_basis(shape, (3, 3))
    # gallery orthogonal to W, so a W-block occlusion is absorbed without spoiling x
    rng = make_rng(6)
    raw = rng.standard_normal((36, 6))
    raw -= w.w @ (w.w.T @ raw)
    q, _ = np.linalg.qr(raw)
    g = Gallery.from_blocks([q[:, :2], q[:, 2:4], q[:, 4:]], [0, 1, 2], shape)
    y = g.a[:, 2] + 3.0 * w.w[:, 4]
    d = classify_l2_occlusion(g, w, y)
    assert d.label == 1
    assert np.linalg.norm(y - 3.0 * w.w[:, 4] - g.a[:, 2:4] @ d.coefficients[2:4]) <= 1e-6


def test_l2w_single_tile_grid_and_plain_agree_on_clean_column():
    g = orthogonal_gallery()
    y = g.a[:, 5]
    w = build_occlusion_basis(g.image_shape, (1, 1))
    assert w.w.shape == (36, 1)
    assert classify_l2_occlusion(g, w, y).label == classify_l2_plain(g, y).label == 2


def test_l2w_with_empty_basis_is_plain(separated):
    g, t = separated
    empty = OcclusionBasis(np.zeros((g.a.shape[0], 0)), (0, 0))
    y = t.y[:, 1]
    a, b = classify_l2_occlusion(g, empty, y), classify_l2_plain(g, y)
    assert np.array_equal(a.residuals, b.residuals) and a.label == b.label


def test_l2w_basis_row_mismatch(separated):
    g, t = separated
    with pytest.raises(ValueError):
        classify_l2_occlusion(g, build_occlusion_basis((2, 2), (1, 1)), t.y[:, 0])


def test_residual_slices_cover_coefficients(separated):
    g, t = separated
    x = classify_l2_plain(g, t.y[:, 0]).coefficients
    parts = [x[cr.start:cr.stop] for cr in g.class_ranges]
    assert np.array_equal(np.concatenate(parts), x)


# --- projected and method records -----------------------------------------

def test_projected_identity_matches_full(separated):
    g, t = separated
    y = corrupt_pixels(t.y[:, 5], 0.2, make_rng(7)).y
    full = classify_src(g, y)
    proj = classify_projected(g, y, np.eye(g.a.shape[0]))
    assert proj.label == full.label
    assert np.allclose(proj.residuals, full.residuals, atol=1e-6)
    l2 = classify_l2_projected(g, y, np.eye(g.a.shape[0]))
    assert np.allclose(l2.residuals, classify_l2_plain(g, y).residuals)


def test_method_dispatch(separated):
    g, t = separated
    y = t.y[:, 0]
    assert Method("src").classify(g, y).label == t.labels[0]
    assert Method(MethodTag.L2, name="plain").label == "plain"
    assert Method("l2w", occlusion_grid=(2, 2)).classify(g, y).label == t.labels[0]
    with pytest.raises(ValueError):
        Method("l1")
    no_shape = Gallery(g.a, g.class_ranges)
    with pytest.raises(ValueError):
        Method("l2w").classify(no_shape, y)
