import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sparseface.gallery import Gallery, SynthSpec, synth_gallery
from sparseface.numcore import make_rng, nuclear_norm
from sparseface.rpca import (
    SpectrumMode,
    numerical_rank,
    read_spectrum_csv,
    rpca,
    spectrum,
    whole_spectrum,
    write_spectrum_csv,
)


def planted(seed, shape, rank=2, frac=0.05, mag=10.0):
    rng = make_rng(seed)
    l0 = rng.standard_normal((shape[0], rank)) @ rng.standard_normal((rank, shape[1]))
    s0 = np.zeros(shape)
    k = int(round(frac * l0.size))
    s0.flat[rng.choice(l0.size, k, replace=False)] = mag * rng.choice([-1, 1], k)
    return l0, s0


def test_zero_matrix():
    r = rpca(np.zeros((4, 3)))
    assert r.converged and not r.l.any() and not r.s.any()


def test_rank_one_has_no_sparse_part():
    rng = make_rng(1)
    d = np.outer(rng.standard_normal(12), rng.standard_normal(9))
    r = rpca(d)
    assert r.converged
    assert np.max(np.abs(r.s)) <= 1e-6
    assert np.linalg.norm(r.l - d) <= 1e-6 * np.linalg.norm(d)
    # the all-L split is no more expensive than moving d into S entirely
    lam = 1 / np.sqrt(12)
    assert nuclear_norm(d) <= lam * np.abs(d).sum()


def test_planted_low_rank_plus_spikes():
    l0, s0 = planted(2, (50, 20))
    r = rpca(l0 + s0)
    assert r.converged
    assert np.linalg.norm(r.l - l0) / np.linalg.norm(l0) <= 1e-4


def test_rejects_nonfinite_and_bad_lambda():
    with pytest.raises(ValueError):
        rpca(np.array([[np.inf]]))
    with pytest.raises(ValueError):
        rpca(np.ones((2, 2)), lam=0.0)


@given(st.integers(0, 10**5))
def test_reconstruction_on_convergence(seed):
    l0, s0 = planted(seed, (15, 10), rank=1, frac=0.05)
    d = l0 + s0
    r = rpca(d)
    if r.converged:
        assert np.linalg.norm(r.l + r.s - d) <= 1e-6 * np.linalg.norm(d)


def test_large_spike_goes_to_sparse_part():
    l0, _ = planted(3, (40, 40), rank=2, frac=0.0)
    d = l0.copy()
    d[5, 7] += 100.0
    r = rpca(d)
    assert abs(r.s[5, 7]) >= 99


def test_determinism():
    l0, s0 = planted(4, (20, 15))
    a, b = rpca(l0 + s0), rpca(l0 + s0)
    assert np.array_equal(a.l, b.l) and np.array_equal(a.s, b.s)


# --- spectra --------------------------------------------------------------

def test_plain_svd_spectrum_has_planted_rank():
    g, _ = synth_gallery(SynthSpec(3, 4, 10, 60, seed=5, tests_per_class=0))
    rep = spectrum(g, SpectrumMode.PLAIN_SVD)
    for sig in rep.per_subject_sigmas:
        assert sig[4] / sig[0] <= 1e-10
    assert rep.mean_sigmas.shape == (10,)
    assert np.all(np.diff(rep.mean_sigmas) <= 1e-12)


def test_single_class_mean_is_its_spectrum():
    g, _ = synth_gallery(SynthSpec(1, 3, 6, 30, seed=6, tests_per_class=0))
    rep = spectrum(g)
    assert np.array_equal(rep.mean_sigmas, rep.per_subject_sigmas[0])


def test_mean_spectrum_bounded_by_classes():
    g, _ = synth_gallery(SynthSpec(4, 3, 8, 40, seed=7, tests_per_class=0, noise_sigma=0.05))
    rep = spectrum(g)
    stack = np.vstack(rep.per_subject_sigmas)
    assert np.all(stack.min(axis=0) <= rep.mean_sigmas + 1e-15)
    assert np.all(rep.mean_sigmas <= stack.max(axis=0) + 1e-15)


def test_spectrum_is_deterministic():
    g, _ = synth_gallery(SynthSpec(2, 2, 6, 30, seed=8, tests_per_class=0, noise_sigma=0.1))
    a, b = spectrum(g, "rpca"), spectrum(g, "rpca")
    assert np.array_equal(a.mean_sigmas, b.mean_sigmas)


def test_whole_spectrum_uses_every_column():
    g, _ = synth_gallery(SynthSpec(3, 2, 5, 30, seed=9, tests_per_class=0))
    rep = whole_spectrum(g)
    assert rep.mean_sigmas.shape == (15,)
    assert numerical_rank(rep.mean_sigmas, 1e-8) == 6


def test_spectrum_csv_round_trip(tmp_path):
    g, _ = synth_gallery(SynthSpec(2, 2, 4, 20, seed=1, tests_per_class=0))
    rep = spectrum(g)
    write_spectrum_csv(rep, tmp_path / "s.csv")
    sig, mode = read_spectrum_csv(tmp_path / "s.csv")
    assert mode is SpectrumMode.PLAIN_SVD
    assert np.array_equal(sig, rep.mean_sigmas)


def test_numerical_rank_examples():
    assert numerical_rank([3.0, 2.0, 1e-9]) == 2
    assert numerical_rank(np.zeros(4)) == 0
    rng = make_rng(10)
    m = rng.standard_normal((30, 7)) @ rng.standard_normal((7, 20))
    assert numerical_rank(np.linalg.svd(m, compute_uv=False), 1e-6) == 7
    with pytest.raises(ValueError):
        numerical_rank([])
