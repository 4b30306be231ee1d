"""Dense numeric substrate shared by the solvers.

Matrices are plain ``numpy`` float64 arrays. Images are column-stacked, so
pixel ``(r, c)`` of an ``h x w`` image lives at index ``c * h + r``
(Fortran order); use :func:`vectorize_image` / :func:`unvectorize_image`
rather than reshaping by hand.

Random streams come from :func:`make_rng`, which wraps numpy's PCG64 bit
generator seeded through a ``SeedSequence``. The same seed (and spawn key)
always yields a bit-identical stream.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

__all__ = [
    "SvdError",
    "SvdFactors",
    "make_rng",
    "vectorize_image",
    "unvectorize_image",
    "svd",
    "soft_threshold",
    "shrink_l2",
    "svt",
    "nuclear_norm",
    "min_norm_lsq",
    "spectral_norm_sq",
    "normalize_columns",
]

DEFAULT_RANK_TOL = 1e-10


class SvdError(RuntimeError):
    """Raised when every LAPACK SVD driver fails to converge."""


@dataclass(frozen=True)
class SvdFactors:
    u: np.ndarray
    sigma: np.ndarray
    vt: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.sigma) @ self.vt


def make_rng(seed: int, *key: int) -> np.random.Generator:
    """PCG64 generator for ``seed``; extra integers select an independent substream."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def vectorize_image(img: np.ndarray) -> np.ndarray:
    return np.asarray(img, dtype=float).ravel(order="F")


def unvectorize_image(v: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    return np.asarray(v).reshape(shape, order="F")


def _check_finite(m: np.ndarray, name: str) -> None:
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")


def svd(m: np.ndarray) -> SvdFactors:
    """Thin SVD with a deterministic sign convention.

    The divide-and-conquer driver is tried first; if LAPACK reports
    non-convergence the QR-iteration driver is used, and if that fails too
    :class:`SvdError` is raised. Each left singular vector is flipped so its
    first nonzero entry is nonnegative (the matching row of ``vt`` flips with
    it).
    """
    m = np.atleast_2d(np.asarray(m, dtype=float))
    _check_finite(m, "matrix")
    last = None
    for driver in ("gesdd", "gesvd"):
        try:
            u, s, vt = scipy.linalg.svd(m, full_matrices=False, lapack_driver=driver)
            break
        except np.linalg.LinAlgError as exc:
            last = exc
    else:
        raise SvdError(f"SVD did not converge for {m.shape} matrix") from last

    # first entry whose magnitude is non-negligible, per column of u
    tiny = 1e-14 * max(1.0, np.abs(u).max(initial=0.0))
    first = np.argmax(np.abs(u) > tiny, axis=0)
    signs = np.sign(u[first, np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    return SvdFactors(u * signs, s, vt * signs[:, None])


def soft_threshold(v: np.ndarray, tau: float) -> np.ndarray:
    """Entrywise prox of ``tau * ||.||_1``."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - tau, 0.0)


def shrink_l2(v: np.ndarray, tau: float) -> np.ndarray:
    """Prox of ``tau * ||.||_2`` (unsquared): block soft-thresholding."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    v = np.asarray(v, dtype=float)
    nv = np.linalg.norm(v)
    if nv <= tau:
        return np.zeros_like(v)
    return (1.0 - tau / nv) * v


def svt(m: np.ndarray, tau: float) -> np.ndarray:
    """Singular value thresholding, the prox of ``tau * ||.||_*``."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    f = svd(m)
    s = np.maximum(f.sigma - tau, 0.0)
    k = int(np.count_nonzero(s))
    return (f.u[:, :k] * s[:k]) @ f.vt[:k]


def nuclear_norm(m: np.ndarray) -> float:
    return float(np.sum(svd(m).sigma))


def min_norm_lsq(a: np.ndarray, y: np.ndarray, rank_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Minimum-norm least-squares solution via a rank-truncated pseudoinverse.

    Singular values below ``rank_tol * sigma_max`` are treated as zero, so
    underdetermined and rank-deficient systems get the least-norm minimizer.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    y = np.asarray(y, dtype=float)
    if a.shape[0] != y.shape[0]:
        raise ValueError(f"shape mismatch: a has {a.shape[0]} rows, y has {y.shape[0]}")
    f = svd(a)
    # subnormal spectra cannot be inverted without overflow
    if f.sigma.size == 0 or f.sigma[0] < np.finfo(float).tiny:
        return np.zeros(a.shape[1])
    keep = f.sigma > rank_tol * f.sigma[0]
    coef = (f.u[:, keep].T @ y) / f.sigma[keep]
    return f.vt[keep].T @ coef


def spectral_norm_sq(a: np.ndarray, max_iters: int = 500, tol: float = 1e-12) -> float:
    """Largest eigenvalue of ``a.T @ a`` by power iteration.

    The start vector is a fixed-seed Gaussian draw: structured starts such as
    the all-ones vector are exact eigenvectors of common symmetric Gram
    matrices and would lock onto the wrong eigenvalue. Returns a slight
    overestimate (the safe side for step sizes) and falls back to a full SVD
    when the iteration stalls.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    n = a.shape[1]
    v = make_rng(0x5EED).standard_normal(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iters):
        w = a.T @ (a @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            break
        v = w / nw
        if abs(nw - lam) <= tol * nw:
            return float(nw) * (1.0 + 1e-6)
        lam = nw
    # clustered top eigenvalues or an unlucky start: use the exact value
    s = svd(a).sigma
    return float(s[0] ** 2) * (1.0 + 1e-6) if s.size else 0.0


def normalize_columns(a: np.ndarray, names: Sequence[str] | None = None) -> np.ndarray:
    """Scale each column to unit l2 norm; zero columns are an error."""
    a = np.asarray(a, dtype=float)
    norms = np.linalg.norm(a, axis=0)
    bad = np.flatnonzero(norms == 0.0)
    if bad.size:
        where = names[bad[0]] if names is not None else f"column {bad[0]}"
        raise ValueError(f"zero-norm column: {where}")
    return a / norms
