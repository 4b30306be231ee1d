"""Robust PCA (principal component pursuit) and per-subject spectra."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from .gallery import Gallery
from .numcore import soft_threshold, svd, svt
from .solvers import RPCA_CONFIG, SolverConfig

__all__ = [
    "RpcaResult",
    "SpectrumMode",
    "SpectrumReport",
    "rpca",
    "spectrum",
    "whole_spectrum",
    "numerical_rank",
    "write_spectrum_csv",
    "read_spectrum_csv",
]

log = logging.getLogger(__name__)


@dataclass
class RpcaResult:
    l: np.ndarray
    s: np.ndarray
    iters: int
    converged: bool
    residual: float = 0.0


def rpca(d, lam: float | None = None, cfg: SolverConfig | None = None) -> RpcaResult:
    """Principal component pursuit ``min ||L||_* + lam ||S||_1  s.t.  D = L + S``.

    Inexact ALM: singular-value thresholding for ``L``, soft thresholding for
    ``S``, a multiplier ascent step and a geometrically growing penalty.
    ``lam`` defaults to ``1 / sqrt(max(m, n))``; ``cfg`` defaults to
    :data:`~sparseface.solvers.RPCA_CONFIG`. Stops when
    ``||D - L - S||_F <= tol_primal * ||D||_F``.
    """
    d = np.atleast_2d(np.asarray(d, dtype=float))
    if not np.all(np.isfinite(d)):
        raise ValueError("data matrix contains non-finite entries")
    cfg = cfg or RPCA_CONFIG
    m, n = d.shape
    if lam is None:
        lam = 1.0 / np.sqrt(max(m, n))
    if lam <= 0:
        raise ValueError("lambda must be positive")
    nd = np.linalg.norm(d)
    if nd == 0.0:
        return RpcaResult(np.zeros_like(d), np.zeros_like(d), 0, True)

    spec = svd(d).sigma[0]
    mu = cfg.mu0 if cfg.mu0 is not None else 1.25 / spec
    mu_max = mu * cfg.mu_max_factor
    # dual start scaled into the unit ball of the dual norm
    y = d / max(spec, np.abs(d).max() / lam)
    l = np.zeros_like(d)
    s = np.zeros_like(d)
    converged = False
    it = 0
    res = np.inf
    for it in range(1, cfg.max_iters + 1):
        l = svt(d - s + y / mu, 1.0 / mu)
        s = soft_threshold(d - l + y / mu, lam / mu)
        r = d - l - s
        y = y + mu * r
        res = np.linalg.norm(r) / nd
        if res <= cfg.tol_primal:
            converged = True
            break
        mu = min(mu * cfg.mu_growth, mu_max)
    if not converged:
        log.warning("rpca did not converge in %d iterations (residual %.2e)", cfg.max_iters, res)
    return RpcaResult(l, s, it, converged, float(res))


class SpectrumMode(str, Enum):
    PLAIN_SVD = "svd"
    ROBUST_RPCA = "rpca"


@dataclass
class SpectrumReport:
    per_subject_sigmas: list[np.ndarray]
    mean_sigmas: np.ndarray
    mode: SpectrumMode
    class_ids: list = field(default_factory=list)
    skipped: list = field(default_factory=list)

    def normalized(self) -> np.ndarray:
        """Mean spectrum divided by its leading value (what the figures plot)."""
        if self.mean_sigmas.size == 0 or self.mean_sigmas[0] == 0:
            return self.mean_sigmas.copy()
        return self.mean_sigmas / self.mean_sigmas[0]


def _mean_spectrum(sigmas: Sequence[np.ndarray]) -> np.ndarray:
    if not sigmas:
        return np.zeros(0)
    k = min(len(s) for s in sigmas)
    return np.mean([s[:k] for s in sigmas], axis=0)


def spectrum(g: Gallery, mode: SpectrumMode | str = SpectrumMode.PLAIN_SVD,
             cfg: SolverConfig | None = None, lam: float | None = None) -> SpectrumReport:
    """Per-class singular values and their index-wise mean.

    In robust mode the spectrum is that of the low-rank part of RPCA run on
    each class block separately; classes whose decomposition fails to
    converge are recorded in ``skipped`` and left out of the mean.
    """
    mode = SpectrumMode(mode)
    per, ids, skipped = [], [], []
    for cr in g.class_ranges:
        block = g.a[:, cr.start:cr.stop]
        if mode is SpectrumMode.PLAIN_SVD:
            sig = svd(block).sigma
        else:
            res = rpca(block, lam, cfg)
            if not res.converged:
                skipped.append(cr.class_id)
                continue
            sig = svd(res.l).sigma
        per.append(sig)
        ids.append(cr.class_id)
    return SpectrumReport(per, _mean_spectrum(per), mode, ids, skipped)


def whole_spectrum(g: Gallery, mode: SpectrumMode | str = SpectrumMode.PLAIN_SVD,
                   cfg: SolverConfig | None = None, lam: float | None = None) -> SpectrumReport:
    """Spectrum of the whole dictionary at once, all subjects stacked together.

    Mixing subjects measures the relative orientation of their subspaces
    rather than the rank of any one of them; kept for comparison with the
    per-class :func:`spectrum`.
    """
    mode = SpectrumMode(mode)
    if mode is SpectrumMode.PLAIN_SVD:
        sig = svd(g.a).sigma
    else:
        res = rpca(g.a, lam, cfg)
        if not res.converged:
            return SpectrumReport([], np.zeros(0), mode, [], ["all"])
        sig = svd(res.l).sigma
    return SpectrumReport([sig], sig.copy(), mode, ["all"], [])


def numerical_rank(sigmas, rel_tol: float = 1e-3) -> int:
    """Number of singular values at least ``rel_tol`` times the largest."""
    s = np.asarray(sigmas, dtype=float)
    if s.size == 0:
        raise ValueError("empty singular value sequence")
    if s[0] <= 0:
        return 0
    return int(np.count_nonzero(s >= rel_tol * s[0]))


def write_spectrum_csv(report: SpectrumReport, path: str | Path) -> None:
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["index", "mean_sigma", "mode"])
            for i, v in enumerate(report.mean_sigmas, start=1):
                w.writerow([i, repr(float(v)), report.mode.value])
    except OSError as exc:
        raise OSError(f"{path}: cannot write spectrum ({exc.strerror or exc})") from exc


def read_spectrum_csv(path: str | Path) -> tuple[np.ndarray, SpectrumMode]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    vals = np.array([float(r["mean_sigma"]) for r in rows])
    mode = SpectrumMode(rows[0]["mode"]) if rows else SpectrumMode.PLAIN_SVD
    return vals, mode
