"""Residual-based classifiers: SRC and the two l2 alternatives.

Every method fits coefficients ``x`` over the whole dictionary and labels the
test vector with the class whose slice ``x_i`` explains it best:

* ``src``: l1/l1 fit with a sparse error term, residual ``||y - A_i x_i - e||``
* ``l2``: minimum-norm least squares, residual ``||y - A_i x_i||``
* ``l2w``: least squares over ``[A | W]`` for an occlusion basis ``W``;
  the residual is still ``||y - A_i x_i||`` (``W v`` is not subtracted)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Hashable

import numpy as np

from .gallery import Gallery, OcclusionBasis, build_occlusion_basis
from .numcore import DEFAULT_RANK_TOL, min_norm_lsq
from .solvers import ProjectionVariant, SolverConfig, SparseSolution, solve_l1l1, solve_projected

__all__ = [
    "TIE_TOL",
    "MethodTag",
    "Method",
    "Decision",
    "decide",
    "classify_src",
    "classify_l2_plain",
    "classify_l2_occlusion",
    "classify_projected",
    "classify_l2_projected",
]

TIE_TOL = 1e-12


class MethodTag(str, Enum):
    SRC = "src"
    L2 = "l2"
    L2W = "l2w"


@dataclass(frozen=True)
class Method:
    tag: MethodTag
    solver_cfg: SolverConfig = field(default_factory=SolverConfig)
    occlusion_grid: tuple[int, int] = (4, 4)
    name: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "tag", MethodTag(self.tag))

    @property
    def label(self) -> str:
        return self.name or self.tag.value

    def basis_for(self, g: Gallery) -> OcclusionBasis:
        if g.image_shape is None:
            raise ValueError("the l2w method needs a gallery with an image shape")
        return build_occlusion_basis(g.image_shape, self.occlusion_grid)

    def classify(self, g: Gallery, y, basis: OcclusionBasis | None = None) -> "Decision":
        if self.tag is MethodTag.SRC:
            return classify_src(g, y, self.solver_cfg)
        if self.tag is MethodTag.L2:
            return classify_l2_plain(g, y)
        return classify_l2_occlusion(g, basis if basis is not None else self.basis_for(g), y)


@dataclass
class Decision:
    label: Hashable
    residuals: np.ndarray
    solution: SparseSolution | np.ndarray = field(repr=False)
    converged: bool = True

    @property
    def coefficients(self) -> np.ndarray:
        return self.solution.x if isinstance(self.solution, SparseSolution) else self.solution


def decide(residuals) -> int:
    """Index of the smallest residual; near-ties go to the lowest index."""
    r = np.asarray(residuals, dtype=float)
    return int(np.flatnonzero(r <= r.min() + TIE_TOL)[0])


def _residuals(target: np.ndarray, a: np.ndarray, g: Gallery, x: np.ndarray) -> np.ndarray:
    return np.array([
        np.linalg.norm(target - a[:, cr.start:cr.stop] @ x[cr.start:cr.stop])
        for cr in g.class_ranges
    ])


def _check_y(g: Gallery, y, rows: int | None = None) -> np.ndarray:
    y = np.asarray(y, dtype=float).ravel()
    rows = g.a.shape[0] if rows is None else rows
    if y.shape[0] != rows:
        raise ValueError(f"test vector has {y.shape[0]} entries, expected {rows}")
    return y


def _decision(g: Gallery, res: np.ndarray, solution, converged: bool) -> Decision:
    return Decision(g.class_ranges[decide(res)].class_id, res, solution, converged)


def classify_src(g: Gallery, y, cfg: SolverConfig | None = None) -> Decision:
    y = _check_y(g, y)
    sol = solve_l1l1(g.a, y, cfg)
    res = _residuals(y - sol.e, g.a, g, sol.x)
    return _decision(g, res, sol, sol.converged)


def classify_l2_plain(g: Gallery, y, rank_tol: float = DEFAULT_RANK_TOL) -> Decision:
    y = _check_y(g, y)
    x = min_norm_lsq(g.a, y, rank_tol)
    return _decision(g, _residuals(y, g.a, g, x), x, True)


def classify_l2_occlusion(g: Gallery, w: OcclusionBasis, y, rank_tol: float = DEFAULT_RANK_TOL) -> Decision:
    y = _check_y(g, y)
    if w.w.shape[0] != g.a.shape[0]:
        raise ValueError(f"occlusion basis has {w.w.shape[0]} rows, gallery has {g.a.shape[0]}")
    n = g.a.shape[1]
    xv = min_norm_lsq(np.hstack([g.a, w.w]), y, rank_tol)
    x = xv[:n]
    return _decision(g, _residuals(y, g.a, g, x), x, True)


def classify_projected(g: Gallery, y, phi, variant: ProjectionVariant | str = ProjectionVariant.SPARSE_E,
                       cfg: SolverConfig | None = None) -> Decision:
    """SRC on projected features ``phi @ y``; residuals live in feature space."""
    y = _check_y(g, y)
    phi = np.asarray(phi, dtype=float)
    variant = ProjectionVariant(variant)
    sol = solve_projected(g.a, y, phi, variant, cfg)
    pa = phi @ g.a
    pe = sol.e if variant is ProjectionVariant.PROJECTED_E else phi @ sol.e
    res = _residuals(phi @ y - pe, pa, g, sol.x)
    return _decision(g, res, sol, sol.converged)


def classify_l2_projected(g: Gallery, y, phi, w: OcclusionBasis | None = None,
                          rank_tol: float = DEFAULT_RANK_TOL) -> Decision:
    """Minimum-norm l2 fit on projected features, optionally with ``phi @ W``."""
    y = _check_y(g, y)
    phi = np.asarray(phi, dtype=float)
    pa = phi @ g.a
    py = phi @ y
    n = pa.shape[1]
    big = pa if w is None else np.hstack([pa, phi @ w.w])
    x = min_norm_lsq(big, py, rank_tol)[:n]
    return _decision(g, _residuals(py, pa, g, x), x, True)
