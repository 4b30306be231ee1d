"""Sparse-representation classification with sparse error correction.

Modules, bottom up: :mod:`numcore` (SVD, proximal maps, least squares),
:mod:`gallery` (labeled dictionaries, image ingestion, synthetic data),
:mod:`solvers` (the l1/l2 programs), :mod:`rpca` (robust PCA and spectra),
:mod:`perturb` (corruption, occlusion, projection), :mod:`classify`
(residual-based decisions) and :mod:`bench` (experiments and reports).
"""

from .bench import (
    ExperimentReport,
    ExperimentSpec,
    ReportRow,
    emit_csv,
    emit_plot,
    level_grid,
    parse_csv,
    read_csv,
    run_breakdown,
    run_projected_comparison,
)
from .classify import Decision, Method, MethodTag, classify_l2_occlusion, classify_l2_plain, classify_src
from .gallery import Gallery, GalleryError, SynthSpec, TestSet, build_occlusion_basis, synth_gallery
from .numcore import make_rng, min_norm_lsq, shrink_l2, soft_threshold, svd, svt
from .perturb import Fill, Kind, Perturbation, corrupt_pixels, gaussian_projection, occlude_block
from .rpca import RpcaResult, SpectrumMode, SpectrumReport, rpca, spectrum
from .solvers import (
    ComboProgram,
    Norm,
    ProjectionVariant,
    SolverConfig,
    SparseSolution,
    lp_oracle_l1l1,
    solve_combo,
    solve_l1l1,
    solve_projected,
)

__version__ = "0.1.0"
