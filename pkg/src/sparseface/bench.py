"""Experiment harness: breakdown curves, projected-feature comparisons, CSV and SVG output.

Every test image gets its own generator derived from ``(seed, level index,
image index, trial)``. The method index is not part of the key, so all
methods see the same perturbed inputs at a given level and the comparison
between them is paired. Because the seed does not depend on scheduling,
running with ``workers > 1`` gives the same report as a serial run.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .classify import (
    Method,
    MethodTag,
    classify_l2_projected,
    classify_projected,
)
from .gallery import (
    Gallery,
    GalleryError,
    SynthSpec,
    TestSet,
    load_gallery,
    load_images,
    load_npz,
    load_testset,
    synth_gallery,
)
from .numcore import make_rng, normalize_columns
from .perturb import Kind, Perturbation, gaussian_projection
from .solvers import ProjectionVariant

__all__ = [
    "CSV_HEADER",
    "ExperimentSpec",
    "ReportRow",
    "ExperimentReport",
    "load_experiment_data",
    "level_grid",
    "run_breakdown",
    "run_projected_comparison",
    "emit_csv",
    "format_csv",
    "parse_csv",
    "read_csv",
    "emit_plot",
    "render_svg",
]

log = logging.getLogger(__name__)

CSV_HEADER = ("method", "level", "rate", "n_tests", "n_nonconverged", "wall_time_s")

# stream key for the experiment-wide projection matrix
_PHI_KEY = 0xF1


@dataclass(frozen=True)
class ExperimentSpec:
    """What to run: a gallery source, methods, perturbation levels and a seed.

    ``gallery_source`` is either a :class:`SynthSpec`, a ``.npz`` written by
    :func:`~sparseface.gallery.save_npz`, or a directory. A directory holds
    ``train/`` and ``test/`` trees of per-class image folders, unless
    ``train_indices`` is given: then it is a single per-class tree and the
    listed 1-based positions (in sorted file order) of each class form the
    gallery while the rest are test images.
    """

    gallery_source: SynthSpec | str | Path
    methods: tuple[Method, ...]
    perturbation_grid: tuple[Perturbation, ...]
    trials_per_level: int = 1
    seed: int = 0
    resize_to: tuple[int, int] | None = None
    train_indices: tuple[int, ...] | None = None
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "perturbation_grid", tuple(self.perturbation_grid))
        if not self.methods:
            raise ValueError("experiment needs at least one method")
        if not self.perturbation_grid:
            raise ValueError("experiment needs at least one perturbation level")
        if self.trials_per_level < 1:
            raise ValueError("trials_per_level must be at least 1")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        labels = [m.label for m in self.methods]
        if len(set(labels)) != len(labels):
            raise ValueError(f"method labels must be unique: {labels}")


@dataclass(frozen=True)
class ReportRow:
    method: str
    level: float
    rate: float
    n_tests: int
    n_nonconverged: int
    wall_time: float = 0.0

    def __post_init__(self):
        if self.n_tests <= 0:
            raise ValueError("a report row needs at least one test")
        if not 0.0 <= self.rate <= 100.0:
            raise ValueError(f"rate {self.rate} outside [0, 100]")

    @property
    def n_correct(self) -> int:
        return int(round(self.rate * self.n_tests / 100.0))

    @property
    def n_incorrect(self) -> int:
        return self.n_tests - self.n_correct


@dataclass
class ExperimentReport:
    rows: list[ReportRow] = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    def methods(self) -> list[str]:
        seen: dict[str, None] = {}
        for r in self.rows:
            seen.setdefault(r.method, None)
        return list(seen)

    def rate(self, method: str, level: float) -> float:
        for r in self.rows:
            if r.method == method and math.isclose(r.level, level, abs_tol=1e-9):
                return r.rate
        raise KeyError((method, level))

    def series(self, method: str) -> tuple[np.ndarray, np.ndarray]:
        rs = [r for r in self.rows if r.method == method]
        return np.array([r.level for r in rs]), np.array([r.rate for r in rs])


def level_grid(text: str) -> list[float]:
    """Parse ``start:stop:step`` (inclusive stop) or a comma list of levels."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid must be start:stop:step, got {text!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ValueError("grid step must be positive")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        if n < 1:
            raise ValueError(f"empty grid {text!r}")
        return [round(start + i * step, 10) for i in range(n)]
    return [float(p) for p in text.split(",") if p.strip()]


def _split_by_index(root: Path, indices: Sequence[int], resize_to):
    mat, labels, files, shape = load_images(root, resize_to)
    pos: dict[str, int] = {}
    train_cols, test_cols = [], []
    for j, lab in enumerate(labels):
        pos[lab] = pos.get(lab, 0) + 1
        (train_cols if pos[lab] in indices else test_cols).append(j)
    if not train_cols:
        raise GalleryError(f"{root}: no images match the training index list")
    missing = sorted(set(labels) - {labels[j] for j in train_cols})
    if missing:
        raise GalleryError(f"{root}: class {missing[0]!r} has no image at the training indices")
    a = normalize_columns(mat[:, train_cols], [str(files[j]) for j in train_cols])
    ids = [labels[j] for j in train_cols]
    g = Gallery.from_blocks(*_blocks(a, ids), image_shape=shape, normalize=False)
    tests = TestSet(mat[:, test_cols], tuple(labels[j] for j in test_cols), shape)
    return g, tests


def _blocks(a: np.ndarray, ids: list):
    blocks, order = [], []
    start = 0
    for j in range(1, len(ids) + 1):
        if j == len(ids) or ids[j] != ids[start]:
            blocks.append(a[:, start:j])
            order.append(ids[start])
            start = j
    return blocks, order


def load_experiment_data(spec: ExperimentSpec) -> tuple[Gallery, TestSet]:
    src = spec.gallery_source
    if isinstance(src, SynthSpec):
        return synth_gallery(src)
    path = Path(src)
    if path.suffix == ".npz":
        g, tests = load_npz(path)
        if tests is None:
            raise GalleryError(f"{path}: archive has no test images")
        return g, tests
    if not path.is_dir():
        raise GalleryError(f"{path}: not a directory or .npz archive")
    if spec.train_indices is not None:
        return _split_by_index(path, spec.train_indices, spec.resize_to)
    return (load_gallery(path / "train", spec.resize_to),
            load_testset(path / "test", spec.resize_to))


# -- per-image work -----------------------------------------------------------

# Worker state. Set once per process by the pool initializer (or directly in
# serial mode) so the gallery is not pickled per task.
_STATE: dict = {}


def _init_state(g: Gallery, tests: TestSet, spec: ExperimentSpec, phi=None) -> None:
    _STATE.clear()
    bases = {}
    for m in spec.methods:
        if m.tag is MethodTag.L2W:
            bases[m.label] = m.basis_for(g)
    _STATE.update(g=g, tests=tests, spec=spec, phi=phi, bases=bases)


def _perturbed(level_idx: int, j: int, trial: int) -> np.ndarray:
    spec: ExperimentSpec = _STATE["spec"]
    tests: TestSet = _STATE["tests"]
    rng = make_rng(spec.seed, level_idx, j, trial)
    pert = spec.perturbation_grid[level_idx]
    return pert.apply(tests.y[:, j], tests.image_shape, rng).y


def _timed(fn, *args):
    t0 = time.perf_counter()
    out = fn(*args)
    return out, time.perf_counter() - t0


def _breakdown_task(task: tuple[int, int, int]) -> list[tuple[bool, bool, float]]:
    level_idx, j, trial = task
    g: Gallery = _STATE["g"]
    truth = _STATE["tests"].labels[j]
    y = _perturbed(level_idx, j, trial)
    out = []
    for m in _STATE["spec"].methods:
        dec, dt = _timed(m.classify, g, y, _STATE["bases"].get(m.label))
        out.append((dec.label == truth, dec.converged, dt))
    return out


def _projected_labels(spec: ExperimentSpec) -> list[tuple[str, Method, str]]:
    rows = []
    for m in spec.methods:
        base = m.label
        if m.tag is MethodTag.SRC:
            rows += [(base, m, "full"), (f"{base}_proj", m, "sparse_e"), (f"{base}_proj_e", m, "projected_e")]
        else:
            rows += [(base, m, "full"), (f"{base}_proj", m, "proj")]
    return rows


def _projected_task(task: tuple[int, int, int]) -> list[tuple[bool, bool, float, int]]:
    level_idx, j, trial = task
    g: Gallery = _STATE["g"]
    phi = _STATE["phi"]
    truth = _STATE["tests"].labels[j]
    y = _perturbed(level_idx, j, trial)
    out = []
    for _, m, how in _projected_labels(_STATE["spec"]):
        basis = _STATE["bases"].get(m.label)
        nnz = -1
        t0 = time.perf_counter()
        if how == "full":
            dec = m.classify(g, y, basis)
        elif how in ("sparse_e", "projected_e"):
            dec = classify_projected(g, y, phi, ProjectionVariant(how), m.solver_cfg)
            if how == "projected_e":
                nnz = dec.solution.nnz()
        else:
            dec = classify_l2_projected(g, y, phi, basis)
        out.append((dec.label == truth, dec.converged, time.perf_counter() - t0, nnz))
    return out


def _run_tasks(fn, tasks, g, tests, spec, phi=None) -> list:
    if spec.workers == 1 or len(tasks) < 2:
        _init_state(g, tests, spec, phi)
        try:
            return [fn(t) for t in tasks]
        finally:
            _STATE.clear()
    chunk = max(1, len(tasks) // (4 * spec.workers))
    with ProcessPoolExecutor(spec.workers, initializer=_init_state,
                             initargs=(g, tests, spec, phi)) as pool:
        return list(pool.map(fn, tasks, chunksize=chunk))


def _tasks(spec: ExperimentSpec, n_images: int) -> list[tuple[int, int, int]]:
    return [(li, j, t)
            for li in range(len(spec.perturbation_grid))
            for j in range(n_images)
            for t in range(spec.trials_per_level)]


def _assemble(spec: ExperimentSpec, names: list[str], tasks, results, timing: bool) -> list[ReportRow]:
    n_levels = len(spec.perturbation_grid)
    correct = np.zeros((n_levels, len(names)), dtype=int)
    noconv = np.zeros_like(correct)
    wall = np.zeros((n_levels, len(names)))
    count = np.zeros(n_levels, dtype=int)
    for (li, _, _), res in zip(tasks, results):
        count[li] += 1
        for k, r in enumerate(res):
            correct[li, k] += bool(r[0])
            noconv[li, k] += not r[1]
            wall[li, k] += r[2]
    rows = []
    for li, pert in enumerate(spec.perturbation_grid):
        for k, name in enumerate(names):
            rows.append(ReportRow(
                name, float(pert.level), 100.0 * correct[li, k] / count[li], int(count[li]),
                int(noconv[li, k]), float(wall[li, k]) if timing else 0.0))
    return rows


def run_breakdown(spec: ExperimentSpec, timing: bool = True) -> ExperimentReport:
    """Recognition rate of every method at every perturbation level.

    Non-converged solves still count by the label they produce; how many
    there were is reported per row. ``timing=False`` zeroes the wall-time
    column so the CSV depends only on the experiment definition.
    """
    g, tests = load_experiment_data(spec)
    if tests.y.shape[1] == 0:
        raise GalleryError("experiment has no test images")
    tasks = _tasks(spec, tests.y.shape[1])
    results = _run_tasks(_breakdown_task, tasks, g, tests, spec)
    rows = _assemble(spec, [m.label for m in spec.methods], tasks, results, timing)
    return ExperimentReport(rows, {"n_classes": len(g.class_ranges), "ambient_dim": g.n_pixels})


def run_projected_comparison(spec: ExperimentSpec, d: int, identity: bool = False,
                             timing: bool = True) -> ExperimentReport:
    """Full-dimension methods against their counterparts on ``d`` projected features.

    One Gaussian projection, drawn from the experiment seed, is shared by every
    test image. Each SRC method yields three rows: full dimension
    (``label``), the sparse-error projected program (``label_proj``) and
    the variant with the error in feature space (``label_proj_e``). Each l2
    method yields a full and a projected row. ``diagnostics`` keeps the
    largest support size of any feature-space-error solve per level.
    """
    g, tests = load_experiment_data(spec)
    m = g.n_pixels
    if not 1 <= d <= m:
        raise ValueError(f"projection dimension {d} must lie in [1, {m}]")
    phi = gaussian_projection(m, d, make_rng(spec.seed, _PHI_KEY), identity=identity)
    tasks = _tasks(spec, tests.y.shape[1])
    results = _run_tasks(_projected_task, tasks, g, tests, spec, phi)
    names = [n for n, _, _ in _projected_labels(spec)]
    rows = _assemble(spec, names, tasks, results, timing)
    max_nnz: dict[float, int] = {}
    for (li, _, _), res in zip(tasks, results):
        lvl = float(spec.perturbation_grid[li].level)
        for r in res:
            if r[3] >= 0:
                max_nnz[lvl] = max(max_nnz.get(lvl, 0), r[3])
    return ExperimentReport(rows, {"d": d, "ambient_dim": m, "max_nnz_projected_e": max_nnz})


# -- CSV -----------------------------------------------------------------------

def _fmt(v: float) -> str:
    # repr is locale independent and round-trips exactly
    return repr(float(v))


def format_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in report.rows:
        w.writerow([r.method, _fmt(r.level), _fmt(r.rate), r.n_tests, r.n_nonconverged, _fmt(r.wall_time)])
    return buf.getvalue()


def emit_csv(report: ExperimentReport, path: str | Path) -> None:
    path = Path(path)
    try:
        path.write_bytes(format_csv(report).encode("utf-8"))
    except OSError as exc:
        raise OSError(f"{path}: cannot write report ({exc.strerror or exc})") from exc


def parse_csv(text: str) -> ExperimentReport:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(header) != CSV_HEADER:
        raise ValueError(f"unexpected report header {header}")
    rows = []
    for rec in reader:
        if not rec:
            continue
        if len(rec) != len(CSV_HEADER):
            raise ValueError(f"malformed report row {rec}")
        rows.append(ReportRow(rec[0], float(rec[1]), float(rec[2]), int(rec[3]), int(rec[4]), float(rec[5])))
    return ExperimentReport(rows)


def read_csv(path: str | Path) -> ExperimentReport:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"{path}: cannot read report ({exc.strerror or exc})") from exc
    return parse_csv(text)


# -- SVG -----------------------------------------------------------------------

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


def render_svg(report: ExperimentReport, width: int = 480, height: int = 320) -> str:
    """Line chart of rate against level, one polyline per method."""
    left, right, top, bottom = 50, 110, 20, 40
    pw, ph = width - left - right, height - top - bottom
    methods = report.methods()
    levels = [r.level for r in report.rows]
    lo, hi = (min(levels), max(levels)) if levels else (0.0, 1.0)
    span = hi - lo if hi > lo else 1.0

    def px(level: float) -> str:
        return f"{left + pw * (level - lo) / span:.2f}"

    def py(rate: float) -> str:
        return f"{top + ph * (1.0 - rate / 100.0):.2f}"

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#000"/>',
    ]
    for t in (0, 25, 50, 75, 100):
        out.append(f'<text x="{left - 6}" y="{py(t)}" text-anchor="end" dominant-baseline="middle">{t}</text>')
    for t in sorted(set(levels)):
        out.append(f'<text x="{px(t)}" y="{top + ph + 14}" text-anchor="middle">{t:g}</text>')
    out.append(f'<text x="{left + pw / 2:.2f}" y="{height - 6}" text-anchor="middle">level</text>')
    out.append(f'<text x="14" y="{top + ph / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 14 {top + ph / 2:.2f})">rate</text>')
    for i, name in enumerate(methods):
        xs, ys = report.series(name)
        color = _PALETTE[i % len(_PALETTE)]
        pts = " ".join(f"{px(x)},{py(y)}" for x, y in zip(xs, ys))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = top + 12 + 16 * i
        out.append(f'<line x1="{left + pw + 10}" y1="{ly}" x2="{left + pw + 30}" y2="{ly}" stroke="{color}"/>')
        out.append(f'<text x="{left + pw + 34}" y="{ly}" dominant-baseline="middle">{_escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def emit_plot(report: ExperimentReport, path: str | Path) -> None:
    path = Path(path)
    try:
        path.write_bytes(render_svg(report).encode("utf-8"))
    except OSError as exc:
        raise OSError(f"{path}: cannot write plot ({exc.strerror or exc})") from exc
