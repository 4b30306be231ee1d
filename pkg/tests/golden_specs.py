"""Experiment definitions behind the frozen golden reports.

Run ``python tests/golden_specs.py`` to regenerate ``tests/golden/*.csv``.
Only do that deliberately: the acceptance suite compares fresh runs
against these files byte for byte.
"""

from __future__ import annotations

import sys
from pathlib import Path

from sparseface.bench import ExperimentSpec, format_csv, level_grid, run_breakdown, run_projected_comparison
from sparseface.classify import Method
from sparseface.gallery import SynthSpec
from sparseface.perturb import Perturbation

GOLDEN_DIR = Path(__file__).parent / "golden"

# ten classes of five-dimensional faces in 500 pixels; the shared center
# makes the classes about as close to each other as face subspaces are
GALLERY = SynthSpec(10, 5, 10, 500, seed=0, tests_per_class=20, class_similarity=0.92)
METHODS = (Method("src"), Method("l2"), Method("l2w"))
SEED = 7
PROJECTED_D = 30


def breakdown_spec() -> ExperimentSpec:
    grid = tuple(Perturbation("corrupt", lv) for lv in level_grid("0:0.7:0.1"))
    return ExperimentSpec(GALLERY, METHODS, grid, seed=SEED)


def occlusion_spec() -> ExperimentSpec:
    grid = tuple(Perturbation("occlude", lv) for lv in level_grid("0.1:0.5:0.1"))
    return ExperimentSpec(GALLERY, METHODS, grid, seed=SEED)


def projected_spec() -> ExperimentSpec:
    small = SynthSpec(10, 5, 10, 500, seed=0, tests_per_class=5, class_similarity=0.92)
    return ExperimentSpec(small, (Method("src"), Method("l2")), (Perturbation("occlude", 0.3),), seed=SEED)


def runs():
    """``name -> zero-argument callable producing the report``."""
    return {
        "breakdown_corrupt": lambda: run_breakdown(breakdown_spec(), timing=False),
        "breakdown_occlude": lambda: run_breakdown(occlusion_spec(), timing=False),
        "projected_occlude": lambda: run_projected_comparison(projected_spec(), PROJECTED_D, timing=False),
    }


def golden_path(name: str) -> Path:
    return GOLDEN_DIR / f"{name}.csv"


def main(names=None) -> None:
    GOLDEN_DIR.mkdir(exist_ok=True)
    for name, fn in runs().items():
        if names and name not in names:
            continue
        rep = fn()
        golden_path(name).write_bytes(format_csv(rep).encode("utf-8"))
        print(f"wrote {golden_path(name)}")
        print(format_csv(rep))
        if rep.diagnostics.get("max_nnz_projected_e"):
            print("max nnz:", rep.diagnostics["max_nnz_projected_e"])


if __name__ == "__main__":
    main(sys.argv[1:])
