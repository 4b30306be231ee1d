import numpy as np
import pytest
from PIL import Image

from sparseface.bench import (
    CSV_HEADER,
    ExperimentReport,
    ExperimentSpec,
    ReportRow,
    emit_csv,
    emit_plot,
    format_csv,
    level_grid,
    load_experiment_data,
    parse_csv,
    read_csv,
    render_svg,
    run_breakdown,
    run_projected_comparison,
)
from sparseface.classify import Method
from sparseface.gallery import SynthSpec, TestSet, save_npz, synth_gallery
from sparseface.perturb import Perturbation

SMALL = SynthSpec(4, 3, 6, 64, seed=1, tests_per_class=3)
METHODS = (Method("src"), Method("l2"), Method("l2w", occlusion_grid=(2, 2)))


def corrupt_spec(levels=(0.0, 0.3), **kw):
    grid = tuple(Perturbation("corrupt", lv) for lv in levels)
    return ExperimentSpec(kw.pop("source", SMALL), kw.pop("methods", METHODS), grid, **kw)


@pytest.fixture(scope="module")
def small_report():
    return run_breakdown(corrupt_spec(seed=3), timing=False)


# --- spec validation and grids --------------------------------------------

def test_spec_validation():
    with pytest.raises(ValueError):
        corrupt_spec(levels=())
    with pytest.raises(ValueError):
        corrupt_spec(methods=())
    with pytest.raises(ValueError):
        corrupt_spec(methods=(Method("l2"), Method("l2")))
    with pytest.raises(ValueError):
        corrupt_spec(trials_per_level=0)
    with pytest.raises(ValueError):
        corrupt_spec(workers=0)


def test_level_grid():
    assert level_grid("0:0.9:0.1") == [round(0.1 * i, 10) for i in range(10)]
    assert level_grid("0.1, 0.5") == [0.1, 0.5]
    with pytest.raises(ValueError):
        level_grid("0:1")
    with pytest.raises(ValueError):
        level_grid("0:1:0")


# --- breakdown ------------------------------------------------------------

def test_unperturbed_level_is_perfect(small_report):
    for m in ("src", "l2", "l2w"):
        assert small_report.rate(m, 0.0) == 100.0


def test_rows_ordered_and_consistent(small_report):
    assert [(r.level, r.method) for r in small_report.rows] == [
        (lv, m) for lv in (0.0, 0.3) for m in ("src", "l2", "l2w")]
    for r in small_report.rows:
        assert 0.0 <= r.rate <= 100.0
        assert r.n_tests == 12
        assert r.n_correct + r.n_incorrect == r.n_tests
        assert r.wall_time == 0.0


def test_single_test_rate_is_quantized(tmp_path):
    g, t = synth_gallery(SynthSpec(2, 2, 3, 20, seed=2, tests_per_class=1))
    save_npz(tmp_path / "one.npz", g, TestSet(t.y[:, :1], t.labels[:1], t.image_shape))
    spec = corrupt_spec(levels=(0.5,), source=tmp_path / "one.npz", methods=(Method("l2"),))
    row = run_breakdown(spec).rows[0]
    assert row.n_tests == 1 and row.rate in (0.0, 100.0)


def test_determinism_and_parallel_equivalence(small_report):
    again = run_breakdown(corrupt_spec(seed=3), timing=False)
    parallel = run_breakdown(corrupt_spec(seed=3, workers=2), timing=False)
    assert format_csv(again) == format_csv(small_report) == format_csv(parallel)


def test_trials_multiply_test_count():
    rep = run_breakdown(corrupt_spec(levels=(0.2,), methods=(Method("l2"),), trials_per_level=2))
    assert rep.rows[0].n_tests == 24


def test_npz_and_directory_sources(tmp_path):
    g, t = synth_gallery(SynthSpec(2, 2, 3, 16, seed=4, tests_per_class=1, image_shape=(4, 4)))
    save_npz(tmp_path / "d.npz", g, t)
    spec = corrupt_spec(levels=(0.0,), source=tmp_path / "d.npz", methods=(Method("l2"),))
    assert run_breakdown(spec).rows[0].rate == 100.0

    # a single per-class tree split by 1-based image indices
    rng = np.random.default_rng(0)
    for c in ("p", "q"):
        base = rng.integers(20, 200, (4, 4))
        for i in range(3):
            d = tmp_path / "faces" / c
            d.mkdir(parents=True, exist_ok=True)
            img = np.clip(base + rng.integers(-3, 4, (4, 4)), 0, 255).astype(np.uint8)
            Image.fromarray(img).save(d / f"{i}.png")
    spec = corrupt_spec(levels=(0.0,), source=tmp_path / "faces", methods=(Method("l2"),),
                        train_indices=(1, 2))
    g, t = load_experiment_data(spec)
    assert g.a.shape == (16, 4) and t.labels == ("p", "q")


# --- projected comparison -------------------------------------------------

def test_identity_projection_reproduces_full_rates():
    spec = ExperimentSpec(SMALL, (Method("src"), Method("l2")), (Perturbation("occlude", 0.3),), seed=5)
    rep = run_projected_comparison(spec, 64, identity=True, timing=False)
    assert rep.methods() == ["src", "src_proj", "src_proj_e", "l2", "l2_proj"]
    assert rep.rate("src", 0.3) == rep.rate("src_proj", 0.3)
    assert rep.rate("l2", 0.3) == rep.rate("l2_proj", 0.3)


def test_projected_e_support_bounded():
    spec = ExperimentSpec(SMALL, (Method("src"),), (Perturbation("occlude", 0.3),), seed=6)
    rep = run_projected_comparison(spec, 12, timing=False)
    assert rep.diagnostics["d"] == 12
    assert 0 < rep.diagnostics["max_nnz_projected_e"][0.3] <= 12


def test_projection_dimension_checked():
    spec = ExperimentSpec(SMALL, (Method("l2"),), (Perturbation("occlude", 0.1),))
    with pytest.raises(ValueError):
        run_projected_comparison(spec, 65)


# --- report files ---------------------------------------------------------

def test_empty_report_is_header_only():
    assert format_csv(ExperimentReport()) == ",".join(CSV_HEADER) + "\n"


def test_one_row_is_two_lines():
    rep = ExperimentReport([ReportRow("src", 0.1, 50.0, 2, 0, 0.25)])
    assert format_csv(rep).count("\n") == 2


def test_csv_round_trip(small_report, tmp_path):
    rep = ExperimentReport(small_report.rows + [ReportRow("x", 1 / 3, 100 / 3, 3, 1, 0.1 + 0.2)])
    emit_csv(rep, tmp_path / "r.csv")
    assert read_csv(tmp_path / "r.csv").rows == rep.rows
    assert b"\r" not in (tmp_path / "r.csv").read_bytes()


def test_csv_errors(tmp_path):
    with pytest.raises(ValueError):
        parse_csv("a,b\n")
    with pytest.raises(ValueError):
        parse_csv(",".join(CSV_HEADER) + "\nsrc,0.1\n")
    with pytest.raises(OSError, match="cannot write"):
        emit_csv(ExperimentReport(), tmp_path / "missing" / "r.csv")


def test_report_row_validation():
    with pytest.raises(ValueError):
        ReportRow("m", 0.0, 101.0, 1, 0)
    with pytest.raises(ValueError):
        ReportRow("m", 0.0, 50.0, 0, 0)


def test_svg(small_report, tmp_path):
    a, b = render_svg(small_report), render_svg(small_report)
    assert a == b
    assert a.count("<polyline") == 3
    assert ">level</text>" in a and ">rate</text>" in a
    emit_plot(small_report, tmp_path / "p.svg")
    assert (tmp_path / "p.svg").read_text() == a
