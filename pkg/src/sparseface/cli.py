"""Command-line front end.

Subcommands: ``synth``, ``spectrum``, ``rpca``, ``classify``, ``breakdown``
and ``project``. Every flag can also come from a ``--config`` file of flat
``key = value`` lines, where keys are flag names without the leading dashes;
flags given on the command line win. Exit status is 0 on success, 1 for bad
input and 2 for an internal failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import csv
import logging
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import bench
from .classify import Method, MethodTag, classify_l2_projected, classify_projected
from .gallery import SynthSpec, load_gallery, load_npz, save_npz, synth_gallery
from .numcore import make_rng
from .perturb import Kind, Perturbation, corrupt_pixels, gaussian_projection, parse_fill
from .rpca import SpectrumMode, numerical_rank, rpca, spectrum, whole_spectrum, write_spectrum_csv
from .solvers import RPCA_CONFIG, ProjectionVariant, SolverConfig

log = logging.getLogger("sparseface")

EXIT_OK, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2


class InputError(Exception):
    """Bad user input: unreadable files, malformed values, impossible requests."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _shape(text: str) -> tuple[int, int]:
    try:
        h, w = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected HxW, got {text!r}") from None
    if h < 1 or w < 1:
        raise argparse.ArgumentTypeError(f"expected positive HxW, got {text!r}")
    return h, w


def _fraction(text: str) -> float:
    v = float(text)
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"fraction must lie in [0, 1], got {text}")
    return v


def _index_list(text: str) -> tuple[int, ...]:
    try:
        idx = tuple(int(v) for v in text.replace(" ", "").split(",") if v)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated indices, got {text!r}") from None
    if not idx or min(idx) < 1:
        raise argparse.ArgumentTypeError("indices are 1-based and the list must be nonempty")
    return idx


def _methods(text: str) -> tuple[str, ...]:
    names = tuple(v.strip() for v in text.split(",") if v.strip())
    for n in names:
        if n not in {t.value for t in MethodTag}:
            raise argparse.ArgumentTypeError(f"unknown method {n!r} (choose from src, l2, l2w)")
    return names


def _bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


# -- parser --------------------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("global")
    g.add_argument("--seed", type=int, default=0, help="master seed for every random choice")
    g.add_argument("--config", type=Path, help="key=value file mirroring the flags")
    g.add_argument("--out", type=Path, help="output file (CSV, or .npz for synth and rpca)")
    g.add_argument("-v", "--verbose", action="store_true")


def _data(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("data")
    g.add_argument("--data", type=Path,
                   help="dataset: .npz from synth, a directory with train/ and test/, "
                        "or a single per-class directory with --train-indices")
    g.add_argument("--resize", type=_shape, help="bilinear resize of every image to HxW")
    g.add_argument("--train-indices", type=_index_list,
                   help="1-based per-class image positions used for training, e.g. 1,3,5,6,7")
    g.add_argument("--classes", type=int, default=10)
    g.add_argument("--dim", type=int, default=5, help="subspace dimension per class")
    g.add_argument("--per-class", type=int, default=10, help="training images per class")
    g.add_argument("--ambient", type=int, default=500)
    g.add_argument("--tests-per-class", type=int, default=20)
    g.add_argument("--similarity", type=float, default=0.0, help="class_similarity in [0, 1)")
    g.add_argument("--noise", type=float, default=0.0)
    g.add_argument("--shape", type=_shape, help="image shape of synthetic data")


def _perturb(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("perturbation")
    g.add_argument("--corrupt", type=_fraction, help="fraction of pixels replaced by noise")
    g.add_argument("--occlude", type=_fraction, help="fraction of the image covered by a block")
    g.add_argument("--fill", type=parse_fill, default=parse_fill("noise"), help="noise | texture:PATH")


def _solver(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("solver")
    g.add_argument("--max-iters", type=int, default=SolverConfig.max_iters)
    g.add_argument("--tol", type=float, default=SolverConfig.tol_primal)
    g.add_argument("--grid-w", type=_shape, default=(4, 4), help="occlusion basis tiling RxC for l2w")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sparseface", description="Sparse-representation face recognition experiments.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("synth", help="write a synthetic gallery and test set to .npz")
    _common(s)
    _data(s)

    s = sub.add_parser("spectrum", help="mean per-class singular values, plain or robust")
    _common(s)
    _data(s)
    s.add_argument("--mode", choices=[m.value for m in SpectrumMode], default="svd")
    s.add_argument("--lambda", dest="lam", type=float, help="RPCA weight (default 1/sqrt(max(m, n)))")
    s.add_argument("--whole", type=_bool, nargs="?", const=True, default=False,
                   help="one spectrum of the whole dictionary instead of per class")
    s.add_argument("--corrupt", type=_fraction, help="corrupt this fraction of every training column first")

    s = sub.add_parser("rpca", help="low-rank plus sparse split of a matrix (.npy or .csv)")
    _common(s)
    s.add_argument("input", type=Path)
    s.add_argument("--lambda", dest="lam", type=float)
    s.add_argument("--max-iters", type=int, default=RPCA_CONFIG.max_iters)
    s.add_argument("--tol", type=float, default=RPCA_CONFIG.tol_primal)

    s = sub.add_parser("classify", help="label test images with one method")
    _common(s)
    _data(s)
    _perturb(s)
    _solver(s)
    s.add_argument("--method", choices=[t.value for t in MethodTag], default="src")
    s.add_argument("--project", type=int, help="classify on this many random projected features")

    s = sub.add_parser("breakdown", help="recognition rate against perturbation level")
    _common(s)
    _data(s)
    _solver(s)
    s.add_argument("--grid", default="0:0.9:0.1", help="start:stop:step or a comma list")
    s.add_argument("--kind", choices=[Kind.CORRUPT.value, Kind.OCCLUDE.value], default="corrupt")
    s.add_argument("--fill", type=parse_fill, default=parse_fill("noise"))
    s.add_argument("--methods", type=_methods, default=("src", "l2", "l2w"))
    s.add_argument("--trials", type=int, default=1)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--timing", type=_bool, nargs="?", const=True, default=True,
                   help="record wall time (false writes 0 so the CSV is reproducible)")
    s.add_argument("--plot", type=Path, help="also write an SVG chart")

    s = sub.add_parser("project", help="full-dimension against projected-feature recognition")
    _common(s)
    _data(s)
    _solver(s)
    s.add_argument("-d", type=int, required=True, help="projected dimension")
    s.add_argument("--grid", default="0.3", help="perturbation levels")
    s.add_argument("--kind", choices=[Kind.CORRUPT.value, Kind.OCCLUDE.value], default="occlude")
    s.add_argument("--fill", type=parse_fill, default=parse_fill("noise"))
    s.add_argument("--methods", type=_methods, default=("src", "l2"))
    s.add_argument("--identity", type=_bool, nargs="?", const=True, default=False,
                   help="use the identity map (needs d equal to the pixel count)")
    s.add_argument("--trials", type=int, default=1)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--timing", type=_bool, nargs="?", const=True, default=True)
    s.add_argument("--plot", type=Path)
    return p


def read_config(path: Path) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"{path}: cannot read config ({exc.strerror or exc})") from exc
    out = {}
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{no}: expected key=value")
        k, v = (t.strip() for t in line.split("=", 1))
        out[k.lstrip("-").replace("-", "_")] = v
    return out


def parse_args(argv: Sequence[str] | None = None) -> argparse.Namespace:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parser.parse_args(argv)
    if args.config is None:
        return args
    conf = read_config(args.config)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    actions = {a.dest: a for a in sub._actions}
    for key in conf:
        if key not in actions or key in ("help", "config"):
            raise InputError(f"{args.config}: unknown key {key!r} for {args.command}")
    defaults = {}
    for key, val in conf.items():
        act = actions[key]
        try:
            defaults[key] = act.type(val) if act.type is not None else val
        except (argparse.ArgumentTypeError, ValueError) as exc:
            raise InputError(f"{args.config}: bad value for {key}: {exc}") from exc
        if act.choices is not None and defaults[key] not in act.choices:
            raise InputError(f"{args.config}: {key} must be one of {sorted(act.choices)}")
    sub.set_defaults(**defaults)
    # re-parse so explicit flags override the file
    return parser.parse_args(argv)


# -- helpers -------------------------------------------------------------------

def _synth_spec(args) -> SynthSpec:
    return SynthSpec(
        n_classes=args.classes, subspace_dim=args.dim, images_per_class=args.per_class,
        ambient_dim=args.ambient, noise_sigma=args.noise, seed=args.seed,
        tests_per_class=args.tests_per_class, class_similarity=args.similarity,
        image_shape=args.shape,
    )


def _source(args):
    if args.data is None:
        return _synth_spec(args)
    if not args.data.exists():
        raise InputError(f"{args.data}: no such file or directory")
    return args.data


def _load(args):
    spec = bench.ExperimentSpec(_source(args), (Method("l2"),), (Perturbation("none", 0.0),),
                                seed=args.seed, resize_to=args.resize,
                                train_indices=args.train_indices)
    return bench.load_experiment_data(spec)


def _solver_cfg(args) -> SolverConfig:
    return SolverConfig(max_iters=args.max_iters, tol_primal=args.tol, tol_dual=args.tol)


def _method_objs(args) -> tuple[Method, ...]:
    cfg = _solver_cfg(args)
    return tuple(Method(MethodTag(n), cfg, tuple(args.grid_w)) for n in args.methods)


def _grid(args) -> tuple[Perturbation, ...]:
    try:
        levels = bench.level_grid(args.grid)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    return tuple(Perturbation(args.kind, lv, args.fill, args.seed) for lv in levels)


def _emit(report: bench.ExperimentReport, args) -> None:
    if args.out is not None:
        bench.emit_csv(report, args.out)
    else:
        sys.stdout.write(bench.format_csv(report))
    if getattr(args, "plot", None) is not None:
        bench.emit_plot(report, args.plot)


# -- commands ------------------------------------------------------------------

def cmd_synth(args) -> int:
    if args.out is None:
        raise InputError("synth needs --out PATH.npz")
    g, tests = synth_gallery(_synth_spec(args))
    save_npz(args.out, g, tests)
    print(f"wrote {args.out}: {g.a.shape[1]} training and {tests.y.shape[1]} test images, "
          f"{len(g.class_ranges)} classes, {g.n_pixels} pixels")
    return EXIT_OK


def cmd_spectrum(args) -> int:
    if args.data is None:
        g, _ = synth_gallery(_synth_spec(args))
    elif args.data.suffix == ".npz":
        g, _ = load_npz(args.data)
    elif args.train_indices is not None or (args.data / "train").is_dir():
        g, _ = _load(args)
    else:
        g = load_gallery(args.data, args.resize)
    if args.corrupt:
        cols = [corrupt_pixels(g.a[:, j], args.corrupt, make_rng(args.seed, j)).y for j in range(g.a.shape[1])]
        g = type(g)(np.column_stack(cols) / np.linalg.norm(cols, axis=1), g.class_ranges, g.image_shape)
    fn = whole_spectrum if args.whole else spectrum
    rep = fn(g, args.mode, lam=args.lam)
    if rep.skipped:
        log.warning("skipped non-converged classes: %s", rep.skipped)
    if rep.mean_sigmas.size == 0:
        raise InputError("no class produced a spectrum")
    if args.out is not None:
        write_spectrum_csv(rep, args.out)
    norm = rep.normalized()
    print(f"mode={rep.mode.value} classes={len(rep.class_ids)} "
          f"numerical rank (1e-3)={numerical_rank(rep.mean_sigmas)}")
    for i, v in enumerate(norm[:12], start=1):
        print(f"  sigma_{i}/sigma_1 = {v:.3e}")
    return EXIT_OK


def _read_matrix(path: Path) -> np.ndarray:
    if not path.exists():
        raise InputError(f"{path}: no such file")
    try:
        if path.suffix == ".npy":
            return np.load(path, allow_pickle=False)
        return np.loadtxt(path, delimiter=",", ndmin=2)
    except (OSError, ValueError) as exc:
        raise InputError(f"{path}: cannot read matrix ({exc})") from exc


def cmd_rpca(args) -> int:
    d = _read_matrix(args.input)
    cfg = dataclasses.replace(RPCA_CONFIG, max_iters=args.max_iters, tol_primal=args.tol, tol_dual=args.tol)
    res = rpca(d, args.lam, cfg)
    rank = numerical_rank(np.linalg.svd(res.l, compute_uv=False)) if res.l.size else 0
    print(f"iters={res.iters} converged={res.converged} residual={res.residual:.2e} "
          f"rank(L)={rank} nnz(S)={int(np.count_nonzero(np.abs(res.s) > 1e-8))}")
    if args.out is not None:
        np.savez(args.out, l=res.l, s=res.s)
    return EXIT_OK if res.converged else EXIT_INTERNAL


def cmd_classify(args) -> int:
    g, tests = _load(args)
    if args.corrupt is not None and args.occlude is not None:
        raise InputError("choose one of --corrupt and --occlude")
    pert = Perturbation("none", 0.0)
    if args.corrupt is not None:
        pert = Perturbation("corrupt", args.corrupt, seed=args.seed)
    elif args.occlude is not None:
        pert = Perturbation("occlude", args.occlude, args.fill, args.seed)
    method = Method(MethodTag(args.method), _solver_cfg(args), tuple(args.grid_w))
    phi = None
    if args.project is not None:
        if not 1 <= args.project <= g.n_pixels:
            raise InputError(f"--project must lie in [1, {g.n_pixels}]")
        phi = gaussian_projection(g.n_pixels, args.project, make_rng(args.seed, 0xF1))
    basis = method.basis_for(g) if method.tag is MethodTag.L2W else None
    out = sys.stdout if args.out is None else args.out.open("w", newline="")
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["image", "label", "predicted", "converged"])
        correct = 0
        for j, (y, truth) in enumerate(tests):
            y = pert.apply(y, tests.image_shape, make_rng(args.seed, 0, j, 0)).y
            if phi is None:
                dec = method.classify(g, y, basis)
            elif method.tag is MethodTag.SRC:
                dec = classify_projected(g, y, phi, ProjectionVariant.SPARSE_E, method.solver_cfg)
            else:
                dec = classify_l2_projected(g, y, phi, basis)
            correct += dec.label == truth
            w.writerow([j, truth, dec.label, int(dec.converged)])
    finally:
        if out is not sys.stdout:
            out.close()
    n = len(tests.labels)
    print(f"{method.label}: {correct}/{n} correct ({100.0 * correct / max(n, 1):.1f}%)", file=sys.stderr)
    return EXIT_OK


def _experiment(args) -> bench.ExperimentSpec:
    try:
        return bench.ExperimentSpec(_source(args), _method_objs(args), _grid(args), args.trials,
                                    args.seed, args.resize, args.train_indices, args.workers)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def cmd_breakdown(args) -> int:
    _emit(bench.run_breakdown(_experiment(args), timing=args.timing), args)
    return EXIT_OK


def cmd_project(args) -> int:
    report = bench.run_projected_comparison(_experiment(args), args.d, args.identity, timing=args.timing)
    _emit(report, args)
    print(f"max nnz of feature-space-error solves: {report.diagnostics['max_nnz_projected_e']}",
          file=sys.stderr)
    return EXIT_OK


COMMANDS = {
    "synth": cmd_synth, "spectrum": cmd_spectrum, "rpca": cmd_rpca,
    "classify": cmd_classify, "breakdown": cmd_breakdown, "project": cmd_project,
}


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = parse_args(argv)
    except InputError as exc:
        print(f"sparseface: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (InputError, ValueError, OSError) as exc:
        print(f"sparseface: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001 - last-resort report, exit 2
        log.debug("internal failure", exc_info=True)
        print(f"sparseface: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
