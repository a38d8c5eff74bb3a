"""Command-line entry point: ``isoposterior <command> ...``.

Exit codes: 0 success, 2 configuration or parse error, 3 estimation error.
Every written artifact gets a ``<artifact>.manifest.json`` beside it.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .calibration import build_calibration_table, isotonic_fit
from .classifiers import KINDS, TrainConfig, Trainer, model_to_dict
from .classifiers.base import json_safe
from .contour import Grid2D
from .dataset import GaussianSpec, gen_gaussian, load_dataset, load_spec, save_dataset
from .errors import ConvergenceError, DomainError, EstimationError, ParseError
from .isocurves import curves_to_csv, curves_to_svg, default_levels, load_curves_csv, sweep_isocurves
from .oracle import GaussianOracle
from .posterior import EstimatorConfig, ReweightingPath, estimate_many

EXIT_OK, EXIT_CONFIG, EXIT_ESTIMATION = 0, 2, 3


# -- flag helpers ------------------------------------------------------------

def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _add_training(p: argparse.ArgumentParser, default_kind: str = "svm", dataset_arg: bool = True) -> None:
    d = TrainConfig()
    if dataset_arg:
        p.add_argument("dataset", type=Path, help="dataset CSV (x1..xd,label[,weight])")
    p.add_argument("--classifier", choices=KINDS, default=default_kind)
    p.add_argument("--C", dest="svm_C", type=float, default=d.svm_C, help="svm soft-margin constant")
    p.add_argument("--svm-gap-tol", type=float, default=d.svm_gap_tol)
    p.add_argument("--logreg-tol", type=float, default=d.logreg_tol)
    p.add_argument("--logreg-max-iter", type=int, default=d.logreg_max_iter)
    p.add_argument("--tree-alpha", dest="tree_ccp_alpha", type=float, default=None,
                   help="cost-complexity pruning strength (default: chosen by cross-validation)")
    p.add_argument("--tree-max-depth", type=int, default=None)
    p.add_argument("--tree-min-leaf-weight", type=float, default=d.tree_min_leaf_weight)
    p.add_argument("--tree-cv-folds", type=int, default=d.tree_cv_folds)


def _add_estimation(p: argparse.ArgumentParser) -> None:
    d = EstimatorConfig()
    p.add_argument("--theta-bracket", type=_floats, default=list(d.theta_bracket), metavar="LO,HI")
    p.add_argument("--theta-tol", type=float, default=d.theta_tolerance)
    p.add_argument("--score-tol", type=float, default=d.score_tolerance)
    p.add_argument("--scan-points", type=int, default=d.degeneracy_scan_points)
    p.add_argument("--filter-sv", action=argparse.BooleanOptionalAction, default=d.filter_support_vectors,
                   help="estimate on the svm support vectors only")


def _add_grid(p: argparse.ArgumentParser) -> None:
    p.add_argument("--nx", type=int, default=201, help="grid nodes along x1")
    p.add_argument("--ny", type=int, default=201, help="grid nodes along x2")
    p.add_argument("--pad", type=float, default=0.2, help="bounding-box growth per side, as a fraction of its extent")


def _train_config(a) -> TrainConfig:
    return TrainConfig(
        svm_C=a.svm_C, svm_gap_tol=a.svm_gap_tol, logreg_tol=a.logreg_tol, logreg_max_iter=a.logreg_max_iter,
        tree_ccp_alpha=a.tree_ccp_alpha, tree_max_depth=a.tree_max_depth,
        tree_min_leaf_weight=a.tree_min_leaf_weight, tree_cv_folds=a.tree_cv_folds,
    )


def _estimator_config(a) -> EstimatorConfig:
    if len(a.theta_bracket) != 2:
        raise DomainError("--theta-bracket needs two values LO,HI")
    return EstimatorConfig(
        theta_bracket=tuple(a.theta_bracket), theta_tolerance=a.theta_tol, score_tolerance=a.score_tol,
        degeneracy_scan_points=a.scan_points, filter_support_vectors=a.filter_sv,
    )


def _levels(a) -> list[float]:
    if a.levels is not None:
        return a.levels
    return default_levels(a.step)


def _path(a, dataset):
    return ReweightingPath(dataset, Trainer(a.classifier, _train_config(a)), _estimator_config(a))


def _resolved(a, path: ReweightingPath | None = None, **extra) -> dict:
    cfg = {"classifier": a.classifier}
    if path is not None:
        cfg["train"] = path.trainer.config.to_dict()
        cfg["estimator"] = path.config.to_dict()
        cfg["filtered"] = path.filtered
        cfg["pi_plus"] = path.pi_plus
    cfg.update(extra)
    return cfg


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(text.encode("utf-8"))


def _manifest(command: str, config: dict, inputs: list, outputs: list, seed=None) -> None:
    body = {
        "command": command,
        "version": __version__,
        "seed": seed,
        "config": json_safe(config),
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
    }
    text = json.dumps(body, indent=2, sort_keys=True) + "\n"
    for out in outputs:
        _write(Path(str(out) + ".manifest.json"), text)


def _emit_json(obj, out: Path | None) -> None:
    text = json.dumps(json_safe(obj), indent=2) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        _write(out, text)


# -- commands ----------------------------------------------------------------

def cmd_gen(a) -> int:
    spec = load_spec(a.spec) if a.spec else GaussianSpec()
    if a.seed is not None:
        spec = GaussianSpec.from_dict({**spec.to_dict(), "seed": a.seed})
    save_dataset(gen_gaussian(spec), a.out)
    _manifest("gen", {"spec": spec.to_dict()}, [a.spec] if a.spec else [], [a.out], seed=spec.seed)
    return EXIT_OK


def cmd_fit(a) -> int:
    dataset = load_dataset(a.dataset)
    trainer = Trainer(a.classifier, _train_config(a)).resolved(dataset)
    model = trainer(dataset)
    _emit_json(model_to_dict(model), a.out)
    if a.out:
        _manifest("fit", {"classifier": a.classifier, "train": trainer.config.to_dict()}, [a.dataset], [a.out])
    return EXIT_OK


def cmd_posterior(a) -> int:
    dataset = load_dataset(a.dataset)
    points = a.point
    for p in points:
        if len(p) != dataset.dim:
            raise DomainError(f"--point has {len(p)} coordinates, dataset has {dataset.dim}")
    path = _path(a, dataset)
    results = [e.to_dict() for e in estimate_many(points, None, dataset, path.config, path=path, jobs=a.jobs)]
    for r, p in zip(results, points):
        r["point"] = p
    _emit_json(results[0] if len(results) == 1 else results, a.out)
    if a.out:
        _manifest("posterior", _resolved(a, path, points=points), [a.dataset], [a.out])
    return EXIT_OK


def _sweep(a, dataset, levels):
    path = _path(a, dataset)
    grid = Grid2D.around(dataset.points, pad=a.pad, nx=a.nx, ny=a.ny)
    curves = sweep_isocurves(dataset, path.trainer, levels, grid, path.config, jobs=a.jobs, path=path)
    return path, grid, curves


def cmd_isocurves(a) -> int:
    dataset = load_dataset(a.dataset)
    path, grid, curves = _sweep(a, dataset, _levels(a))
    svg = a.svg or a.out.with_suffix(".svg")
    _write(a.out, curves_to_csv(curves))
    _write(svg, curves_to_svg(curves, dataset))
    for lv, err in curves.errors.items():
        print(f"warning: level {lv:g}: {err}", file=sys.stderr)
    empty = [lv for lv, c in zip(curves.levels, curves.curves) if not c]
    if empty:
        print(f"note: no contour inside the grid for levels {', '.join(f'{v:g}' for v in empty)}", file=sys.stderr)
    cfg = _resolved(a, path, levels=curves.levels, theta_per_level=curves.theta_per_level,
                    grid={"x_range": grid.x_range, "y_range": grid.y_range, "nx": grid.nx, "ny": grid.ny},
                    empty_levels=empty, errors={str(k): v for k, v in curves.errors.items()})
    _manifest("isocurves", cfg, [a.dataset], [a.out, svg])
    return EXIT_OK


def cmd_calibrate(a) -> int:
    if a.classifier == "tree":
        raise DomainError("calibrate needs a score-based classifier (svm or logreg); trees output labels only")
    dataset = load_dataset(a.dataset)
    path, grid, curves = _sweep(a, dataset, default_levels(a.resolution))
    table = build_calibration_table(path.original_model, curves)
    if len(table) == 0:
        raise EstimationError("no level produced a contour inside the grid")
    svg = a.svg or a.out.with_suffix(".svg")
    _write(a.out, table.to_csv())
    _write(svg, table.to_svg())
    fitted = isotonic_fit(table.scores, table.probabilities)
    if table.omitted:
        print(f"note: omitted levels without contour: {', '.join(f'{v:g}' for v in table.omitted)}", file=sys.stderr)
    cfg = _resolved(a, path, resolution=table.resolution, omitted_levels=list(table.omitted),
                    monotone=bool(np.all(np.diff(table.scores) > 0)),
                    isotonic={"breakpoints": fitted.breakpoints, "values": fitted.values})
    _manifest("calibrate", cfg, [a.dataset], [a.out, svg])
    return EXIT_OK


def _curve_consistency(curves_file: Path, path: ReweightingPath, per_level: int, seed: int, jobs: int) -> dict:
    """Re-estimate sampled vertices of each stored level through the per-point path."""
    stored = load_curves_csv(curves_file)
    rng = np.random.default_rng(seed)
    rows = []
    for level, polys in stored.items():
        V = np.vstack(polys)
        pick = V[rng.choice(len(V), size=min(per_level, len(V)), replace=False)]
        ests = estimate_many(pick, None, path.full_dataset, path.config, path=path, jobs=jobs)
        dev = [abs(e.probability - level) for e in ests]
        rows.append({"level": level, "n": len(pick), "max_deviation": max(dev),
                     "estimates": [e.probability for e in ests]})
    worst = max((r["max_deviation"] for r in rows), default=float("nan"))
    return {"file": str(curves_file), "levels": rows, "max_deviation": worst}


def cmd_validate(a) -> int:
    spec = load_spec(a.spec) if a.spec else GaussianSpec()
    if a.dataset is None:
        dataset = gen_gaussian(spec)
    else:
        dataset = load_dataset(a.dataset)
    if dataset.dim != len(spec.mu_plus):
        raise DomainError(f"dataset dimension {dataset.dim} does not match spec dimension {len(spec.mu_plus)}")
    if abs(dataset.pi_plus - spec.prior_plus) > 1e-12:
        print(f"warning: dataset positive proportion {dataset.pi_plus:g} differs from spec prior_plus "
              f"{spec.prior_plus:g}; the oracle uses prior_plus", file=sys.stderr)
    oracle = GaussianOracle(spec)
    path = _path(a, dataset)

    lo, hi = dataset.points.min(axis=0), dataset.points.max(axis=0)
    axes = [np.linspace(lo[k], hi[k], a.grid_size) for k in range(dataset.dim)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dataset.dim)
    ests = estimate_many(pts, None, dataset, path.config, path=path, jobs=a.jobs)
    truth = oracle.true_posterior(pts)
    est = np.array([e.probability for e in ests])
    err = np.abs(est - truth)
    statuses = [e.status for e in ests]
    report = {
        "classifier": a.classifier,
        "filtered": path.filtered,
        "n_points": len(pts),
        "mae": float(err.mean()),
        "max_error": float(err.max()),
        "status_counts": {s: statuses.count(s) for s in sorted(set(statuses))},
        "points": [
            {"x": p.tolist(), "estimate": float(e), "truth": float(t), "status": s}
            for p, e, t, s in zip(pts, est, truth, statuses)
        ],
    }
    if a.curves is not None:
        report["curves"] = _curve_consistency(a.curves, path, a.per_level, a.sample_seed, a.jobs)
    _emit_json(report, a.out)
    summary = f"{a.classifier}: MAE {report['mae']:.4f}, max {report['max_error']:.4f} over {len(pts)} points"
    if "curves" in report:
        summary += f"; curve re-estimation max deviation {report['curves']['max_deviation']:.4f}"
    print(summary, file=sys.stderr)
    if a.out:
        inputs = [p for p in (a.spec, a.dataset, a.curves) if p is not None]
        _manifest("validate", _resolved(a, path, spec=spec.to_dict(), grid_size=a.grid_size), inputs, [a.out],
                  seed=spec.seed)
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="isoposterior", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="draw a two-Gaussian dataset")
    p.add_argument("--spec", type=Path, help="JSON GaussianSpec (default: built-in toy spec)")
    p.add_argument("--seed", type=int, default=None, help="override the seed from --spec")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("fit", help="train one classifier and print its parameters")
    _add_training(p)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("posterior", help="estimate P(+|x) at one or more points")
    _add_training(p)
    _add_estimation(p)
    p.add_argument("--point", type=_floats, action="append", required=True, metavar="X1,X2,...")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_posterior)

    p = sub.add_parser("isocurves", help="trace iso-probability curves (CSV + SVG)")
    _add_training(p)
    _add_estimation(p)
    _add_grid(p)
    p.add_argument("--levels", type=_floats, default=None, help="comma-separated levels (default: step grid)")
    p.add_argument("--step", type=float, default=0.05, help="level spacing when --levels is not given")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", type=Path, required=True, help="curves CSV")
    p.add_argument("--svg", type=Path, help="figure path (default: --out with .svg)")
    p.set_defaults(func=cmd_isocurves)

    p = sub.add_parser("calibrate", help="score-to-probability table (CSV + SVG)")
    _add_training(p, default_kind="logreg")
    _add_estimation(p)
    _add_grid(p)
    p.add_argument("--resolution", type=float, default=0.05)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", type=Path, required=True, help="table CSV")
    p.add_argument("--svg", type=Path)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("validate", help="compare estimates with the Gaussian oracle")
    _add_training(p, default_kind="logreg", dataset_arg=False)
    p.add_argument("--dataset", type=Path, default=None, help="dataset CSV (default: generate from --spec)")
    _add_estimation(p)
    p.add_argument("--spec", type=Path, help="JSON GaussianSpec of the generating process")
    p.add_argument("--grid-size", type=int, default=21, help="test points per axis over the data bounding box")
    p.add_argument("--curves", type=Path, help="curves CSV to re-estimate for consistency")
    p.add_argument("--per-level", type=int, default=5, help="vertices sampled per level from --curves")
    p.add_argument("--sample-seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DomainError, ParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (EstimationError, ConvergenceError) as exc:
        print(f"estimation error: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION


if __name__ == "__main__":
    sys.exit(main())
