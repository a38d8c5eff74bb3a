"""Iso-probability curves by sweeping the class weighting.

The separation surface of the model retrained at proportion ``theta`` is
the locus of points whose estimated posterior is
``posterior_from_theta(theta, pi_plus)``.  One retraining per requested
level therefore yields a whole iso-probability curve.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .classifiers import Trainer, score
from .contour import Grid2D, extract_label_boundary, extract_zero_contour
from .dataset import LabeledDataset
from .errors import DomainError, ParseError
from .svg import Figure, level_color
from .posterior import EstimatorConfig, ReweightingPath, posterior_from_theta, theta_for_level

__all__ = [
    "DEFAULT_LEVELS",
    "IsoCurveSet",
    "Grid2D",
    "default_levels",
    "sweep_isocurves",
    "extract_zero_contour",
    "curves_to_csv",
    "load_curves_csv",
    "curves_to_svg",
    "theta_for_level",
]


def default_levels(step: float = 0.05) -> list[float]:
    """Levels step, 2*step, ..., 1-step, rounded to avoid drift."""
    k = int(round(1.0 / step))
    return [round(i * step, 10) for i in range(1, k)]


DEFAULT_LEVELS = tuple(default_levels(0.05))


@dataclass
class IsoCurveSet:
    levels: list[float]
    curves: list[list[np.ndarray]]
    theta_per_level: list[float]
    pi_plus: float
    kind: str
    grid: Grid2D | None = None
    errors: dict = field(default_factory=dict)

    def __post_init__(self):
        lv = np.asarray(self.levels, dtype=float)
        if len(lv) and (np.any(np.diff(lv) <= 0) or np.any(lv <= 0) or np.any(lv >= 1)):
            raise DomainError("levels must be strictly increasing inside (0, 1)")

    def vertices(self, level_index: int) -> np.ndarray:
        polys = self.curves[level_index]
        return np.vstack(polys) if polys else np.empty((0, 2))

    def n_nonempty(self) -> int:
        return sum(1 for c in self.curves if c)


def _check_levels(levels) -> list[float]:
    lv = sorted(float(v) for v in levels)
    if not lv or any(not (0 < v < 1) for v in lv) or len(set(lv)) != len(lv):
        raise DomainError("levels must be distinct values inside (0, 1)")
    return lv


def sweep_isocurves(
    dataset: LabeledDataset,
    trainer,
    levels=DEFAULT_LEVELS,
    grid: Grid2D | None = None,
    config: EstimatorConfig | None = None,
    jobs: int = 1,
    path: ReweightingPath | None = None,
) -> IsoCurveSet:
    """Trace one curve per level.

    Score-based models contribute the interpolated zero contour of their
    score; trees contribute the axis-aligned boundary between grid nodes of
    different predicted label.  A training failure at one level is recorded
    in ``errors`` and leaves that level empty.
    """
    if dataset.dim != 2:
        raise DomainError("iso-curves need 2-D data")
    config = config or EstimatorConfig()
    if path is None:
        path = ReweightingPath(dataset, Trainer(trainer) if isinstance(trainer, str) else trainer, config)
    grid = grid or Grid2D.around(dataset.points)
    levels = _check_levels(levels)
    pi = path.pi_plus
    thetas = [theta_for_level(p, pi) for p in levels]
    nodes = grid.nodes()

    def trace(theta):
        model = path.model(theta)
        if path.score_based:
            fld = np.asarray(score(model, nodes)).reshape(grid.nx, grid.ny)
            return extract_zero_contour(fld, grid)
        lab = np.where(np.asarray(score(model, nodes)) >= 0, 1, -1).reshape(grid.nx, grid.ny)
        return extract_label_boundary(lab, grid)

    def safe(theta):
        try:
            return trace(theta), None
        except Exception as exc:  # recorded per level; other levels proceed
            return [], f"{type(exc).__name__}: {exc}"

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(safe, thetas))
    else:
        results = [safe(t) for t in thetas]
    errors = {lv: err for lv, (_, err) in zip(levels, results) if err}
    return IsoCurveSet(levels, [c for c, _ in results], thetas, pi, path.kind, grid, errors)


def check_level_theta(curves: IsoCurveSet, atol: float = 1e-9) -> bool:
    back = [posterior_from_theta(t, curves.pi_plus) for t in curves.theta_per_level]
    return bool(np.allclose(back, curves.levels, rtol=0, atol=atol))


def curves_to_csv(curves: IsoCurveSet) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["level", "polyline_id", "vertex_id", "x", "y"])
    for lv, polys in zip(curves.levels, curves.curves):
        for pid, poly in enumerate(polys):
            for vid, (x, y) in enumerate(poly.tolist()):
                w.writerow([repr(lv), pid, vid, repr(x), repr(y)])
    return buf.getvalue()


def load_curves_csv(path) -> dict[float, list[np.ndarray]]:
    """Read ``level,polyline_id,vertex_id,x,y`` rows back into polylines per level."""
    text = Path(path).read_text(encoding="utf-8")
    rows = csv.reader(io.StringIO(text))
    header = next(rows, None)
    if header != ["level", "polyline_id", "vertex_id", "x", "y"]:
        raise ParseError("expected header level,polyline_id,vertex_id,x,y", 1)
    out: dict[float, dict[int, list]] = {}
    for lineno, row in enumerate(rows, start=2):
        if not row:
            continue
        if len(row) != 5:
            raise ParseError(f"expected 5 columns, found {len(row)}", lineno)
        try:
            lv, pid, x, y = float(row[0]), int(row[1]), float(row[3]), float(row[4])
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
        out.setdefault(lv, {}).setdefault(pid, []).append((x, y))
    return {lv: [np.array(polys[k]) for k in sorted(polys)] for lv, polys in sorted(out.items())}


def curves_to_svg(curves: IsoCurveSet, dataset: LabeledDataset | None = None, title: str = "") -> str:
    """Scatter of ``dataset`` with one labelled polyline group per level."""
    if curves.grid is not None:
        xr, yr = curves.grid.x_range, curves.grid.y_range
    elif dataset is not None:
        g = Grid2D.around(dataset.points)
        xr, yr = g.x_range, g.y_range
    else:
        raise DomainError("need a grid or a dataset to size the figure")
    fig = Figure(xr, yr, title=title or f"{curves.kind} iso-probability curves")
    if dataset is not None:
        fig.scatter(dataset.points, ["#c0392b" if y > 0 else "#2c3e50" for y in dataset.labels])
    for k, (lv, polys) in enumerate(zip(curves.levels, curves.curves)):
        fig.polylines(polys, f"{lv:g}", level_color(k))
    return fig.render()
