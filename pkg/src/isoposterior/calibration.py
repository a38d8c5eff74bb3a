"""Score-to-posterior tables and isotonic (pool-adjacent-violators) repair."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .classifiers import score
from .errors import DomainError
from .isocurves import IsoCurveSet
from .svg import Figure

__all__ = ["CalibrationTable", "MonotoneMap", "build_calibration_table", "isotonic_fit", "evaluate_map"]


@dataclass(frozen=True)
class CalibrationTable:
    """Rows of ``(score, probability, level_source)`` at a probability step."""

    scores: np.ndarray
    probabilities: np.ndarray
    sources: tuple[str, ...]
    resolution: float
    omitted: tuple[float, ...] = ()

    def __post_init__(self):
        if not (np.all(np.isfinite(self.scores)) and np.all(np.isfinite(self.probabilities))):
            raise DomainError("calibration rows must be finite")
        if not self.resolution > 0:
            raise DomainError("resolution must be positive")

    def __len__(self) -> int:
        return len(self.scores)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["score", "probability"])
        for s, p in zip(self.scores.tolist(), self.probabilities.tolist()):
            w.writerow([repr(s), repr(p)])
        return buf.getvalue()

    def to_svg(self, mapping: MonotoneMap | None = None, title: str = "") -> str:
        """Scatter of the rows plus the step plot of ``mapping`` (isotonic fit by default)."""
        if len(self) == 0:
            raise DomainError("empty calibration table")
        mapping = mapping or isotonic_fit(self.scores, self.probabilities)
        lo, hi = float(self.scores.min()), float(self.scores.max())
        pad = 0.05 * (hi - lo) if hi > lo else 1.0
        fig = Figure((lo - pad, hi + pad), (0.0, 1.0), title=title or "score vs estimated probability",
                     xlabel="score", ylabel="probability")
        fig.scatter(np.column_stack([self.scores, self.probabilities]), ["#1f77b4"] * len(self), radius=3, opacity=0.9)
        fig.polylines([np.column_stack([mapping.breakpoints, mapping.values])], "isotonic", "#d62728", step=True)
        return fig.render()


def build_calibration_table(model, curves: IsoCurveSet) -> CalibrationTable:
    """Median original-model score along each iso-curve, paired with its level.

    ``model`` must be the unreweighted (``theta = pi_plus``) svm or logreg
    model of the data the curves were swept on.  Levels without a contour
    are omitted and listed in ``omitted``.
    """
    if getattr(model, "kind", None) not in ("svm", "logreg"):
        raise DomainError("score tables need an svm or logreg model; trees output no scores")
    s, p, omitted = [], [], []
    for k, lv in enumerate(curves.levels):
        V = curves.vertices(k)
        if len(V) == 0:
            omitted.append(lv)
            continue
        s.append(float(np.median(score(model, V))))
        p.append(lv)
    lv = np.asarray(curves.levels)
    resolution = float(np.min(np.diff(lv))) if len(lv) > 1 else 1.0
    return CalibrationTable(np.array(s), np.array(p), ("theta",) * len(s), resolution, tuple(omitted))


@dataclass(frozen=True)
class MonotoneMap:
    """Nondecreasing piecewise-linear map, clamped outside its breakpoints."""

    breakpoints: np.ndarray
    values: np.ndarray
    weights: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        b = np.asarray(self.breakpoints, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if b.shape != v.shape or b.ndim != 1 or len(b) == 0:
            raise DomainError("breakpoints and values must be equal-length 1-D arrays")
        if np.any(np.diff(b) <= 0):
            raise DomainError("breakpoints must be strictly increasing")
        if np.any(np.diff(v) < 0):
            raise DomainError("values must be nondecreasing")
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "values", v)

    def __call__(self, s):
        return evaluate_map(self, s)


def isotonic_fit(scores, probabilities, weights=None) -> MonotoneMap:
    """Weighted least-squares nondecreasing fit by pool-adjacent-violators.

    Equal scores are merged first into their weighted mean.

    >>> isotonic_fit([1, 2], [0.8, 0.6]).values
    array([0.7, 0.7])
    """
    s = np.asarray(scores, dtype=float).ravel()
    p = np.asarray(probabilities, dtype=float).ravel()
    if len(s) == 0:
        raise DomainError("isotonic_fit needs at least one pair")
    if len(p) != len(s):
        raise DomainError("scores and probabilities differ in length")
    w = np.ones_like(s) if weights is None else np.asarray(weights, dtype=float).ravel()
    if len(w) != len(s) or np.any(w <= 0):
        raise DomainError("weights must be positive, one per pair")

    order = np.argsort(s, kind="stable")
    s, p, w = s[order], p[order], w[order]
    keys, start = np.unique(s, return_index=True)
    wsum = np.add.reduceat(w, start)
    mean = np.add.reduceat(w * p, start) / wsum

    # blocks as (value, weight, count); merge while the last two violate order
    vals, wts, cnts = [], [], []
    for m, ww in zip(mean.tolist(), wsum.tolist()):
        vals.append(m)
        wts.append(ww)
        cnts.append(1)
        while len(vals) > 1 and vals[-2] > vals[-1]:
            v2, w2, c2 = vals.pop(), wts.pop(), cnts.pop()
            tot = wts[-1] + w2
            vals[-1] = (vals[-1] * wts[-1] + v2 * w2) / tot
            wts[-1] = tot
            cnts[-1] += c2
    fitted = np.repeat(vals, cnts)
    return MonotoneMap(keys, fitted, wsum)


def evaluate_map(mapping: MonotoneMap, s):
    """Linear interpolation between breakpoints, end values outside."""
    out = np.interp(np.asarray(s, dtype=float), mapping.breakpoints, mapping.values)
    return float(out) if np.ndim(out) == 0 else out
