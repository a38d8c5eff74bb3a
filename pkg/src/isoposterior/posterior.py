"""Posterior probabilities from the class weighting that moves the boundary.

For a query point ``x`` we look for the effective positive proportion
``theta*`` at which the retrained classifier's separation surface passes
through ``x``.  On that surface the class-conditional density ratio equals
``(1 - theta*) / theta*``, so with the original positive proportion ``pi``
the posterior odds of the original model are::

    odds = ((1 - theta*) * pi) / (theta* * (1 - pi))

and the posterior is ``odds / (1 + odds)``.
"""

from __future__ import annotations

import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np

from .classifiers import Trainer, filter_support_vectors, score
from .classifiers.base import predict
from .dataset import LabeledDataset, derive_class_weights
from .errors import DomainError, EstimationError

__all__ = [
    "EstimatorConfig",
    "PosteriorEstimate",
    "ReweightingPath",
    "posterior_from_theta",
    "theta_for_level",
    "find_boundary_theta",
    "estimate_posterior",
    "estimate_many",
    "tree_flip_interval",
    "detect_degeneracy",
]

CONVERGED = "converged"
CLAMPED_LOW = "clamped_low"
CLAMPED_HIGH = "clamped_high"
DEGENERATE = "degenerate"


def _check_open_unit(name: str, v) -> None:
    a = np.asarray(v, dtype=float)
    if not np.all((a > 0.0) & (a < 1.0)):
        raise DomainError(f"{name} must lie in the open interval (0, 1)")


def posterior_from_theta(theta_star, pi_plus):
    """Posterior of "+" for a point whose boundary-crossing proportion is ``theta_star``.

    ``pi_plus`` is the positive proportion of the data the model was built
    on.  Works elementwise on arrays.

    >>> posterior_from_theta(0.25, 0.5)
    0.75
    """
    _check_open_unit("theta_star", theta_star)
    _check_open_unit("pi_plus", pi_plus)
    t = np.asarray(theta_star, dtype=float)
    p = np.asarray(pi_plus, dtype=float)
    num = (1.0 - t) * p
    out = num / (num + t * (1.0 - p))
    return float(out) if out.ndim == 0 else out


def theta_for_level(level, pi_plus):
    """Inverse of :func:`posterior_from_theta` in its first argument."""
    _check_open_unit("level", level)
    _check_open_unit("pi_plus", pi_plus)
    q = np.asarray(level, dtype=float)
    p = np.asarray(pi_plus, dtype=float)
    num = p * (1.0 - q)
    out = num / (num + q * (1.0 - p))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class EstimatorConfig:
    theta_bracket: tuple[float, float] = (0.01, 0.99)
    theta_tolerance: float = 1e-4
    score_tolerance: float = 1e-8
    degeneracy_scan_points: int = 99
    # svm only; off by default, see README
    filter_support_vectors: bool = False
    max_bisection_steps: int = 200

    def __post_init__(self):
        lo, hi = (float(v) for v in self.theta_bracket)
        if not (0.0 < lo < hi < 1.0):
            raise DomainError("theta_bracket must satisfy 0 < lo < hi < 1")
        object.__setattr__(self, "theta_bracket", (lo, hi))
        if not (self.theta_tolerance > 0 and self.score_tolerance > 0):
            raise DomainError("tolerances must be positive")
        if self.degeneracy_scan_points < 2:
            raise DomainError("degeneracy_scan_points must be >= 2")

    def filtering_for(self, kind: str) -> bool:
        return bool(self.filter_support_vectors) and kind == "svm"

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class PosteriorEstimate:
    """Result of a per-point estimate.

    ``probability`` is the point estimate.  ``interval`` is set for tree
    models (label-flip bounds) and for clamped estimates (one-sided bounds).
    ``candidates`` lists the posterior for every root in ``all_roots``.
    """

    probability: float
    theta_star: float
    bracket: tuple[float, float]
    status: str
    all_roots: tuple[float, ...] = ()
    candidates: tuple[float, ...] = ()
    interval: tuple[float, float] | None = None
    pi_plus: float = float("nan")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["bracket"] = list(self.bracket)
        d["all_roots"] = list(self.all_roots)
        d["candidates"] = list(self.candidates)
        d["interval"] = None if self.interval is None else list(self.interval)
        return d


class ReweightingPath:
    """Models retrained along the ``theta`` axis for one dataset, memoised.

    With support-vector filtering switched on, the svm estimation set is the
    support-vector subset of the original fit; ``pi_plus`` always refers to the
    estimation set, whose balanced (``theta = pi_plus``) model is the
    original model.  Models on the uniform scan grid are trained in order,
    each warm-started from its predecessor; off-grid svm fits warm-start from
    the nearest grid model, so results do not depend on query order.
    """

    def __init__(self, dataset: LabeledDataset, trainer: Trainer | Callable, config: EstimatorConfig | None = None):
        self.config = config or EstimatorConfig()
        self.full_dataset = dataset
        if isinstance(trainer, Trainer):
            trainer = trainer.resolved(dataset)
        self.trainer = trainer
        self.original_model = trainer(dataset)
        self.kind = getattr(self.original_model, "kind", "custom")
        self.filtered = self.config.filtering_for(self.kind) and isinstance(trainer, Trainer)
        self.dataset = filter_support_vectors(self.original_model, dataset) if self.filtered else dataset
        self.pi_plus = self.dataset.pi_plus
        lo, hi = self.config.theta_bracket
        self.grid = np.linspace(lo, hi, self.config.degeneracy_scan_points)
        self._cache: dict[float, object] = {}
        self._lock = threading.Lock()
        self._prepared = False

    @property
    def score_based(self) -> bool:
        return self.kind in ("svm", "logreg")

    def weights(self, theta: float):
        return derive_class_weights(theta, self.dataset.n_plus, self.dataset.n_minus)

    def _warm_start(self, theta: float, anchor_theta: float):
        anchor = self._cache.get(anchor_theta)
        if anchor is None or getattr(anchor, "dual", None) is None:
            return None
        new, old = self.weights(theta), self.weights(anchor_theta)
        # scaling every alpha by the smaller class ratio keeps the dual feasible
        return np.asarray(anchor.dual) * min(new.w_plus / old.w_plus, new.w_minus / old.w_minus)

    def _train(self, theta: float, anchor_theta: float | None):
        w = self.weights(theta)
        if self.kind == "svm" and anchor_theta is not None and isinstance(self.trainer, Trainer):
            return self.trainer(self.dataset, w, init=self._warm_start(theta, anchor_theta))
        return self.trainer(self.dataset, w)

    def prepare_scan(self) -> None:
        """Train the scan-grid models (idempotent, sequential)."""
        with self._lock:
            if self._prepared:
                return
            prev = None
            for t in self.grid.tolist():
                if t not in self._cache:
                    self._cache[t] = self._train(t, prev)
                prev = t
            self._prepared = True

    def model(self, theta: float):
        theta = float(theta)
        m = self._cache.get(theta)
        if m is not None:
            return m
        anchor = None
        if self._prepared:
            anchor = float(self.grid[int(np.argmin(np.abs(self.grid - theta)))])
        m = self._train(theta, anchor)
        with self._lock:
            return self._cache.setdefault(theta, m)

    def score(self, theta: float, x) -> float:
        s = score(self.model(theta), x)
        if not math.isfinite(s):
            raise EstimationError(f"non-finite score at theta={theta}")
        return s

    def label(self, theta: float, x) -> int:
        return predict(self.model(theta), x)


def _sign(g: float, tol: float) -> int:
    return 0 if abs(g) <= tol else (1 if g > 0 else -1)


def _bisect(g, a, b, ga, gb, config: EstimatorConfig):
    """Root of ``g`` in ``[a, b]`` given a sign change; returns (theta, (lo, hi))."""
    tol, stol = config.theta_tolerance, config.score_tolerance
    for _ in range(config.max_bisection_steps):
        if b - a <= tol:
            break
        mid = 0.5 * (a + b)
        gm = g(mid)
        if abs(gm) <= stol:
            return mid, (mid, mid)
        if (gm > 0) == (ga > 0):
            a, ga = mid, gm
        else:
            b, gb = mid, gm
    # secant point inside the final bracket
    theta = a + (b - a) * ga / (ga - gb) if ga != gb else 0.5 * (a + b)
    return min(max(theta, a), b), (a, b)


def _path_for(dataset, trainer, config, path):
    if path is not None:
        return path
    if isinstance(trainer, str):
        trainer = Trainer(trainer)
    return ReweightingPath(dataset, trainer, config)


@dataclass(frozen=True)
class BoundarySearch:
    theta_star: float
    bracket: tuple[float, float]
    status: str


def find_boundary_theta(x, trainer, dataset: LabeledDataset, config: EstimatorConfig | None = None,
                        path: ReweightingPath | None = None) -> BoundarySearch:
    """Bisection on ``g(theta) = score(model retrained at theta, x)`` over the bracket.

    When ``g`` keeps one sign over the whole bracket the boundary cannot be
    moved onto ``x``; the nearer end is returned with a clamped status and
    the bracket reaches out to 0 or 1 on that side.
    """
    config = config or EstimatorConfig()
    path = _path_for(dataset, trainer, config, path)
    if not path.score_based:
        raise DomainError("find_boundary_theta needs a score-based classifier (svm or logreg)")
    lo, hi = config.theta_bracket
    g = lambda t: path.score(t, x)  # noqa: E731
    glo, ghi = g(lo), g(hi)
    slo, shi = _sign(glo, config.score_tolerance), _sign(ghi, config.score_tolerance)
    if slo == 0:
        return BoundarySearch(lo, (lo, lo), CONVERGED)
    if shi == 0:
        return BoundarySearch(hi, (hi, hi), CONVERGED)
    if slo == shi:
        if slo > 0:
            return BoundarySearch(lo, (0.0, lo), CLAMPED_LOW)
        return BoundarySearch(hi, (hi, 1.0), CLAMPED_HIGH)
    theta, bracket = _bisect(g, lo, hi, glo, ghi, config)
    return BoundarySearch(theta, bracket, CONVERGED)


def _scan_roots(path: ReweightingPath, x, config: EstimatorConfig):
    path.prepare_scan()
    stol = config.score_tolerance
    grid = path.grid.tolist()
    vals = [path.score(t, x) for t in grid]
    g = lambda t: path.score(t, x)  # noqa: E731
    roots = []
    k = 0
    prev = None  # index of the last grid value with a definite sign
    while k < len(grid):
        s = _sign(vals[k], stol)
        if s == 0:
            run = k
            while run + 1 < len(grid) and _sign(vals[run + 1], stol) == 0:
                run += 1
            t = 0.5 * (grid[k] + grid[run])
            roots.append((t, (grid[k], grid[run])))
            k = run + 1
            prev = None
            continue
        if prev is not None and _sign(vals[prev], stol) != s:
            roots.append(_bisect(g, grid[prev], grid[k], vals[prev], vals[k], config))
        prev = k
        k += 1
    return roots, vals


def detect_degeneracy(x, trainer, dataset: LabeledDataset, config: EstimatorConfig | None = None,
                      path: ReweightingPath | None = None) -> list[float]:
    """Every theta in the bracket at which a retrained boundary passes through ``x``.

    ``g`` is sampled on the uniform scan grid and each sign-change cell is
    refined by bisection.  More than one root means that differently
    weighted boundaries cross at ``x``.
    """
    config = config or EstimatorConfig()
    path = _path_for(dataset, trainer, config, path)
    roots, _ = _scan_roots(path, x, config)
    return [t for t, _ in roots]


def estimate_posterior(x, trainer, dataset: LabeledDataset, config: EstimatorConfig | None = None,
                       path: ReweightingPath | None = None) -> PosteriorEstimate:
    """Estimate P(+|x) for the model trained on ``dataset``.

    Score-based classifiers: roots of ``g`` are located by the scan plus
    per-cell bisection.  One root gives a converged estimate; several give a
    degenerate one whose primary value uses the root nearest ``pi_plus``;
    none gives a one-sided bound at the bracket end.  Trees are delegated to
    :func:`tree_flip_interval`.
    """
    config = config or EstimatorConfig()
    path = _path_for(dataset, trainer, config, path)
    if not path.score_based:
        return tree_flip_interval(x, dataset, config, path=path)
    pi = path.pi_plus
    lo, hi = config.theta_bracket
    roots, vals = _scan_roots(path, x, config)
    if not roots:
        if vals[0] > 0:
            p = posterior_from_theta(lo, pi)
            return PosteriorEstimate(p, lo, (0.0, lo), CLAMPED_LOW, (), (), (p, 1.0), pi)
        p = posterior_from_theta(hi, pi)
        return PosteriorEstimate(p, hi, (hi, 1.0), CLAMPED_HIGH, (), (), (0.0, p), pi)
    thetas = [t for t, _ in roots]
    k = int(np.argmin([abs(t - pi) for t in thetas]))
    theta, bracket = roots[k]
    cands = tuple(posterior_from_theta(t, pi) for t in thetas)
    status = DEGENERATE if len(roots) > 1 else CONVERGED
    return PosteriorEstimate(cands[k], theta, bracket, status, tuple(thetas), cands, None, pi)


def tree_flip_interval(x, dataset: LabeledDataset, config: EstimatorConfig | None = None,
                       path: ReweightingPath | None = None, trainer: Trainer | None = None) -> PosteriorEstimate:
    """Bracket the theta at which the predicted label of ``x`` flips.

    Bisection runs on the label ``h(theta)`` and stops once the bracket
    ``[theta_lo, theta_hi]`` with ``h(theta_lo) != h(theta_hi)`` is no wider
    than the tolerance.  The posterior interval is
    ``[posterior(theta_hi), posterior(theta_lo)]``.  A constant label yields a
    one-sided bound (clamped status).
    """
    config = config or EstimatorConfig()
    path = _path_for(dataset, trainer or Trainer("tree"), config, path)
    pi = path.pi_plus
    lo, hi = config.theta_bracket
    h = lambda t: path.label(t, x)  # noqa: E731
    hlo, hhi = h(lo), h(hi)
    if hlo == hhi:
        if hlo > 0:
            p = posterior_from_theta(lo, pi)
            return PosteriorEstimate(0.5 * (p + 1.0), lo, (0.0, lo), CLAMPED_LOW, (), (), (p, 1.0), pi)
        p = posterior_from_theta(hi, pi)
        return PosteriorEstimate(0.5 * p, hi, (hi, 1.0), CLAMPED_HIGH, (), (), (0.0, p), pi)
    a, b = lo, hi
    for _ in range(config.max_bisection_steps):
        if b - a <= config.theta_tolerance:
            break
        mid = 0.5 * (a + b)
        if h(mid) == hlo:
            a = mid
        else:
            b = mid
    p_lo, p_hi = posterior_from_theta(b, pi), posterior_from_theta(a, pi)
    mid = 0.5 * (a + b)
    return PosteriorEstimate(0.5 * (p_lo + p_hi), mid, (a, b), CONVERGED, (mid,), (posterior_from_theta(mid, pi),),
                             (p_lo, p_hi), pi)


def estimate_many(points: Sequence, trainer, dataset: LabeledDataset, config: EstimatorConfig | None = None,
                  path: ReweightingPath | None = None, jobs: int = 1) -> list[PosteriorEstimate]:
    """Per-point estimates for many query points sharing one reweighting path."""
    config = config or EstimatorConfig()
    path = _path_for(dataset, trainer, config, path)
    if path.score_based:
        path.prepare_scan()
    pts = [np.asarray(p, dtype=float) for p in points]
    run = lambda p: estimate_posterior(p, None, path.full_dataset, config, path=path)  # noqa: E731
    if jobs <= 1:
        return [run(p) for p in pts]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run, pts))
