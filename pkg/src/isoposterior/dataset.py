"""Labelled point sets, class reweighting and the synthetic Gaussian generator.

Reweighting is expressed through a single scalar, the effective positive
proportion ``theta``.  The total weighted mass of the data stays equal to the
number of points, so the pair of class multipliers is fully determined by
``theta``::

    w_plus  = theta       * (n_plus + n_minus) / n_plus
    w_minus = (1 - theta) * (n_plus + n_minus) / n_minus

Gaussian samples are drawn with ``numpy.random.default_rng(seed)`` (PCG64).
The "+" class is drawn first, then the "-" class; each block is
``mu + Z @ L.T`` where ``Z`` holds standard normals of shape
``(n_per_class, d)`` and ``L`` is the lower Cholesky factor of ``cov``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError, ParseError

__all__ = [
    "LabeledDataset",
    "ClassWeights",
    "GaussianSpec",
    "derive_class_weights",
    "gen_gaussian",
    "load_dataset",
    "save_dataset",
    "dumps_dataset",
    "loads_dataset",
    "load_spec",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Points in R^d with labels in {+1, -1} and positive per-point weights."""

    points: np.ndarray
    labels: np.ndarray
    base_weights: np.ndarray | None = None

    def __post_init__(self):
        X = np.asarray(self.points, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2:
            raise DomainError("points must be a 2-D array (n, d)")
        y = np.asarray(self.labels)
        if y.ndim != 1 or len(y) != len(X):
            raise DomainError("labels must be 1-D with one entry per point")
        if not np.all((y == 1) | (y == -1)):
            raise DomainError("labels must be +1 or -1")
        y = y.astype(np.int64)
        if self.base_weights is None:
            w = np.ones(len(X))
        else:
            w = np.asarray(self.base_weights, dtype=float)
        if w.shape != y.shape:
            raise DomainError("base_weights must have one entry per point")
        if len(X) < 2:
            raise DomainError("a dataset needs at least 2 points")
        if not (np.any(y == 1) and np.any(y == -1)):
            raise DomainError("both labels must be present")
        if not np.all(np.isfinite(X)):
            raise DomainError("points must be finite")
        if not np.all(w > 0) or not np.all(np.isfinite(w)):
            raise DomainError("base_weights must be finite and > 0")
        object.__setattr__(self, "points", _frozen(X))
        object.__setattr__(self, "labels", _frozen(y))
        object.__setattr__(self, "base_weights", _frozen(w))

    def __len__(self) -> int:
        return len(self.labels)

    def __eq__(self, other) -> bool:
        if not isinstance(other, LabeledDataset):
            return NotImplemented
        return (
            self.points.shape == other.points.shape
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(self.base_weights, other.base_weights)
        )

    __hash__ = None  # type: ignore[assignment]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def n_plus(self) -> int:
        return int(np.count_nonzero(self.labels == 1))

    @property
    def n_minus(self) -> int:
        return int(np.count_nonzero(self.labels == -1))

    @property
    def pi_plus(self) -> float:
        """Observed positive proportion n_plus / n."""
        return self.n_plus / len(self)

    def subset(self, mask) -> "LabeledDataset":
        mask = np.asarray(mask)
        return LabeledDataset(self.points[mask], self.labels[mask], self.base_weights[mask])

    def point_weights(self, weights: "ClassWeights | None" = None) -> np.ndarray:
        """Per-point training weights: class multiplier times base weight."""
        if weights is None:
            return np.array(self.base_weights)
        mult = np.where(self.labels == 1, weights.w_plus, weights.w_minus)
        return mult * self.base_weights

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.points.min(axis=0), self.points.max(axis=0)


@dataclass(frozen=True)
class ClassWeights:
    """Per-class multipliers derived from an effective positive proportion."""

    w_plus: float
    w_minus: float
    theta: float


def derive_class_weights(theta: float, n_plus: int, n_minus: int) -> ClassWeights:
    """Class multipliers that give positive share ``theta`` at fixed total mass.

    >>> derive_class_weights(0.75, 1000, 1000)
    ClassWeights(w_plus=1.5, w_minus=0.5, theta=0.75)
    """
    theta = float(theta)
    if not (0.0 < theta < 1.0) or math.isnan(theta):
        raise DomainError(f"theta must lie in (0, 1), got {theta!r}")
    if n_plus < 1 or n_minus < 1:
        raise DomainError("both classes need at least one point")
    n = n_plus + n_minus
    return ClassWeights(w_plus=theta * n / n_plus, w_minus=(1.0 - theta) * n / n_minus, theta=theta)


@dataclass(frozen=True)
class GaussianSpec:
    """Two Gaussians with a shared covariance; the toy-data generating process."""

    mu_plus: tuple = (2.0, 0.0)
    mu_minus: tuple = (0.0, 0.0)
    cov: tuple = ((1.0, 0.0), (0.0, 1.0))
    n_per_class: int = 1000
    prior_plus: float = 0.5
    seed: int = 0
    _chol: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        mp = np.asarray(self.mu_plus, dtype=float).ravel()
        mm = np.asarray(self.mu_minus, dtype=float).ravel()
        cov = np.asarray(self.cov, dtype=float)
        d = len(mp)
        if len(mm) != d:
            raise DomainError("mu_minus: dimension differs from mu_plus")
        if cov.shape != (d, d):
            raise DomainError(f"cov: expected shape ({d}, {d}), got {cov.shape}")
        if not np.all(np.isfinite(cov)) or not np.allclose(cov, cov.T, rtol=0, atol=1e-12):
            raise DomainError("cov: matrix must be finite and symmetric")
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            raise DomainError("cov: matrix is not positive definite") from None
        if int(self.n_per_class) != self.n_per_class or self.n_per_class < 1:
            raise DomainError("n_per_class: must be a positive integer")
        if not (0.0 < self.prior_plus < 1.0):
            raise DomainError("prior_plus: must lie in (0, 1)")
        object.__setattr__(self, "mu_plus", tuple(mp.tolist()))
        object.__setattr__(self, "mu_minus", tuple(mm.tolist()))
        object.__setattr__(self, "cov", tuple(map(tuple, cov.tolist())))
        object.__setattr__(self, "n_per_class", int(self.n_per_class))
        object.__setattr__(self, "_chol", _frozen(chol))

    def to_dict(self) -> dict:
        return {
            "mu_plus": list(self.mu_plus),
            "mu_minus": list(self.mu_minus),
            "cov": [list(r) for r in self.cov],
            "n_per_class": self.n_per_class,
            "prior_plus": self.prior_plus,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GaussianSpec":
        known = {"mu_plus", "mu_minus", "cov", "n_per_class", "prior_plus", "seed"}
        unknown = set(d) - known
        if unknown:
            raise DomainError(f"unknown spec field(s): {', '.join(sorted(unknown))}")
        return cls(**d)


def gen_gaussian(spec: GaussianSpec) -> LabeledDataset:
    """Draw ``n_per_class`` points from each Gaussian, "+" block first."""
    rng = np.random.default_rng(spec.seed)
    L = spec._chol
    d = len(spec.mu_plus)
    n = spec.n_per_class
    xp = np.asarray(spec.mu_plus) + rng.standard_normal((n, d)) @ L.T
    xm = np.asarray(spec.mu_minus) + rng.standard_normal((n, d)) @ L.T
    labels = np.concatenate([np.ones(n, dtype=np.int64), -np.ones(n, dtype=np.int64)])
    return LabeledDataset(np.vstack([xp, xm]), labels)


def load_spec(path) -> GaussianSpec:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno) from None
    if not isinstance(raw, dict):
        raise ParseError("spec must be a JSON object")
    try:
        return GaussianSpec.from_dict(raw)
    except TypeError as exc:
        raise DomainError(str(exc)) from None


# -- CSV ---------------------------------------------------------------------

_LABELS = {"+1": 1, "-1": -1}


def dumps_dataset(dataset: LabeledDataset) -> str:
    """CSV text; floats use the shortest repr that round-trips exactly."""
    d = dataset.dim
    with_w = not np.all(dataset.base_weights == 1.0)
    header = [f"x{i + 1}" for i in range(d)] + ["label"] + (["weight"] if with_w else [])
    out = [",".join(header)]
    for x, y, w in zip(dataset.points.tolist(), dataset.labels.tolist(), dataset.base_weights.tolist()):
        row = [repr(v) for v in x] + ["+1" if y == 1 else "-1"]
        if with_w:
            row.append(repr(w))
        out.append(",".join(row))
    return "\n".join(out) + "\n"


def save_dataset(dataset: LabeledDataset, path) -> None:
    Path(path).write_bytes(dumps_dataset(dataset).encode("utf-8"))


def load_dataset(path) -> LabeledDataset:
    """Read the ``x1,...,xd,label[,weight]`` CSV format."""
    text = Path(path).read_bytes().decode("utf-8")
    return loads_dataset(text)


def loads_dataset(text: str) -> LabeledDataset:
    rows = csv.reader(io.StringIO(text, newline=""))
    try:
        header = next(rows)
    except StopIteration:
        raise ParseError("no data rows") from None
    header = [h.strip() for h in header]
    if "label" not in header:
        raise ParseError("header has no 'label' column", 1)
    li = header.index("label")
    feats = header[:li]
    if not feats or feats != [f"x{i + 1}" for i in range(len(feats))]:
        raise ParseError("header must start with x1,...,xd", 1)
    tail = header[li + 1:]
    if tail not in ([], ["weight"]):
        raise ParseError(f"unexpected columns after label: {tail}", 1)
    ncol = len(header)
    X, Y, W = [], [], []
    for lineno, row in enumerate(rows, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != ncol:
            raise ParseError(f"expected {ncol} columns, found {len(row)}", lineno)
        tok = row[li].strip()
        if tok not in _LABELS:
            raise ParseError(f"unknown label token {tok!r} (expected +1 or -1)", lineno)
        try:
            X.append([float(v) for v in row[:li]])
            W.append(float(row[li + 1]) if tail else 1.0)
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
        Y.append(_LABELS[tok])
    if not X:
        raise ParseError("no data rows")
    try:
        return LabeledDataset(np.array(X), np.array(Y), np.array(W))
    except DomainError as exc:
        raise ParseError(str(exc)) from None

