"""Model containers, training configuration and the uniform scoring interface."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from typing import Any

import numpy as np

from ..errors import DomainError

KINDS = ("svm", "logreg", "tree")
SCORE_BASED = ("svm", "logreg")


@dataclass(frozen=True)
class TrainConfig:
    """Knobs for the three trainers.

    ``tree_ccp_alpha=None`` means "choose by weighted k-fold cross-validation"
    (see :func:`isoposterior.classifiers.tree.select_ccp_alpha`).
    """

    svm_C: float = 1.0
    svm_gap_tol: float = 1e-6
    svm_kkt_tol: float = 1e-9
    svm_max_iter: int = 1_000_000
    logreg_max_iter: int = 100
    logreg_tol: float = 1e-8
    tree_min_leaf_weight: float = 1.0
    tree_ccp_alpha: float | None = None
    tree_max_depth: int | None = None
    tree_cv_folds: int = 5
    tree_cv_seed: int = 0

    def __post_init__(self):
        positive = {
            "svm_C": self.svm_C,
            "svm_gap_tol": self.svm_gap_tol,
            "svm_kkt_tol": self.svm_kkt_tol,
            "svm_max_iter": self.svm_max_iter,
            "logreg_max_iter": self.logreg_max_iter,
            "logreg_tol": self.logreg_tol,
            "tree_min_leaf_weight": self.tree_min_leaf_weight,
        }
        for name, value in positive.items():
            if not value > 0:
                raise DomainError(f"{name} must be positive, got {value!r}")
        if self.tree_ccp_alpha is not None and self.tree_ccp_alpha < 0:
            raise DomainError("tree_ccp_alpha must be >= 0")
        if self.tree_max_depth is not None and self.tree_max_depth < 1:
            raise DomainError("tree_max_depth must be >= 1")
        if self.tree_cv_folds < 2:
            raise DomainError("tree_cv_folds must be >= 2")

    def to_dict(self) -> dict:
        return asdict(self)

    def with_(self, **changes) -> "TrainConfig":
        return replace(self, **changes)


def _as_points(x, dim: int) -> tuple[np.ndarray, bool]:
    X = np.asarray(x, dtype=float)
    single = X.ndim <= 1
    X = np.atleast_2d(X)
    if single and dim == 1 and X.shape == (1, X.size) and X.size != 1:
        X = X.reshape(-1, 1)
        single = False
    if X.shape[-1] != dim:
        raise DomainError(f"point dimension {X.shape[-1]} does not match model dimension {dim}")
    return X, single


@dataclass(frozen=True, eq=False)
class LinearModel:
    """Affine scorer ``w.x + b``, produced by the svm and logreg trainers.

    ``info`` carries solver diagnostics (duality gap, gradient norm,
    iteration counts). ``dual`` holds the SVM dual variables, used only for
    warm starts and never serialised.
    """

    kind: str
    coef: np.ndarray
    intercept: float
    info: dict = field(default_factory=dict)
    dual: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        w = np.array(self.coef, dtype=float).ravel()
        w.setflags(write=False)
        object.__setattr__(self, "coef", w)
        object.__setattr__(self, "intercept", float(self.intercept))
        if self.kind not in SCORE_BASED:
            raise DomainError(f"linear model kind must be svm or logreg, got {self.kind!r}")
        if not (np.all(np.isfinite(w)) and np.isfinite(self.intercept)):
            raise DomainError("model parameters must be finite")

    @property
    def dim(self) -> int:
        return len(self.coef)

    def decision_function(self, X) -> np.ndarray:
        X, _ = _as_points(X, self.dim)
        return X @ self.coef + self.intercept

    def to_dict(self) -> dict:
        info = {k: v for k, v in self.info.items() if isinstance(v, (int, float, bool, str))}
        return {"kind": self.kind, "coef": self.coef.tolist(), "intercept": self.intercept, "info": info}


def score(model, x):
    """Signed score; zero on the separation surface.

    Accepts a single point (returns a float) or an ``(m, d)`` array.
    """
    X, single = _as_points(x, model.dim)
    s = model.decision_function(X)
    return float(s[0]) if single else s


def predict(model, x):
    """Predicted label in {+1, -1}; an exact zero score maps to +1."""
    s = np.asarray(score(model, x))
    lab = np.where(s >= 0, 1, -1)
    return int(lab) if lab.ndim == 0 else lab


def model_to_dict(model) -> dict:
    return model.to_dict()


def model_from_dict(d: dict):
    kind = d.get("kind")
    if kind in SCORE_BASED:
        return LinearModel(kind, np.asarray(d["coef"], dtype=float), float(d["intercept"]), dict(d.get("info", {})))
    if kind == "tree":
        from .tree import TreeModel

        return TreeModel.from_dict(d)
    raise DomainError(f"unknown model kind {kind!r}")


def json_safe(obj: Any):
    if isinstance(obj, dict):
        return {k: json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_safe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj
