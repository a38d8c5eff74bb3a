"""Linear soft-margin SVM with per-point box constraints.

Primal::

    min_{w,b}  1/2 ||w||^2 + sum_i C_i * max(0, 1 - y_i (w.x_i + b))

with ``C_i = C * (class multiplier) * base_weight_i``.  The dual is solved
by two-coordinate ascent (SMO with second-order working-set selection, Fan,
Chen & Lin 2005), which is the smallest coordinate step compatible with the
equality constraint ``sum_i alpha_i y_i = 0`` that an unregularised intercept
imposes.  Sweeps are deterministic.  Once the active set has settled, the
free-vector KKT system is solved directly to polish ``(w, b)`` to machine
precision.
"""

from __future__ import annotations

import numba
import numpy as np

from ..dataset import ClassWeights, LabeledDataset
from ..errors import ConvergenceError, EstimationError
from .base import LinearModel, TrainConfig

__all__ = ["train_svm", "filter_support_vectors", "svm_objectives", "MARGIN_SLACK"]

MARGIN_SLACK = 1e-8
_TAU = 1e-12


@numba.njit(cache=True, nogil=True)
def _smo(X, y, C, alpha, w, eps, max_iter):
    n, d = X.shape
    v = np.empty(n)
    it = 0
    m = 0.0
    M = 0.0
    while it < max_iter:
        # v_t = -y_t * grad_t = y_t - w.x_t
        m = -np.inf
        i = -1
        for t in range(n):
            s = 0.0
            for k in range(d):
                s += w[k] * X[t, k]
            v[t] = y[t] - s
            up = (alpha[t] < C[t]) if y[t] > 0 else (alpha[t] > 0.0)
            if up and v[t] > m:
                m = v[t]
                i = t
        M = np.inf
        j = -1
        best = np.inf
        for t in range(n):
            low = (alpha[t] > 0.0) if y[t] > 0 else (alpha[t] < C[t])
            if not low:
                continue
            if v[t] < M:
                M = v[t]
            gain = m - v[t]
            if gain > 0.0:
                a = 0.0
                for k in range(d):
                    diff = X[i, k] - X[t, k]
                    a += diff * diff
                if a <= 0.0:
                    a = _TAU
                obj = -gain * gain / a
                if obj < best:
                    best = obj
                    j = t
        if i < 0 or j < 0 or m - M <= eps:
            break
        a = 0.0
        for k in range(d):
            diff = X[i, k] - X[j, k]
            a += diff * diff
        if a <= 0.0:
            a = _TAU
        step = (m - v[j]) / a
        lim_i = C[i] - alpha[i] if y[i] > 0 else alpha[i]
        lim_j = alpha[j] if y[j] > 0 else C[j] - alpha[j]
        step = min(step, lim_i, lim_j)
        hit_i = step >= lim_i
        hit_j = step >= lim_j
        if y[i] > 0:
            alpha[i] = C[i] if hit_i else alpha[i] + step
        else:
            alpha[i] = 0.0 if hit_i else alpha[i] - step
        if y[j] > 0:
            alpha[j] = 0.0 if hit_j else alpha[j] - step
        else:
            alpha[j] = C[j] if hit_j else alpha[j] + step
        for k in range(d):
            w[k] += step * (X[i, k] - X[j, k])
        it += 1
    return it, m, M


def svm_objectives(X, y, C, alpha, w, b) -> tuple[float, float]:
    """Primal and dual objective values at the given iterate."""
    margins = y * (X @ w + b)
    primal = 0.5 * w @ w + float(np.sum(C * np.maximum(0.0, 1.0 - margins)))
    dual = float(np.sum(alpha)) - 0.5 * w @ w
    return primal, dual


def _intercept(X, y, C, alpha, w, tol):
    v = y - X @ w
    free = (alpha > tol * C) & (alpha < (1 - tol) * C)
    if np.any(free):
        return float(np.mean(v[free]))
    up = np.where(y > 0, alpha < C, alpha > 0)
    low = np.where(y > 0, alpha > 0, alpha < C)
    m = v[up].max() if np.any(up) else -np.inf
    M = v[low].min() if np.any(low) else np.inf
    if np.isfinite(m) and np.isfinite(M):
        return 0.5 * (m + M)
    return float(m if np.isfinite(m) else M)


def _polish(X, y, C, alpha, tol=1e-9):
    """Solve the equality-constrained KKT system on the current free set."""
    at_upper = alpha >= (1 - tol) * C
    free = (alpha > tol * C) & ~at_upper
    if not np.any(free):
        return None
    Xf, yf = X[free], y[free]
    k = len(yf)
    w_fixed = (C[at_upper] * y[at_upper]) @ X[at_upper]
    A = np.zeros((k + 1, k + 1))
    A[:k, :k] = (Xf @ Xf.T) * yf[None, :]
    A[:k, k] = 1.0
    A[k, :k] = yf
    rhs = np.empty(k + 1)
    rhs[:k] = yf - Xf @ w_fixed
    rhs[k] = -float(np.sum(C[at_upper] * y[at_upper]))
    sol, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    af, b = sol[:k], float(sol[k])
    if np.any(af < 0) or np.any(af > C[free]):
        return None
    new = np.where(at_upper, C, 0.0)
    new[free] = af
    return new, b


def train_svm(
    dataset: LabeledDataset,
    weights: ClassWeights | None = None,
    config: TrainConfig | None = None,
    init_alpha: np.ndarray | None = None,
) -> LinearModel:
    """Train the class-weighted linear SVM.

    ``init_alpha`` warm-starts the dual; it must be feasible for the new box
    (``0 <= alpha_i <= C_i`` and ``sum alpha_i y_i = 0``).

    Raises
    ------
    ConvergenceError
        If the relative duality gap is still above ``config.svm_gap_tol``
        when the iteration budget runs out.  ``exc.best`` holds the model.
    """
    config = config or TrainConfig()
    X = np.ascontiguousarray(dataset.points, dtype=float)
    y = dataset.labels.astype(float)
    C = config.svm_C * dataset.point_weights(weights)
    alpha = np.zeros(len(y)) if init_alpha is None else np.clip(np.array(init_alpha, dtype=float), 0.0, C)
    w = (alpha * y) @ X

    eps = max(config.svm_kkt_tol, 1e-3) if init_alpha is None else config.svm_kkt_tol
    total = 0
    best = None
    while True:
        budget = config.svm_max_iter - total
        it, _, _ = _smo(X, y, C, alpha, w, eps, budget)
        total += it
        w = (alpha * y) @ X
        b = _intercept(X, y, C, alpha, w, 1e-12)
        primal, dual = svm_objectives(X, y, C, alpha, w, b)
        pol = _polish(X, y, C, alpha)
        if pol is not None:
            a2, b2 = pol
            w2 = (a2 * y) @ X
            p2, d2 = svm_objectives(X, y, C, a2, w2, b2)
            if p2 - d2 <= primal - dual:
                alpha, w, b, primal, dual = a2, w2, b2, p2, d2
        gap = max(primal - dual, 0.0)
        rel = gap / max(primal, 1e-300)
        best = (alpha, w, b, gap, rel)
        converged = rel <= config.svm_gap_tol and eps <= config.svm_kkt_tol
        if converged or (rel <= 1e-14 and eps <= 1e-6):
            break
        if total >= config.svm_max_iter:
            alpha, w, b, gap, rel = best
            model = LinearModel("svm", w, b, {"gap": float(gap), "rel_gap": float(rel), "iterations": total, "converged": False}, alpha)
            raise ConvergenceError("SVM dual ascent hit the iteration budget", best=model, gap=rel)
        eps = max(eps * 1e-3, config.svm_kkt_tol)
    alpha, w, b, gap, rel = best
    info = {
        "gap": float(gap),
        "rel_gap": float(rel),
        "primal": float(primal),
        "iterations": total,
        "n_support": int(np.count_nonzero(alpha > 0)),
        "converged": True,
    }
    dual_alpha = alpha.copy()
    dual_alpha.setflags(write=False)
    return LinearModel("svm", w, b, info, dual_alpha)


def filter_support_vectors(model: LinearModel, dataset: LabeledDataset) -> LabeledDataset:
    """Keep the points on or inside the margin, ``y (w.x + b) <= 1 + 1e-8``."""
    if model.kind != "svm":
        raise EstimationError("support-vector filtering needs an svm model")
    margins = dataset.labels * (dataset.points @ model.coef + model.intercept)
    keep = margins <= 1.0 + MARGIN_SLACK
    if not (np.any(keep & (dataset.labels == 1)) and np.any(keep & (dataset.labels == -1))):
        raise EstimationError("support-vector filtering would leave a class empty")
    return dataset.subset(keep)
