"""Class-weighted logistic regression fitted by damped Newton steps."""

from __future__ import annotations

import numpy as np

from ..dataset import ClassWeights, LabeledDataset
from .base import LinearModel, TrainConfig

__all__ = ["train_logreg", "logreg_loss_grad"]


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def logreg_loss_grad(theta, X1, y, c):
    """Weighted negative log-likelihood and its gradient in ``(w, b)``.

    ``X1`` is the design matrix with a trailing column of ones.
    """
    m = y * (X1 @ theta)
    loss = float(np.sum(c * np.logaddexp(0.0, -m)))
    r = c * y * _sigmoid(-m)
    return loss, -(X1.T @ r)


def train_logreg(
    dataset: LabeledDataset,
    weights: ClassWeights | None = None,
    config: TrainConfig | None = None,
) -> LinearModel:
    """Minimise ``sum_i c_i log(1 + exp(-y_i (w.x_i + b)))`` from zero.

    Newton directions are used while the Hessian is positive definite,
    otherwise the step falls back to the negative gradient; both are
    followed by an Armijo backtracking search.  When the data are linearly
    separable the loss has no minimiser: the iterate stops at the budget
    with ``info["separable"] = True`` and finite parameters.
    """
    config = config or TrainConfig()
    X = dataset.points
    n, d = X.shape
    X1 = np.hstack([X, np.ones((n, 1))])
    y = dataset.labels.astype(float)
    c = dataset.point_weights(weights)

    theta = np.zeros(d + 1)
    loss, grad = logreg_loss_grad(theta, X1, y, c)
    it = 0
    gnorm = float(np.max(np.abs(grad)))
    while gnorm > config.logreg_tol and it < config.logreg_max_iter:
        m = y * (X1 @ theta)
        p = _sigmoid(m)
        h = c * p * (1.0 - p)
        H = (X1 * h[:, None]).T @ X1
        try:
            L = np.linalg.cholesky(H)
            direction = -np.linalg.solve(L.T, np.linalg.solve(L, grad))
        except np.linalg.LinAlgError:
            direction = -grad
        slope = float(grad @ direction)
        if slope >= 0:
            direction, slope = -grad, -float(grad @ grad)
        step = 1.0
        while True:
            cand = theta + step * direction
            new_loss, new_grad = logreg_loss_grad(cand, X1, y, c)
            if new_loss <= loss + 1e-4 * step * slope or step < 1e-12:
                break
            step *= 0.5
        if new_loss > loss and step < 1e-12:
            break
        theta, loss, grad = cand, new_loss, new_grad
        gnorm = float(np.max(np.abs(grad)))
        it += 1

    margins = y * (X1 @ theta)
    # a strictly separating iterate means the infimum 0 is not attained
    separable = bool(np.all(margins > 0))
    info = {
        "grad_inf_norm": gnorm,
        "loss": loss,
        "iterations": it,
        "converged": bool(gnorm <= config.logreg_tol),
        "separable": separable,
    }
    return LinearModel("logreg", theta[:d], theta[d], info)
