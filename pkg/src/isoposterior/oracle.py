"""Bayes posterior for two Gaussian classes with a shared covariance."""

from __future__ import annotations

import math

import numpy as np

from .dataset import GaussianSpec
from .errors import DomainError

__all__ = ["GaussianOracle", "true_posterior", "density_ratio"]


class GaussianOracle:
    """Ground truth for data drawn from a :class:`GaussianSpec`.

    The log density ratio is affine, ``log f(x|+)/f(x|-) = a.x + c0`` with
    ``a = inv(cov) (mu_plus - mu_minus)`` and
    ``c0 = -(mu_plus' inv(cov) mu_plus - mu_minus' inv(cov) mu_minus) / 2``;
    the posterior log-odds add ``log(prior_plus / prior_minus)``.
    """

    def __init__(self, spec: GaussianSpec, prior_plus: float | None = None):
        self.spec = spec
        cov = np.asarray(spec.cov, dtype=float)
        mp = np.asarray(spec.mu_plus, dtype=float)
        mm = np.asarray(spec.mu_minus, dtype=float)
        try:
            inv = np.linalg.inv(cov)
        except np.linalg.LinAlgError:
            raise DomainError("covariance is singular") from None
        if not np.all(np.isfinite(inv)) or np.linalg.cond(cov) > 1e14:
            raise DomainError("covariance is singular")
        self.prior_plus = spec.prior_plus if prior_plus is None else float(prior_plus)
        if not 0 < self.prior_plus < 1:
            raise DomainError("prior_plus must lie in (0, 1)")
        self.direction = inv @ (mp - mm)
        self.log_ratio_offset = -0.5 * (mp @ inv @ mp - mm @ inv @ mm)
        self.log_prior_odds = math.log(self.prior_plus / (1.0 - self.prior_plus))

    @property
    def dim(self) -> int:
        return len(self.direction)

    def _lin(self, x):
        X = np.asarray(x, dtype=float)
        if X.shape[-1] != self.dim:
            raise DomainError(f"point dimension {X.shape[-1]} does not match oracle dimension {self.dim}")
        return X @ self.direction + self.log_ratio_offset

    def log_density_ratio(self, x):
        return self._lin(x)

    def density_ratio(self, x):
        out = np.exp(self._lin(x))
        return float(out) if np.ndim(out) == 0 else out

    def true_posterior(self, x):
        z = self._lin(x) + self.log_prior_odds
        out = 0.5 * (1.0 + np.tanh(0.5 * z))
        return float(out) if np.ndim(out) == 0 else out


def true_posterior(oracle: GaussianOracle, x):
    return oracle.true_posterior(x)


def density_ratio(oracle: GaussianOracle, x):
    return oracle.density_ratio(x)
