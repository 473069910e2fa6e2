"""Exact Gaussian-process regression with a fixed-lengthscale Matérn kernel.

Observations are standardized to zero mean and unit variance before
fitting, so the fixed output variance means the same thing on every
problem. The lengthscale is never optimized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.spatial.distance import cdist

__all__ = [
    "MaternKernel",
    "GpModel",
    "Prediction",
    "ConditioningError",
    "fit",
    "mean_posterior_variance",
]

_SQRT3 = math.sqrt(3.0)
_SQRT5 = math.sqrt(5.0)


class ConditioningError(RuntimeError):
    """The Gram matrix could not be factorized even after jitter escalation."""


@dataclass(frozen=True)
class MaternKernel:
    nu: float = 1.5
    lengthscale: float = 2.0
    output_variance: float = 1.0

    def __post_init__(self):
        if self.nu not in (0.5, 1.5, 2.5):
            raise ValueError(f"nu must be one of 1/2, 3/2, 5/2, got {self.nu}")
        if not self.lengthscale > 0:
            raise ValueError("lengthscale must be positive")
        if not self.output_variance > 0:
            raise ValueError("output_variance must be positive")

    def __call__(self, r):
        """Covariance as a function of (non-negative) Euclidean distance."""
        r = np.asarray(r, dtype=float)
        if self.nu == 0.5:
            k = np.exp(-r / self.lengthscale)
        elif self.nu == 1.5:
            s = _SQRT3 * r / self.lengthscale
            k = (1.0 + s) * np.exp(-s)
        else:
            s = _SQRT5 * r / self.lengthscale
            k = (1.0 + s + s * s / 3.0) * np.exp(-s)
        return self.output_variance * k

    def gram(self, A, B=None) -> np.ndarray:
        A = np.atleast_2d(np.asarray(A, dtype=float))
        if B is None:
            K = self(cdist(A, A))
            # enforce exact symmetry; cdist is symmetric but keep the guarantee explicit
            return np.triu(K) + np.triu(K, 1).T
        B = np.atleast_2d(np.asarray(B, dtype=float))
        return self(cdist(A, B))


def kernel_eval(kernel: MaternKernel, r: float) -> float:
    if r < 0:
        raise ValueError("distance must be non-negative")
    return float(kernel(r))


@dataclass(frozen=True)
class Prediction:
    """Posterior over a batch of candidates, in the model's standardized scale."""

    mean: np.ndarray
    variance: np.ndarray
    y_mean: float
    y_std: float

    @property
    def std(self) -> np.ndarray:
        return np.sqrt(self.variance)

    def raw_mean(self) -> np.ndarray:
        return self.mean * self.y_std + self.y_mean


@dataclass(frozen=True, eq=False)
class GpModel:
    kernel: MaternKernel
    train_x: np.ndarray
    train_y_raw: np.ndarray
    y_mean: float
    y_std: float
    noise: float
    jitter: float
    chol: np.ndarray
    alpha: np.ndarray

    @property
    def n(self) -> int:
        return len(self.train_y_raw)

    def standardize(self, y):
        return (np.asarray(y, dtype=float) - self.y_mean) / self.y_std

    def predict(self, X) -> Prediction:
        """Posterior mean and variance at each row of ``X``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        prior_var = np.full(len(X), self.kernel.output_variance)
        if self.n == 0:
            return Prediction(np.zeros(len(X)), prior_var, self.y_mean, self.y_std)
        Ks = self.kernel.gram(X, self.train_x)
        mean = Ks @ self.alpha
        v = solve_triangular(self.chol, Ks.T, lower=True, check_finite=False)
        var = prior_var - np.einsum("ij,ij->j", v, v)
        return Prediction(mean, np.maximum(var, 0.0), self.y_mean, self.y_std)


def fit(
    kernel: MaternKernel,
    X,
    y_raw,
    noise: float = 0.0,
    jitter: float = 1e-6,
    max_escalations: int = 6,
) -> GpModel:
    """Fit from scratch on normalized inputs ``X`` and raw observations ``y_raw``.

    The jitter is doubled on every failed Cholesky attempt, at most
    ``max_escalations`` times, before giving up with ConditioningError.
    """
    y_raw = np.asarray(y_raw, dtype=float).reshape(-1)
    n = len(y_raw)
    d = np.asarray(X).shape[-1] if np.asarray(X).size else 0
    X = np.asarray(X, dtype=float).reshape(n, d)
    if noise < 0:
        raise ValueError("noise must be non-negative")
    if not np.all(np.isfinite(y_raw)):
        raise ValueError("observations must be finite")

    if n == 0:
        return GpModel(kernel, X, y_raw, 0.0, 1.0, noise, jitter, np.zeros((0, 0)), np.zeros(0))

    y_mean = float(np.mean(y_raw))
    y_std = float(np.std(y_raw)) if n > 1 else 1.0
    if not y_std > 0:
        y_std = 1.0
    y = (y_raw - y_mean) / y_std

    K = kernel.gram(X)
    current = jitter
    for attempt in range(max_escalations + 1):
        try:
            L = cholesky(K + (noise + current) * np.eye(n), lower=True, check_finite=False)
        except np.linalg.LinAlgError:
            L = None
        if L is not None and np.all(np.isfinite(L)):
            break
        if attempt == max_escalations:
            raise ConditioningError(
                f"Cholesky failed for {n} points with jitter up to {current:g}"
            )
        current *= 2.0
    alpha = cho_solve((L, True), y, check_finite=False)
    return GpModel(kernel, X, y_raw, y_mean, y_std, noise, current, L, alpha)


def mean_posterior_variance(prediction: Prediction | np.ndarray) -> float:
    """Arithmetic mean of posterior variances over a non-empty candidate set."""
    var = prediction.variance if isinstance(prediction, Prediction) else np.asarray(prediction)
    if var.size == 0:
        raise ValueError("mean posterior variance over an empty candidate set")
    return float(np.mean(var))
