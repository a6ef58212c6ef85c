"""Per-factor linear predictors: OLS and L1-penalized least squares.

The L1 solver is cyclic coordinate descent with soft-thresholding. Features
are centered (and optionally scaled to unit variance) internally; reported
weights are always in the original feature space, with an unpenalized
intercept fitted on centered data.

Penalty convention: for config lambda the per-coordinate update is
``w_j = soft_threshold(x_j'r / N, lambda) / (x_j'x_j / N)``, so the fitted
weights minimize ``(1/(2N))*RSS + lambda*||w||_1``. The same iterates are
exact cyclic coordinate descent on ``(1/N)*RSS + (2*lambda)*||w||_1``; the
per-sweep objective history recorded on the model tracks that quantity,
which is guaranteed non-increasing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import TrendkitError


@dataclass(frozen=True)
class LassoConfig:
    """Solver settings for fit_lasso."""

    lam: float = 0.0
    max_sweeps: int = 1000
    tol: float = 1e-8
    standardize: bool = True

    def __post_init__(self):
        if self.lam < 0:
            raise TrendkitError(f"lambda must be >= 0, got {self.lam}")
        if self.tol <= 0:
            raise TrendkitError(f"tol must be > 0, got {self.tol}")
        if self.max_sweeps < 1:
            raise TrendkitError(f"max_sweeps must be >= 1, got {self.max_sweeps}")


@dataclass
class LinearModel:
    """Fitted affine predictor in raw feature space."""

    weights: np.ndarray
    intercept: float
    feature_means: np.ndarray
    feature_scales: np.ndarray
    target_name: str = ""
    lam: float = 0.0
    n_sweeps: int = 0
    converged: bool = True
    objective_history: list[float] = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.feature_means = np.asarray(self.feature_means, dtype=float)
        self.feature_scales = np.asarray(self.feature_scales, dtype=float)
        if not np.all(np.isfinite(self.weights)):
            raise TrendkitError("model weights must be finite")
        if np.any(self.feature_scales <= 0):
            raise TrendkitError("feature scales must be strictly positive")

    @property
    def n_features(self) -> int:
        return len(self.weights)


def soft_threshold(z: float, gamma: float) -> float:
    """sign(z) * max(|z| - gamma, 0), the proximal map of the L1 norm."""
    if gamma < 0:
        raise TrendkitError(f"gamma must be >= 0, got {gamma}")
    return math.copysign(max(abs(z) - gamma, 0.0), z)


def objective(X: np.ndarray, y: np.ndarray, weights: np.ndarray,
              intercept: float, lam: float) -> float:
    """Penalized mean squared error: (1/N)*sum((y - Xw - b)^2) + lam*||w||_1."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if X.ndim != 2 or X.shape[0] != len(y) or X.shape[1] != len(weights):
        raise TrendkitError("objective: dimension mismatch")
    r = y - X @ weights - intercept
    return float((r @ r) / len(y) + lam * np.abs(weights).sum())


def predict(model: LinearModel, x: np.ndarray) -> float:
    """Evaluate intercept + weights . x for a raw feature vector."""
    x = np.asarray(x, dtype=float)
    if x.shape != (model.n_features,):
        raise TrendkitError(
            f"predict: expected {model.n_features} features, got shape {x.shape}"
        )
    return float(model.intercept + model.weights @ x)


def _check_inputs(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise TrendkitError("X must be a 2-d matrix")
    if X.shape[0] != len(y):
        raise TrendkitError(f"X has {X.shape[0]} rows but y has {len(y)}")
    if X.shape[0] < 2:
        raise TrendkitError("need at least 2 samples")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise TrendkitError("non-finite values in regression input")
    return X, y


def _prepare(X: np.ndarray, y: np.ndarray, standardize: bool):
    """Center X and y; optionally scale X columns to unit population std."""
    means = X.mean(axis=0)
    if standardize:
        scales = X.std(axis=0)
        scales = np.where(scales > 0, scales, 1.0)  # constant columns pass through
    else:
        scales = np.ones(X.shape[1])
    Xw = (X - means) / scales
    y_mean = float(y.mean())
    return Xw, y - y_mean, means, scales, y_mean


def _finalize(w_work, means, scales, y_mean, target_name, lam, n_sweeps,
              converged, history) -> LinearModel:
    weights = w_work / scales
    intercept = y_mean - float(weights @ means)
    return LinearModel(
        weights=weights,
        intercept=intercept,
        feature_means=means,
        feature_scales=scales,
        target_name=target_name,
        lam=lam,
        n_sweeps=n_sweeps,
        converged=converged,
        objective_history=history,
    )


def fit_lasso(X: np.ndarray, y: np.ndarray, config: LassoConfig,
              target_name: str = "") -> LinearModel:
    """L1-penalized least squares via cyclic coordinate descent.

    Stops when the largest coefficient change in a sweep drops below
    config.tol, or after config.max_sweeps sweeps (reported via
    ``converged``, not an error). An all-constant target yields an
    intercept-only model.
    """
    X, y = _check_inputs(X, y)
    Xw, yc, means, scales, y_mean = _prepare(X, y, config.standardize)
    N, n = Xw.shape
    lam = config.lam

    w = np.zeros(n)
    if np.all(yc == 0.0):  # constant target: intercept-only by contract
        return _finalize(w, means, scales, y_mean, target_name, lam, 0, True, [])

    col_sq = (Xw * Xw).sum(axis=0) / N
    r = yc.copy()  # residual for w = 0
    history: list[float] = []
    converged = False
    sweeps = 0
    for sweeps in range(1, config.max_sweeps + 1):
        max_delta = 0.0
        for j in range(n):
            if col_sq[j] == 0.0:
                continue
            old = w[j]
            if old != 0.0:
                r += old * Xw[:, j]
            rho = float(Xw[:, j] @ r) / N
            w[j] = soft_threshold(rho, lam) / col_sq[j]
            if w[j] != 0.0:
                r -= w[j] * Xw[:, j]
            max_delta = max(max_delta, abs(w[j] - old))
        # Objective of the problem being descended, in (1/N)*RSS + coef*||w||_1
        # form (coef = 2*lam); exact coordinate minimization keeps it monotone.
        history.append(float((r @ r) / N + 2.0 * lam * np.abs(w).sum()))
        if max_delta < config.tol:
            converged = True
            break
    return _finalize(w, means, scales, y_mean, target_name, lam, sweeps,
                     converged, history)


def fit_ols(X: np.ndarray, y: np.ndarray, target_name: str = "") -> LinearModel:
    """Unpenalized least squares; rank-deficient systems get the
    minimum-norm solution."""
    X, y = _check_inputs(X, y)
    Xw, yc, means, scales, y_mean = _prepare(X, y, standardize=False)
    if np.all(yc == 0.0):
        return _finalize(np.zeros(X.shape[1]), means, scales, y_mean,
                         target_name, 0.0, 0, True, [])
    w, *_ = np.linalg.lstsq(Xw, yc, rcond=None)
    return _finalize(w, means, scales, y_mean, target_name, 0.0, 0, True, [])


def model_to_text(model: LinearModel, feature_names: list[str]) -> str:
    """Plain-text key-value serialization of a fitted model."""
    if len(feature_names) != model.n_features:
        raise TrendkitError("feature name count does not match weight count")
    lines = [f"target: {model.target_name}"]
    for name, w in zip(feature_names, model.weights):
        lines.append(f"weight {name}: {float(w)!r}")
    lines.append(f"intercept: {float(model.intercept)!r}")
    lines.append(f"lambda: {float(model.lam)!r}")
    lines.append(f"sweeps: {model.n_sweeps}")
    for name, m in zip(feature_names, model.feature_means):
        lines.append(f"mean {name}: {float(m)!r}")
    for name, s in zip(feature_names, model.feature_scales):
        lines.append(f"scale {name}: {float(s)!r}")
    return "\n".join(lines) + "\n"


def model_from_text(text: str) -> tuple[LinearModel, list[str]]:
    """Inverse of model_to_text; returns the model and its feature names."""
    target = ""
    lam = 0.0
    sweeps = 0
    intercept = 0.0
    names: list[str] = []
    weights: dict[str, float] = {}
    means: dict[str, float] = {}
    scales: dict[str, float] = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition(":")
        key = key.strip()
        value = value.strip()
        if key == "target":
            target = value
        elif key == "lambda":
            lam = float(value)
        elif key == "sweeps":
            sweeps = int(value)
        elif key == "intercept":
            intercept = float(value)
        elif key.startswith("weight "):
            name = key[len("weight "):]
            names.append(name)
            weights[name] = float(value)
        elif key.startswith("mean "):
            means[key[len("mean "):]] = float(value)
        elif key.startswith("scale "):
            scales[key[len("scale "):]] = float(value)
        else:
            raise TrendkitError(f"unrecognized model line: {raw!r}")
    if not names:
        raise TrendkitError("model text has no weights")
    model = LinearModel(
        weights=np.array([weights[n] for n in names]),
        intercept=intercept,
        feature_means=np.array([means.get(n, 0.0) for n in names]),
        feature_scales=np.array([scales.get(n, 1.0) for n in names]),
        target_name=target,
        lam=lam,
        n_sweeps=sweeps,
    )
    return model, names
