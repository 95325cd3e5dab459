"""Single-output Gaussian process regression with a Matern-5/2 ARD kernel.

Hyperparameters are fitted by multi-start maximization of the log marginal
likelihood in log-parameter space (L-BFGS-B with analytic gradients). Targets
are standardized to zero mean / unit variance per fit; predictions are
reported back in original units. One model is fitted per objective.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.optimize import minimize
from scipy.spatial.distance import cdist

from .errors import ConfigError, DimensionError, NumericalError

SQRT5 = math.sqrt(5.0)
LOG_2PI = math.log(2.0 * math.pi)

# Hyperparameter bounds (original scale) for normalized [0,1] inputs and
# standardized targets; they keep 15-point fits away from pathological corners.
LENGTHSCALE_BOUNDS = (1e-3, 1e2)
SIGNAL_BOUNDS = (1e-4, 1e2)
NOISE_BOUNDS = (1e-8, 1.0)

JITTER_START_FRACTION = 1e-8
JITTER_MAX_FRACTION = 1e-2


@dataclass(frozen=True, eq=False)
class KernelParams:
    """Matern-5/2 ARD hyperparameters: per-dimension lengthscales plus variances."""

    lengthscales: np.ndarray
    signal_variance: float
    noise_variance: float

    def __post_init__(self):
        ls = np.atleast_1d(np.asarray(self.lengthscales, dtype=float))
        if np.any(ls <= 0):
            raise ConfigError("lengthscales must be positive")
        if self.signal_variance <= 0:
            raise ConfigError("signal variance must be positive")
        if self.noise_variance < 0:
            raise ConfigError("noise variance must be non-negative")
        object.__setattr__(self, "lengthscales", ls)


@dataclass(frozen=True, eq=False)
class GPModel:
    """Fitted GP: training data, hyperparameters, and cached Cholesky solves."""

    inputs: np.ndarray
    targets: np.ndarray  # standardized
    params: KernelParams
    chol: np.ndarray = field(repr=False)
    alpha: np.ndarray = field(repr=False)
    target_mean: float
    target_std: float

    @property
    def n_points(self) -> int:
        return self.inputs.shape[0]

    @property
    def n_dims(self) -> int:
        return self.inputs.shape[1]


@dataclass(frozen=True)
class PosteriorPrediction:
    """Gaussian posterior at one query point, in original target units."""

    mean: float
    variance: float


def _scaled_dists(params: KernelParams, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return cdist(a / params.lengthscales, b / params.lengthscales)


def kernel_matrix(params: KernelParams, a: np.ndarray, b: np.ndarray | None = None) -> np.ndarray:
    """Matern-5/2 cross-covariance between two point sets (rows are points)."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = a if b is None else np.atleast_2d(np.asarray(b, dtype=float))
    r = _scaled_dists(params, a, b)
    return params.signal_variance * (1.0 + SQRT5 * r + 5.0 * r * r / 3.0) * np.exp(-SQRT5 * r)


def kernel_eval(params: KernelParams, a: np.ndarray, b: np.ndarray) -> float:
    """k(a, b) for two single points."""
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    if a.shape != b.shape:
        raise DimensionError(f"kernel inputs disagree: {a.shape} vs {b.shape}")
    if a.shape[0] != params.lengthscales.shape[0]:
        raise DimensionError(
            f"kernel inputs have dim {a.shape[0]}, params expect {params.lengthscales.shape[0]}"
        )
    return float(kernel_matrix(params, a[None, :], b[None, :])[0, 0])


def _factorize(params: KernelParams, inputs: np.ndarray) -> tuple[np.ndarray, float]:
    """Cholesky of K + noise*I with an escalating jitter ladder."""
    k = kernel_matrix(params, inputs)
    k[np.diag_indices_from(k)] += params.noise_variance
    jitter = 0.0
    while True:
        try:
            chol = cholesky(k + jitter * np.eye(len(k)), lower=True)
            return chol, jitter
        except np.linalg.LinAlgError:
            pass
        if jitter == 0.0:
            jitter = JITTER_START_FRACTION * params.signal_variance
        elif jitter < JITTER_MAX_FRACTION * params.signal_variance:
            jitter *= 10.0
        else:
            raise NumericalError(
                f"covariance factorization failed at final jitter {jitter:.3e}"
            )


def build_model(
    inputs: np.ndarray,
    targets: np.ndarray,
    params: KernelParams,
    standardize: bool = True,
) -> GPModel:
    """Assemble a GPModel with fixed hyperparameters (no fitting)."""
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    targets = np.asarray(targets, dtype=float).reshape(-1)
    if inputs.shape[0] != targets.shape[0]:
        raise DimensionError("inputs and targets disagree on n")
    if inputs.shape[0] < 1:
        raise ConfigError("at least one observation required")
    if standardize:
        mean = float(targets.mean())
        std = float(targets.std())
        if std == 0.0:
            std = 1.0
    else:
        mean, std = 0.0, 1.0
    y = (targets - mean) / std
    chol, _ = _factorize(params, inputs)
    alpha = cho_solve((chol, True), y)
    return GPModel(
        inputs=inputs,
        targets=y,
        params=params,
        chol=chol,
        alpha=alpha,
        target_mean=mean,
        target_std=std,
    )


def log_marginal_likelihood(model: GPModel) -> float:
    """Evidence of the standardized targets under the model's hyperparameters."""
    n = model.n_points
    return float(
        -0.5 * model.targets @ model.alpha
        - np.log(np.diag(model.chol)).sum()
        - 0.5 * n * LOG_2PI
    )


def _unpack(theta: np.ndarray, d: int) -> KernelParams:
    return KernelParams(
        lengthscales=np.exp(theta[:d]),
        signal_variance=float(np.exp(theta[d])),
        noise_variance=float(np.exp(theta[d + 1])),
    )


def negative_lml_and_grad(
    theta: np.ndarray, inputs: np.ndarray, targets: np.ndarray
) -> tuple[float, np.ndarray]:
    """Negative LML and its gradient w.r.t. log-parameters.

    ``theta`` is [log lengthscales (d), log signal variance, log noise variance];
    ``targets`` are assumed standardized.
    """
    n, d = inputs.shape
    params = _unpack(theta, d)
    r = _scaled_dists(params, inputs, inputs)
    decay = np.exp(-SQRT5 * r)
    kf = params.signal_variance * (1.0 + SQRT5 * r + 5.0 * r * r / 3.0) * decay
    k = kf + params.noise_variance * np.eye(n)
    try:
        chol = cholesky(k, lower=True)
    except np.linalg.LinAlgError:
        return 1e25, np.zeros_like(theta)
    alpha = cho_solve((chol, True), targets)
    lml = -0.5 * targets @ alpha - np.log(np.diag(chol)).sum() - 0.5 * n * LOG_2PI

    kinv = cho_solve((chol, True), np.eye(n))
    w = np.outer(alpha, alpha) - kinv  # d(lml)/dK = 0.5 * w
    grad = np.empty_like(theta)
    base = (5.0 / 3.0) * params.signal_variance * (1.0 + SQRT5 * r) * decay
    for i in range(d):
        dsq = (inputs[:, i : i + 1] - inputs[None, :, i]) ** 2
        dk = base * dsq / params.lengthscales[i] ** 2
        grad[i] = 0.5 * np.sum(w * dk)
    grad[d] = 0.5 * np.sum(w * kf)
    grad[d + 1] = 0.5 * params.noise_variance * np.trace(w)
    return float(-lml), -grad


def fit(
    inputs: np.ndarray,
    targets: np.ndarray,
    restarts: int = 8,
    rng: np.random.Generator | None = None,
) -> GPModel:
    """Fit hyperparameters by multi-start LML maximization and cache the solves."""
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    targets = np.asarray(targets, dtype=float).reshape(-1)
    n, d = inputs.shape
    if n < 2:
        raise ConfigError(f"fit needs at least 2 observations, got {n}")
    if restarts < 1:
        raise ConfigError("restarts must be >= 1")
    rng = rng or np.random.default_rng(0)

    mean = float(targets.mean())
    std = float(targets.std())
    if std == 0.0:
        std = 1.0
    y = (targets - mean) / std

    log_bounds = (
        [tuple(np.log(LENGTHSCALE_BOUNDS))] * d
        + [tuple(np.log(SIGNAL_BOUNDS))]
        + [tuple(np.log(NOISE_BOUNDS))]
    )
    starts = [np.concatenate((np.zeros(d), [0.0], [np.log(1e-2)]))]
    for _ in range(restarts - 1):
        starts.append(
            np.concatenate(
                (
                    rng.uniform(np.log(0.05), np.log(10.0), size=d),
                    [rng.uniform(np.log(0.1), np.log(10.0))],
                    [rng.uniform(np.log(1e-6), np.log(0.5))],
                )
            )
        )

    best_theta, best_nll = None, np.inf
    for theta0 in starts:
        result = minimize(
            negative_lml_and_grad,
            theta0,
            args=(inputs, y),
            jac=True,
            method="L-BFGS-B",
            bounds=log_bounds,
            options={"maxiter": 200},
        )
        if np.isfinite(result.fun) and result.fun < best_nll:
            best_nll = float(result.fun)
            best_theta = result.x
    if best_theta is None:
        raise NumericalError("all hyperparameter searches failed")
    params = _unpack(best_theta, d)
    model = build_model(inputs, targets, params, standardize=True)
    return model


def predict_batch(
    model: GPModel, queries: np.ndarray, include_noise: bool = False
) -> tuple[np.ndarray, np.ndarray]:
    """Posterior means and variances at many query points (original units).

    Latent-function prediction by default; ``include_noise`` adds the
    observation noise for observation-space prediction.
    """
    queries = np.atleast_2d(np.asarray(queries, dtype=float))
    if queries.shape[1] != model.n_dims:
        raise DimensionError(
            f"query dim {queries.shape[1]} != model dim {model.n_dims}"
        )
    kstar = kernel_matrix(model.params, model.inputs, queries)  # (n, m)
    mean_std = kstar.T @ model.alpha
    v = solve_triangular(model.chol, kstar, lower=True)
    var_std = model.params.signal_variance - (v**2).sum(axis=0)
    if include_noise:
        var_std = var_std + model.params.noise_variance
    var_std = np.maximum(var_std, 0.0)
    mean = model.target_mean + model.target_std * mean_std
    var = (model.target_std**2) * var_std
    return mean, var


def predict(model: GPModel, x: np.ndarray, include_noise: bool = False) -> PosteriorPrediction:
    """Posterior at a single query point."""
    x = np.asarray(x, dtype=float).reshape(-1)
    mean, var = predict_batch(model, x[None, :], include_noise=include_noise)
    return PosteriorPrediction(mean=float(mean[0]), variance=float(var[0]))


def feature_importance(model: GPModel) -> np.ndarray:
    """Per-dimension relevance: the inverse of each fitted lengthscale."""
    return 1.0 / model.params.lengthscales
