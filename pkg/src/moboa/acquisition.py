"""Expected hypervolume improvement for two objectives (batch size 1).

The exact form decomposes the region above the front's staircase into
axis-aligned cells and sums closed-form Gaussian terms per cell, using the
independence of the two per-objective posteriors. A Monte Carlo estimator over
the same posteriors serves as the validation oracle, and a multi-start
pattern search maximizes the acquisition over the unit box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from . import pareto
from .errors import ConfigError, DimensionError
from .gp import GPModel, predict_batch
from .pareto import ParetoFront, ReferencePoint

LOG_FLOOR = 1e-300
_SIGMA_FLOOR = 1e-18  # keeps the closed form exact under zero-variance posteriors
_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True, eq=False)
class AcquisitionContext:
    """Everything the acquisition needs: the two surrogates, front, reference."""

    gp_accuracy: GPModel
    gp_negcost: GPModel
    front: ParetoFront
    reference: ReferencePoint

    def __post_init__(self):
        if not np.array_equal(self.gp_accuracy.inputs, self.gp_negcost.inputs):
            raise ConfigError("objective surrogates must share the same training inputs")

    @property
    def n_dims(self) -> int:
        return self.gp_accuracy.n_dims


@dataclass(frozen=True, eq=False)
class CandidateProposal:
    """Result of acquisition maximization: point, value, and search effort."""

    x: np.ndarray
    acquisition_value: float
    restarts_used: int


def _phi(z: np.ndarray) -> np.ndarray:
    return np.exp(-0.5 * z * z) / _SQRT_2PI


def ehvi_batch(ctx: AcquisitionContext, queries: np.ndarray) -> np.ndarray:
    """Exact EHVI at each query row, in one vectorized pass."""
    queries = np.atleast_2d(np.asarray(queries, dtype=float))
    if queries.shape[1] != ctx.n_dims:
        raise DimensionError(f"query dim {queries.shape[1]} != surrogate dim {ctx.n_dims}")
    mu1, var1 = predict_batch(ctx.gp_accuracy, queries)
    mu2, var2 = predict_batch(ctx.gp_negcost, queries)
    s1 = np.maximum(np.sqrt(var1), _SIGMA_FLOOR)
    s2 = np.maximum(np.sqrt(var2), _SIGMA_FLOOR)

    acc, neg = ctx.front.arrays()
    s, h = pareto._staircase(acc, neg, ctx.reference)
    k = len(s) - 2  # number of surviving front points

    # Expected exceedance of each strip's height: E[(Y2 - h_j)+].
    z_h = (h[None, :] - mu2[:, None]) / s2[:, None]
    psi2 = s2[:, None] * _phi(z_h) + (mu2[:, None] - h[None, :]) * (1.0 - ndtr(z_h))

    # Per-strip mass and first moment of Y1.
    z_s = (s[None, :] - mu1[:, None]) / s1[:, None]
    cdf = ndtr(z_s)
    pdf = _phi(z_s)
    mass = cdf[:, 1:] - cdf[:, :-1]
    first = (mu1[:, None] - s[None, :-1]) * mass + s1[:, None] * (pdf[:, :-1] - pdf[:, 1:])

    # Accumulated gain from strips fully to the left of the sample.
    if k > 0:
        widths = s[1 : k + 1] - s[:k]
        left = np.concatenate(
            (np.zeros((len(queries), 1)), np.cumsum(widths[None, :] * psi2[:, :k], axis=1)),
            axis=1,
        )
    else:
        left = np.zeros((len(queries), 1))
    return np.maximum((left * mass + first * psi2).sum(axis=1), 0.0)


def ehvi(ctx: AcquisitionContext, x: np.ndarray) -> float:
    """Expected gain in dominated hypervolume from sampling at ``x``."""
    x = np.asarray(x, dtype=float).reshape(-1)
    return float(ehvi_batch(ctx, x[None, :])[0])


def log_ehvi(ctx: AcquisitionContext, x: np.ndarray) -> float:
    """log(max(ehvi, floor)); order-preserving wherever ehvi exceeds the floor."""
    return math.log(max(ehvi(ctx, x), LOG_FLOOR))


def _log_ehvi_batch(ctx: AcquisitionContext, queries: np.ndarray) -> np.ndarray:
    return np.log(np.maximum(ehvi_batch(ctx, queries), LOG_FLOOR))


def mc_ehvi(
    ctx: AcquisitionContext,
    x: np.ndarray,
    samples: int,
    rng: np.random.Generator,
) -> tuple[float, float]:
    """Monte Carlo estimate of EHVI with its standard error.

    Draws independent (accuracy, neg_cost) pairs from the two posteriors and
    averages the realized hypervolume improvement computed by the pareto
    module.
    """
    if samples < 2:
        raise ConfigError("mc_ehvi needs at least 2 samples")
    x = np.asarray(x, dtype=float).reshape(-1)
    mu1, var1 = predict_batch(ctx.gp_accuracy, x[None, :])
    mu2, var2 = predict_batch(ctx.gp_negcost, x[None, :])
    draws = np.column_stack(
        (
            rng.normal(mu1[0], math.sqrt(var1[0]), size=samples),
            rng.normal(mu2[0], math.sqrt(var2[0]), size=samples),
        )
    )
    gains = pareto.hypervolume_improvement(ctx.front, ctx.reference, draws)
    estimate = float(gains.mean())
    stderr = float(gains.std(ddof=1) / math.sqrt(samples))
    return estimate, stderr


def _pattern_search(
    ctx: AcquisitionContext,
    x0: np.ndarray,
    local_steps: int,
    initial_step: float,
    min_step: float,
) -> tuple[np.ndarray, float]:
    """Coordinate-wise pattern search in the unit box, maximizing log-EHVI."""
    d = len(x0)
    x = np.clip(x0, 0.0, 1.0)
    value = float(_log_ehvi_batch(ctx, x[None, :])[0])
    step = initial_step
    eye = np.eye(d)
    for _ in range(local_steps):
        if step < min_step:
            break
        candidates = np.clip(np.vstack((x + step * eye, x - step * eye)), 0.0, 1.0)
        values = _log_ehvi_batch(ctx, candidates)
        best = int(np.argmax(values))
        if values[best] > value:
            x = candidates[best]
            value = float(values[best])
        else:
            step *= 0.5
    return x, value


def optimize_acquisition(
    ctx: AcquisitionContext,
    restarts: int = 32,
    local_steps: int = 60,
    rng: np.random.Generator | None = None,
    initial_step: float = 0.25,
    min_step: float = 1e-3,
) -> CandidateProposal:
    """Maximize the acquisition over [0,1]^d by multi-start pattern search.

    Seeds are ``restarts`` uniform points plus the embeddings of the current
    front's configurations (an exploitation anchor). Deterministic for a given
    rng seed; returns the best refined seed even when every value sits at the
    log floor.
    """
    if restarts < 1:
        raise ConfigError("restarts must be >= 1")
    rng = rng or np.random.default_rng(0)
    d = ctx.n_dims
    seeds = [rng.uniform(0.0, 1.0, size=d) for _ in range(restarts)]
    n_train = ctx.gp_accuracy.n_points
    for prov in ctx.front.provenance:
        idx = prov[0]
        if 0 <= idx < n_train:
            seeds.append(ctx.gp_accuracy.inputs[idx].copy())

    best_x, best_value = None, -np.inf
    for seed in seeds:
        x, value = _pattern_search(ctx, seed, local_steps, initial_step, min_step)
        if value > best_value:
            best_x, best_value = x, value
    return CandidateProposal(x=best_x, acquisition_value=best_value, restarts_used=len(seeds))
