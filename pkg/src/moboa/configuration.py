"""Team configurations: continuous points, discrete assignments, projection.

A configuration lives in two forms. The continuous form is an N x D matrix of
normalized features (one row per role), flattened role-major into an (N*D)-
vector for the surrogate models. The discrete form assigns one pool model to
each role. The projection maps continuous rows onto their nearest pool rows.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError, DimensionError, DomainError
from .pool import ModelPool

DEFAULT_ROLES = ("manager", "search_agent", "reformulator")


@dataclass(frozen=True)
class RoleSet:
    """Ordered, unique role names; order is fixed for the lifetime of a run."""

    roles: tuple[str, ...] = DEFAULT_ROLES

    def __post_init__(self):
        if len(self.roles) < 1:
            raise ConfigError("at least one role is required")
        if len(set(self.roles)) != len(self.roles):
            raise ConfigError("role names must be unique")

    @property
    def count(self) -> int:
        return len(self.roles)


@dataclass(frozen=True, eq=False)
class ContinuousConfiguration:
    """Point in the unit box [0,1]^(N*D), stored as a flat role-major vector.

    Entry for (role i, dimension d) sits at index i*D + d.
    """

    values: np.ndarray
    n_roles: int
    n_dims: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.n_roles * self.n_dims,):
            raise DimensionError(
                f"expected flat vector of length {self.n_roles * self.n_dims}, "
                f"got shape {values.shape}"
            )
        if np.any(values < 0.0) or np.any(values > 1.0):
            raise DomainError("continuous configuration entries must lie in [0, 1]")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> "ContinuousConfiguration":
        matrix = np.asarray(matrix, dtype=float)
        if matrix.ndim != 2:
            raise DimensionError("configuration matrix must be 2-D")
        return cls(values=flatten(matrix), n_roles=matrix.shape[0], n_dims=matrix.shape[1])

    def matrix(self) -> np.ndarray:
        return unflatten(self.values, self.n_roles, self.n_dims)


@dataclass(frozen=True, eq=False)
class TeamAssignment:
    """Discrete team: one pool model per role plus their normalized feature rows."""

    assignment: dict[str, str]
    resolved_features: np.ndarray

    def roles(self) -> tuple[str, ...]:
        return tuple(self.assignment.keys())

    def model_ids(self) -> tuple[str, ...]:
        return tuple(self.assignment.values())

    def flat_features(self) -> np.ndarray:
        return flatten(self.resolved_features)


def flatten(matrix: np.ndarray) -> np.ndarray:
    """Role-major (row-major) flattening of an N x D matrix to an (N*D)-vector."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2:
        raise DimensionError("flatten expects a 2-D matrix")
    return matrix.reshape(-1).copy()


def unflatten(vector: np.ndarray, n_roles: int, n_dims: int) -> np.ndarray:
    """Inverse of :func:`flatten`."""
    vector = np.asarray(vector, dtype=float)
    if vector.shape != (n_roles * n_dims,):
        raise DimensionError(
            f"expected vector of length {n_roles * n_dims}, got shape {vector.shape}"
        )
    return vector.reshape(n_roles, n_dims).copy()


def nearest_model_index(pool: ModelPool, row: np.ndarray) -> tuple[int, float]:
    """Nearest pool model to one normalized feature row, by Euclidean distance.

    Constant pool dimensions are excluded from the distance. Ties resolve to
    the lowest pool index.
    """
    row = np.asarray(row, dtype=float)
    if row.shape != (pool.dim,):
        raise DimensionError(f"expected {pool.dim}-vector, got shape {row.shape}")
    active = ~pool.constant_dims
    diffs = pool.normalized_matrix()[:, active] - row[active]
    dists = np.sqrt((diffs**2).sum(axis=1))
    idx = int(np.argmin(dists))  # argmin keeps the lowest index on ties
    return idx, float(dists[idx])


def project(pool: ModelPool, x: ContinuousConfiguration, roles: RoleSet) -> TeamAssignment:
    """Map each continuous row to its nearest pool model (per role, independently)."""
    if x.n_dims != pool.dim:
        raise DimensionError(f"configuration dim {x.n_dims} != pool dim {pool.dim}")
    if x.n_roles != roles.count:
        raise DimensionError(f"configuration has {x.n_roles} rows for {roles.count} roles")
    matrix = x.matrix()
    normalized = pool.normalized_matrix()
    assignment = {}
    resolved = np.empty_like(matrix)
    for i, role in enumerate(roles.roles):
        idx, _ = nearest_model_index(pool, matrix[i])
        assignment[role] = pool.models[idx].id
        resolved[i] = normalized[idx]
    return TeamAssignment(assignment=assignment, resolved_features=resolved)


def random_configuration(
    pool: ModelPool,
    roles: RoleSet,
    rng: np.random.Generator,
    candidate_ids: Sequence[str] | None = None,
) -> TeamAssignment:
    """Assign each role a uniformly random pool model (sampling with replacement).

    The resulting feature rows are exact pool rows, so no projection is needed.
    ``candidate_ids`` restricts sampling to a subset of the pool (test seam).
    """
    if candidate_ids is None:
        indices = np.arange(pool.size)
    else:
        indices = np.array([pool.index_of(mid) for mid in candidate_ids])
        if len(indices) == 0:
            raise ConfigError("candidate_ids must name at least one pool model")
    normalized = pool.normalized_matrix()
    assignment = {}
    resolved = np.empty((roles.count, pool.dim))
    for i, role in enumerate(roles.roles):
        idx = int(indices[rng.integers(0, len(indices))])
        assignment[role] = pool.models[idx].id
        resolved[i] = normalized[idx]
    return TeamAssignment(assignment=assignment, resolved_features=resolved)
