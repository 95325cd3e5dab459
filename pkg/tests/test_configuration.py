import numpy as np
import pytest

from moboa.configuration import (
    ContinuousConfiguration,
    RoleSet,
    flatten,
    project,
    random_configuration,
    unflatten,
)
from moboa.errors import DimensionError, DomainError
from moboa.pool import load_pool

ROLES = RoleSet()


def brute_force_nearest(pool, row):
    """Exhaustive scan, lowest index on ties; test oracle for the projection."""
    active = ~pool.constant_dims
    best, best_dist = None, np.inf
    for j, model_row in enumerate(pool.normalized_matrix()):
        dist = np.linalg.norm(model_row[active] - row[active])
        if dist < best_dist:
            best, best_dist = j, dist
    return best


def test_exact_pool_row_projects_to_itself(pool):
    unit = pool.normalized_matrix()
    x = ContinuousConfiguration.from_matrix(unit[[3, 5, 8]])
    team = project(pool, x, ROLES)
    assert team.assignment == {
        "manager": pool.models[3].id,
        "search_agent": pool.models[5].id,
        "reformulator": pool.models[8].id,
    }
    assert np.array_equal(team.resolved_features, unit[[3, 5, 8]])


def test_all_zero_rows_match_brute_force(pool):
    x = ContinuousConfiguration.from_matrix(np.zeros((3, pool.dim)))
    team = project(pool, x, ROLES)
    expect = pool.models[brute_force_nearest(pool, np.zeros(pool.dim))].id
    assert all(mid == expect for mid in team.assignment.values())


def test_midpoint_tie_breaks_to_lower_index():
    doc = {
        "schema": {"features": [{"name": "score", "kind": "performance-score"}]},
        "models": [
            {"id": "low", "features": {"score": 0.0}},
            {"id": "high", "features": {"score": 1.0}},
        ],
    }
    two = load_pool(doc)
    x = ContinuousConfiguration.from_matrix(np.array([[0.5]]))
    team = project(two, x, RoleSet(("solo",)))
    assert team.assignment["solo"] == "low"


def test_projection_idempotent(pool, rng):
    for _ in range(50):
        x = ContinuousConfiguration.from_matrix(rng.uniform(0, 1, (3, pool.dim)))
        team = project(pool, x, ROLES)
        again = project(pool, ContinuousConfiguration.from_matrix(team.resolved_features), ROLES)
        assert again.assignment == team.assignment


def test_projection_matches_brute_force(pool, rng):
    for _ in range(300):
        matrix = rng.uniform(0, 1, (3, pool.dim))
        team = project(pool, ContinuousConfiguration.from_matrix(matrix), ROLES)
        for i, role in enumerate(ROLES.roles):
            assert team.assignment[role] == pool.models[brute_force_nearest(pool, matrix[i])].id


def test_random_configuration_restricted_candidates(pool, rng):
    team = random_configuration(pool, ROLES, rng, candidate_ids=["deepseek.v3"])
    assert set(team.assignment.values()) == {"deepseek.v3"}
    assert np.array_equal(
        team.resolved_features,
        np.tile(pool.normalized_matrix()[pool.index_of("deepseek.v3")], (3, 1)),
    )


def test_random_configuration_deterministic(pool):
    a = random_configuration(pool, ROLES, np.random.default_rng(99))
    b = random_configuration(pool, ROLES, np.random.default_rng(99))
    assert a.assignment == b.assignment


def test_random_configuration_uniform_per_role(pool):
    rng = np.random.default_rng(7)
    counts = {role: dict.fromkeys(pool.ids, 0) for role in ROLES.roles}
    draws = 10_000
    for _ in range(draws):
        team = random_configuration(pool, ROLES, rng)
        for role, mid in team.assignment.items():
            counts[role][mid] += 1
    for role in ROLES.roles:
        for mid in pool.ids:
            assert abs(counts[role][mid] / draws - 0.1) < 0.01


def test_flatten_layout_and_round_trip(rng):
    matrix = np.arange(15, dtype=float).reshape(3, 5)
    flat = flatten(matrix)
    assert flat.shape == (15,)
    assert flat[5] == matrix[1, 0]
    assert np.array_equal(unflatten(flat, 3, 5), matrix)
    assert np.array_equal(unflatten(flatten(np.array([[2.5]])), 1, 1), [[2.5]])
    for _ in range(20):
        m = rng.normal(size=(4, 3))
        assert np.array_equal(unflatten(flatten(m), 4, 3), m)


def test_unflatten_length_mismatch():
    with pytest.raises(DimensionError):
        unflatten(np.zeros(7), 2, 3)


def test_continuous_configuration_box_check():
    with pytest.raises(DomainError):
        ContinuousConfiguration(values=np.array([0.2, 1.4]), n_roles=1, n_dims=2)
