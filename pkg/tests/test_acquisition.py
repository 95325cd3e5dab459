import math

import numpy as np
import pytest

from moboa.acquisition import (
    LOG_FLOOR,
    AcquisitionContext,
    ehvi,
    ehvi_batch,
    log_ehvi,
    mc_ehvi,
    optimize_acquisition,
)
from moboa.gp import KernelParams, build_model
from moboa.pareto import (
    ObjectiveVector,
    ReferencePoint,
    hypervolume_2d,
    non_dominated_set,
)

REF = ReferencePoint(accuracy=0.0, neg_cost=-2.0)


def make_context(x, y_acc, y_neg, ref=REF, lengthscale=0.4, noise=1e-6):
    d = x.shape[1]
    params = KernelParams(np.full(d, lengthscale), 1.0, noise)
    gp_acc = build_model(x, y_acc, params, standardize=False)
    gp_neg = build_model(x, y_neg, params, standardize=False)
    points = [ObjectiveVector(float(a), float(c)) for a, c in zip(y_acc, y_neg)]
    return AcquisitionContext(
        gp_accuracy=gp_acc, gp_negcost=gp_neg, front=non_dominated_set(points), reference=ref
    )


def random_context(rng, front_size=None):
    n = int(rng.integers(3, 9)) if front_size is None else front_size
    d = int(rng.integers(1, 4))
    x = rng.uniform(0, 1, (n, d))
    y_acc = rng.uniform(0, 1, n)
    y_neg = rng.uniform(-2, 0, n)
    return make_context(
        x,
        y_acc,
        y_neg,
        lengthscale=float(rng.uniform(0.2, 0.8)),
        noise=float(rng.uniform(1e-6, 0.05)),
    )


def test_degenerate_dominated_mean_gives_zero():
    # Zero noise pins the posterior at the training values; the training point
    # itself is weakly dominated by the front, so there is nothing to gain.
    x = np.array([[0.3], [0.7]])
    ctx = make_context(x, np.array([0.6, 0.4]), np.array([-0.5, -1.5]), noise=0.0)
    assert ehvi(ctx, x[1]) <= 1e-9
    assert ehvi(ctx, x[0]) <= 1e-9


def test_degenerate_non_dominated_mean_gives_exact_improvement():
    x = np.array([[0.2], [0.9]])
    y_acc = np.array([0.5, 0.8])
    y_neg = np.array([-0.3, -1.2])
    ctx = make_context(x, y_acc, y_neg, noise=0.0)
    # querying the second training point exactly: posterior collapses there
    base = hypervolume_2d(ctx.front, REF)
    grown = hypervolume_2d(
        non_dominated_set(list(ctx.front.points) + [ObjectiveVector(0.8, -1.2)]), REF
    )
    assert ehvi(ctx, x[1]) == pytest.approx(grown - base, abs=1e-9)


def test_ehvi_non_negative_everywhere(rng):
    for _ in range(10):
        ctx = random_context(rng)
        queries = rng.uniform(-0.2, 1.2, (100, ctx.n_dims))
        assert np.all(ehvi_batch(ctx, queries) >= 0.0)


def test_ehvi_at_front_point_with_near_zero_variance_is_tiny():
    tight = make_context(
        np.array([[0.25], [0.75]]), np.array([0.4, 0.7]), np.array([-0.4, -1.0]), noise=0.0
    )
    assert ehvi(tight, np.array([0.25])) <= 1e-9
    assert ehvi(tight, np.array([0.75])) <= 1e-9


def test_exact_matches_monte_carlo(rng):
    # The 3-SE bound is only meaningful when enough samples land in the
    # improvement region, so queries are redrawn until the acquisition value
    # is non-negligible.
    for trial in range(12):
        ctx = random_context(rng)
        for _ in range(50):
            x = rng.uniform(0, 1, ctx.n_dims)
            exact = ehvi(ctx, x)
            if exact >= 1e-4:
                break
        estimate, se = mc_ehvi(ctx, x, samples=120_000, rng=rng)
        assert abs(exact - estimate) <= 3.0 * se + 1e-9


def test_mc_zero_variance_is_deterministic(rng):
    x = np.array([[0.2], [0.9]])
    ctx = make_context(x, np.array([0.5, 0.8]), np.array([-0.3, -1.2]), noise=0.0)
    estimate, se = mc_ehvi(ctx, x[1], samples=1000, rng=rng)
    assert se <= 1e-12  # all draws collapse onto the posterior mean
    assert estimate == pytest.approx(ehvi(ctx, x[1]), abs=1e-9)


def test_mc_estimate_non_negative(rng):
    for _ in range(5):
        ctx = random_context(rng)
        estimate, _ = mc_ehvi(ctx, rng.uniform(0, 1, ctx.n_dims), samples=2000, rng=rng)
        assert estimate >= 0.0


def test_mc_standard_error_scales_inverse_sqrt(rng):
    ctx = random_context(rng)
    x = rng.uniform(0, 1, ctx.n_dims)
    se_small = np.mean([mc_ehvi(ctx, x, samples=4000, rng=rng)[1] for _ in range(20)])
    se_large = np.mean([mc_ehvi(ctx, x, samples=8000, rng=rng)[1] for _ in range(20)])
    assert se_large / se_small == pytest.approx(1 / math.sqrt(2), rel=0.1)


def test_log_ehvi_floor_and_identity(rng):
    ctx = random_context(rng)
    x = rng.uniform(0, 1, ctx.n_dims)
    value = ehvi(ctx, x)
    if value > LOG_FLOOR:
        assert log_ehvi(ctx, x) == pytest.approx(math.log(value))
    # a saturated context: the front already covers the whole objective box
    saturated = make_context(
        np.array([[0.5]]) if ctx.n_dims == 1 else np.full((1, ctx.n_dims), 0.5),
        np.array([1.0]),
        np.array([0.0]),
        noise=0.0,
    )
    assert log_ehvi(saturated, np.full(ctx.n_dims, 0.5)) == math.log(LOG_FLOOR)


def test_log_ehvi_preserves_argmax(rng):
    ctx = random_context(rng)
    queries = rng.uniform(0, 1, (1000, ctx.n_dims))
    values = ehvi_batch(ctx, queries)
    logs = np.log(np.maximum(values, LOG_FLOOR))
    assert int(np.argmax(values)) == int(np.argmax(logs))


def test_optimizer_matches_dense_grid_in_1d(rng):
    x = np.array([[0.2], [0.8]])
    ctx = make_context(x, np.array([0.3, 0.6]), np.array([-0.4, -1.1]), lengthscale=0.25)
    grid = np.linspace(0.0, 1.0, 10_001)[:, None]
    grid_best = grid[int(np.argmax(ehvi_batch(ctx, grid))), 0]
    proposal = optimize_acquisition(ctx, restarts=16, local_steps=60, rng=rng)
    assert abs(proposal.x[0] - grid_best) <= 0.05


def test_optimizer_deterministic_given_seed(rng):
    ctx = random_context(rng)
    a = optimize_acquisition(ctx, restarts=8, rng=np.random.default_rng(5))
    b = optimize_acquisition(ctx, restarts=8, rng=np.random.default_rng(5))
    assert np.array_equal(a.x, b.x)
    assert a.acquisition_value == b.acquisition_value


def test_optimizer_survives_saturated_front(rng):
    saturated = make_context(
        np.full((1, 2), 0.5), np.array([1.0]), np.array([0.0]), noise=0.0
    )
    proposal = optimize_acquisition(saturated, restarts=4, rng=rng)
    assert proposal.acquisition_value == math.log(LOG_FLOOR)
    assert np.all(proposal.x >= 0.0) and np.all(proposal.x <= 1.0)


def test_optimizer_stays_inside_unit_box(rng):
    for _ in range(5):
        ctx = random_context(rng)
        proposal = optimize_acquisition(ctx, restarts=6, rng=rng)
        assert np.all(proposal.x >= 0.0) and np.all(proposal.x <= 1.0)
        assert proposal.restarts_used >= 6
