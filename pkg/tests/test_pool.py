import numpy as np
import pytest

from moboa.errors import ConfigError, DimensionError, DomainError, SchemaError
from moboa.pool import denormalize, load_pool, normalize


def _doc(models):
    return {
        "schema": {
            "features": [
                {"name": "score", "kind": "performance-score"},
                {"name": "in_price", "kind": "price-per-million-input-tokens"},
            ]
        },
        "models": models,
    }


def test_default_pool_dimensions(pool):
    assert pool.size == 10
    assert pool.dim == 5
    assert pool.ids[0] == "meta.llama3-1-8b-instruct"


def test_pool_load_is_order_preserving(pool):
    raw = pool.feature_matrix()
    assert raw[0, 0] == 48.0  # first document entry stays first
    assert raw[-1, 0] == 53.0


def test_single_model_pool_rejected():
    doc = _doc([{"id": "only", "features": {"score": 1.0, "in_price": 0.1}}])
    with pytest.raises(ConfigError):
        load_pool(doc)


def test_duplicate_id_rejected():
    doc = _doc(
        [
            {"id": "same", "features": {"score": 1.0, "in_price": 0.1}},
            {"id": "same", "features": {"score": 2.0, "in_price": 0.2}},
        ]
    )
    with pytest.raises(ConfigError, match="duplicate"):
        load_pool(doc)


def test_missing_feature_names_model_and_dimension():
    doc = _doc(
        [
            {"id": "a", "features": {"score": 1.0, "in_price": 0.1}},
            {"id": "b", "features": {"score": 2.0}},
        ]
    )
    with pytest.raises(SchemaError, match="'b'.*'in_price'"):
        load_pool(doc)


def test_identical_models_flag_all_dimensions_constant():
    doc = _doc(
        [
            {"id": "a", "features": {"score": 1.0, "in_price": 0.1}},
            {"id": "b", "features": {"score": 1.0, "in_price": 0.1}},
        ]
    )
    twin = load_pool(doc)
    assert twin.constant_dims.all()
    assert np.allclose(normalize(twin, np.array([1.0, 0.1])), 0.5)
    assert np.allclose(denormalize(twin, np.array([0.5, 0.5])), [1.0, 0.1])


def test_input_cost_normalization_extremes(pool):
    d = pool.schema.index_of("input_cost_per_1m")
    haiku = np.array(pool.models[pool.index_of("anthropic.claude-3-5-haiku")].features)
    qwen = np.array(pool.models[pool.index_of("qwen.qwen3-32b")].features)
    assert normalize(pool, haiku)[d] == 1.0
    assert normalize(pool, qwen)[d] == 0.0


def test_input_cost_normalization_interior(pool):
    d = pool.schema.index_of("input_cost_per_1m")
    llama = np.array(pool.models[pool.index_of("meta.llama3-1-8b-instruct")].features)
    assert normalize(pool, llama)[d] == pytest.approx((0.10 - 0.03) / (0.80 - 0.03), abs=1e-12)


def test_minima_normalize_to_zeros(pool):
    assert np.allclose(normalize(pool, pool.minima), 0.0)


def test_ones_denormalize_to_maxima(pool):
    assert np.allclose(denormalize(pool, np.ones(pool.dim)), pool.maxima)


def test_every_pool_row_normalizes_into_unit_box(pool):
    unit = pool.normalized_matrix()
    assert unit.min() >= 0.0 and unit.max() <= 1.0
    assert np.all(unit.max(axis=0) == 1.0)
    assert np.all(unit.min(axis=0) == 0.0)


def test_round_trips(pool, rng):
    for _ in range(200):
        unit = rng.uniform(0.0, 1.0, pool.dim)
        assert np.allclose(normalize(pool, denormalize(pool, unit)), unit, atol=1e-12)
        raw = denormalize(pool, rng.uniform(0.0, 1.0, pool.dim))
        assert np.allclose(denormalize(pool, normalize(pool, raw)), raw, atol=1e-9)


def test_normalize_length_check(pool):
    with pytest.raises(DimensionError):
        normalize(pool, np.zeros(3))


def test_denormalize_domain_check(pool):
    with pytest.raises(DomainError):
        denormalize(pool, np.full(pool.dim, 1.2))
