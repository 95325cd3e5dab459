"""Candidate model pool: feature schema, per-model feature rows, min-max scaling.

The pool is the discrete ground truth of the search: M models, each described
by a D-dimensional raw feature vector (benchmark scores on their native 0-100
scale, prices in USD per one million tokens). Scaling bounds are always
derived from the pool itself so every pool row maps into the unit box.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError, DimensionError, DomainError, SchemaError

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

PERFORMANCE_SCORE = "performance-score"
INPUT_PRICE = "price-per-million-input-tokens"
OUTPUT_PRICE = "price-per-million-output-tokens"
FEATURE_KINDS = (PERFORMANCE_SCORE, INPUT_PRICE, OUTPUT_PRICE)

DEFAULT_POOL_RESOURCE = "paper_table_5_1.toml"


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered feature dimensions shared by every model in a pool."""

    names: tuple[str, ...]
    kinds: tuple[str, ...]

    def __post_init__(self):
        if len(self.names) < 1:
            raise SchemaError("feature schema needs at least one dimension")
        if len(set(self.names)) != len(self.names):
            raise SchemaError("feature names must be unique")
        if len(self.kinds) != len(self.names):
            raise SchemaError("schema kinds and names must align")
        for name, kind in zip(self.names, self.kinds):
            if kind not in FEATURE_KINDS:
                raise SchemaError(f"feature {name!r} has unknown kind {kind!r}")

    @property
    def dim(self) -> int:
        return len(self.names)

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise SchemaError(f"unknown feature dimension {name!r}") from None


@dataclass(frozen=True)
class ModelDescriptor:
    """One candidate model: stable id plus its raw feature row."""

    id: str
    display_name: str
    features: tuple[float, ...]


@dataclass(frozen=True, eq=False)
class ModelPool:
    """Immutable pool of M >= 2 models with pool-derived min-max scaler."""

    schema: FeatureSchema
    models: tuple[ModelDescriptor, ...]
    minima: np.ndarray = field(repr=False)
    maxima: np.ndarray = field(repr=False)
    constant_dims: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return len(self.models)

    @property
    def dim(self) -> int:
        return self.schema.dim

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(m.id for m in self.models)

    def index_of(self, model_id: str) -> int:
        for i, m in enumerate(self.models):
            if m.id == model_id:
                return i
        raise ConfigError(f"model id {model_id!r} not in pool")

    def feature_matrix(self) -> np.ndarray:
        """Raw M x D matrix, rows in document order."""
        return np.array([m.features for m in self.models], dtype=float)

    def normalized_matrix(self) -> np.ndarray:
        """Min-max scaled M x D matrix; every entry lies in [0, 1]."""
        return np.vstack([normalize(self, np.asarray(m.features)) for m in self.models])

    def content_hash(self) -> str:
        doc = {
            "features": [
                {"name": n, "kind": k} for n, k in zip(self.schema.names, self.schema.kinds)
            ],
            "models": [{"id": m.id, "features": list(m.features)} for m in self.models],
        }
        digest = hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()
        return f"sha256:{digest}"


def _build_pool(schema: FeatureSchema, models: Sequence[ModelDescriptor]) -> ModelPool:
    if len(models) < 2:
        raise ConfigError(f"pool needs at least 2 models, got {len(models)}")
    seen = set()
    for m in models:
        if m.id in seen:
            raise ConfigError(f"duplicate model id {m.id!r}")
        seen.add(m.id)
    mat = np.array([m.features for m in models], dtype=float)
    minima = mat.min(axis=0)
    maxima = mat.max(axis=0)
    constant = maxima == minima
    return ModelPool(
        schema=schema,
        models=tuple(models),
        minima=minima,
        maxima=maxima,
        constant_dims=constant,
    )


def load_pool(source) -> ModelPool:
    """Load a pool from a TOML file path or an already-parsed document mapping.

    Raises SchemaError for missing/invalid feature values (naming the model and
    dimension) and ConfigError for structural problems such as duplicate ids.
    """
    if isinstance(source, (str, Path)):
        path = Path(source)
        if not path.exists():
            raise ConfigError(f"pool file not found: {path}")
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    elif isinstance(source, Mapping):
        doc = source
    else:
        raise ConfigError(f"unsupported pool source {type(source).__name__}")

    try:
        feature_specs = doc["schema"]["features"]
    except (KeyError, TypeError):
        raise SchemaError("pool document missing schema.features") from None
    names, kinds = [], []
    for spec in feature_specs:
        if "name" not in spec or "kind" not in spec:
            raise SchemaError(f"feature entry {spec!r} needs name and kind")
        names.append(str(spec["name"]))
        kinds.append(str(spec["kind"]))
    schema = FeatureSchema(names=tuple(names), kinds=tuple(kinds))

    raw_models = doc.get("models")
    if not raw_models:
        raise SchemaError("pool document lists no models")
    models = []
    for entry in raw_models:
        model_id = entry.get("id")
        if not model_id:
            raise SchemaError(f"model entry {entry!r} missing id")
        feats = entry.get("features", {})
        row = []
        for name, kind in zip(schema.names, schema.kinds):
            if name not in feats:
                raise SchemaError(f"model {model_id!r} missing feature {name!r}")
            value = float(feats[name])
            if not np.isfinite(value):
                raise SchemaError(f"model {model_id!r} feature {name!r} is not finite")
            if kind in (INPUT_PRICE, OUTPUT_PRICE) and value < 0:
                raise SchemaError(f"model {model_id!r} has negative price for {name!r}")
            row.append(value)
        models.append(
            ModelDescriptor(
                id=str(model_id),
                display_name=str(entry.get("display_name", model_id)),
                features=tuple(row),
            )
        )
    return _build_pool(schema, models)


def default_pool_path() -> Path:
    """Path of the packaged 10-model pool shipped with the library."""
    return Path(resources.files("moboa").joinpath("data/pools", DEFAULT_POOL_RESOURCE))


def load_default_pool() -> ModelPool:
    return load_pool(default_pool_path())


def normalize(pool: ModelPool, raw: np.ndarray) -> np.ndarray:
    """Min-max scale a raw D-vector using the pool's per-dimension bounds.

    Constant dimensions (max == min across the pool) map to 0.5.
    """
    raw = np.asarray(raw, dtype=float)
    if raw.shape != (pool.dim,):
        raise DimensionError(f"expected {pool.dim}-vector, got shape {raw.shape}")
    span = pool.maxima - pool.minima
    out = np.where(pool.constant_dims, 0.5, (raw - pool.minima) / np.where(span == 0, 1.0, span))
    return out


def denormalize(pool: ModelPool, unit: np.ndarray) -> np.ndarray:
    """Inverse of :func:`normalize`; requires every component in [0, 1].

    Constant dimensions recover their constant raw value regardless of input.
    """
    unit = np.asarray(unit, dtype=float)
    if unit.shape != (pool.dim,):
        raise DimensionError(f"expected {pool.dim}-vector, got shape {unit.shape}")
    if np.any(unit < 0.0) or np.any(unit > 1.0):
        raise DomainError("denormalize input must lie in [0, 1] on every dimension")
    return np.where(pool.constant_dims, pool.minima, pool.minima + unit * (pool.maxima - pool.minima))
