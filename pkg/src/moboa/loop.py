"""The optimization loop: random initialization, then fit / acquire / project /
evaluate until the evaluation budget is spent.

Randomness is organized as one master seed with named substreams keyed by
(stream, iteration), so any prefix of a run can be replayed exactly and a
resumed run is byte-identical to an uninterrupted one.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .acquisition import AcquisitionContext, optimize_acquisition
from .configuration import (
    DEFAULT_ROLES,
    ContinuousConfiguration,
    RoleSet,
    project,
    random_configuration,
)
from .errors import ConfigError, HistoryError
from .evaluators import Evaluator, EvaluatorSpec
from .gp import fit
from .history import (
    PHASE_BO,
    PHASE_INIT,
    SCHEMA_VERSION,
    HistoryRecord,
    HistoryWriter,
    RunHistory,
)
from .pareto import ReferencePoint, non_dominated_set
from .pool import ModelPool, default_pool_path, load_pool

# Substream codes for the master-seed derivation.
_STREAM_INIT = 1
_STREAM_EVAL_INIT = 2
_STREAM_FIT_ACC = 3
_STREAM_FIT_COST = 4
_STREAM_ACQ = 5
_STREAM_EVAL_BO = 6

REFERENCE_COST_MULTIPLIER = 2.0


@dataclass
class RunConfig:
    """Everything that determines a run. (config, seed) fixes the full history
    for synthetic and tabular evaluators."""

    seed: int = 0
    n_init: int = 15
    n_iterations: int = 15
    q: int = 1
    roles: tuple[str, ...] = DEFAULT_ROLES
    pool_path: str | None = None  # None selects the packaged default pool
    evaluator: EvaluatorSpec = field(default_factory=lambda: EvaluatorSpec(kind="synthetic"))
    gp_restarts: int = 8
    acquisition_restarts: int = 32
    acquisition_local_steps: int = 60
    reference_point: tuple[float, float] | None = None  # (accuracy, neg_cost), None = policy
    record_timestamps: bool = False

    def __post_init__(self):
        if self.n_init < 2:
            raise ConfigError(f"n_init must be >= 2, got {self.n_init}")
        if self.n_iterations < 0:
            raise ConfigError("n_iterations must be >= 0")
        if self.q != 1:
            raise ConfigError("only batch size q=1 is supported")
        self.roles = tuple(self.roles)

    def role_set(self) -> RoleSet:
        return RoleSet(roles=self.roles)

    def resolve_pool(self) -> ModelPool:
        return load_pool(self.pool_path if self.pool_path else default_pool_path())


def _substream(seed: int, stream: int, iteration: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), stream, int(iteration)]))


def _run_id(config: RunConfig, pool_hash: str) -> str:
    core = {
        "seed": config.seed,
        "n_init": config.n_init,
        "n_iterations": config.n_iterations,
        "roles": list(config.roles),
        "pool_hash": pool_hash,
        "evaluator": {"kind": config.evaluator.kind, "parameters": config.evaluator.parameters},
    }
    digest = hashlib.sha256(json.dumps(core, sort_keys=True, default=str).encode()).hexdigest()
    return f"run-{digest[:12]}"


def build_manifest(config: RunConfig, pool: ModelPool) -> dict:
    pool_hash = pool.content_hash()
    return {
        "schema_version": SCHEMA_VERSION,
        "run_id": _run_id(config, pool_hash),
        "seed": config.seed,
        "n_init": config.n_init,
        "n_iterations": config.n_iterations,
        "q": config.q,
        "roles": list(config.roles),
        "pool_hash": pool_hash,
        "pool_path": str(config.pool_path) if config.pool_path else None,
        "feature_names": list(pool.schema.names),
        "evaluator": {"kind": config.evaluator.kind, "parameters": config.evaluator.parameters},
        "acquisition": {
            "restarts": config.acquisition_restarts,
            "local_steps": config.acquisition_local_steps,
        },
        "gp_restarts": config.gp_restarts,
        "reference_point": (
            list(config.reference_point) if config.reference_point is not None else None
        ),
        "record_timestamps": config.record_timestamps,
    }


def _timestamp(config: RunConfig) -> str | None:
    if not config.record_timestamps:
        return None
    return datetime.now(timezone.utc).isoformat()


def _frozen_reference(config: RunConfig, history: RunHistory) -> tuple[float, float]:
    """Reference-point policy: user-supplied, else (0, -2 x max init cost)."""
    if config.reference_point is not None:
        return (float(config.reference_point[0]), float(config.reference_point[1]))
    init_costs = [r.cost_usd for r in history.phase_records(PHASE_INIT)]
    if not init_costs:
        raise HistoryError("cannot derive a reference point before initialization")
    return (0.0, -REFERENCE_COST_MULTIPLIER * max(init_costs))


def _params_snapshot(model) -> dict:
    return {
        "lengthscales": [float(v) for v in model.params.lengthscales],
        "signal_variance": float(model.params.signal_variance),
        "noise_variance": float(model.params.noise_variance),
    }


def initialize(
    config: RunConfig,
    pool: ModelPool,
    evaluator: Evaluator,
    history: RunHistory | None = None,
    writer: HistoryWriter | None = None,
) -> RunHistory:
    """Evaluate random teams until the init budget is met (resume-aware).

    On evaluator failure the partial history is already persisted; the error
    propagates so the caller can surface the run directory as a resume token.
    """
    if history is None:
        history = RunHistory(manifest=build_manifest(config, pool))
        if writer is not None:
            writer.write_manifest(history.manifest)
    roles = config.role_set()
    run_id = history.manifest["run_id"]
    done = len(history.phase_records(PHASE_INIT))
    for i in range(done + 1, config.n_init + 1):
        team = random_configuration(pool, roles, _substream(config.seed, _STREAM_INIT, i))
        result = evaluator.evaluate(
            team,
            _substream(config.seed, _STREAM_EVAL_INIT, i),
            run_id=run_id,
            iteration=len(history.records) + 1,
        )
        record = HistoryRecord(
            index=len(history.records),
            phase=PHASE_INIT,
            iteration=i,
            team=dict(team.assignment),
            features=team.resolved_features,
            accuracy=result.accuracy,
            cost_usd=result.cost_usd,
            tokens=(
                None
                if result.per_role_tokens is None
                else {r: list(t) for r, t in result.per_role_tokens.items()}
            ),
            wall_seconds=result.wall_seconds,
            timestamp=_timestamp(config),
        )
        history.append(record)
        if writer is not None:
            writer.append(record)
    if history.manifest.get("reference_point") is None:
        history.manifest["reference_point"] = list(_frozen_reference(config, history))
        if writer is not None:
            writer.write_manifest(history.manifest)
    return history


def step(
    config: RunConfig,
    pool: ModelPool,
    evaluator: Evaluator,
    history: RunHistory,
    writer: HistoryWriter | None = None,
) -> RunHistory:
    """One guided iteration: fit both surrogates, maximize the acquisition,
    project, evaluate the projected team, append the record."""
    t = len(history.phase_records(PHASE_BO)) + 1
    roles = config.role_set()

    inputs = history.feature_matrix()
    accuracies = np.array([r.accuracy for r in history.records])
    neg_costs = np.array([-r.cost_usd for r in history.records])
    gp_acc = fit(inputs, accuracies, config.gp_restarts, _substream(config.seed, _STREAM_FIT_ACC, t))
    gp_cost = fit(inputs, neg_costs, config.gp_restarts, _substream(config.seed, _STREAM_FIT_COST, t))

    front = non_dominated_set(history.objectives())
    ref_values = history.manifest.get("reference_point")
    if ref_values is None:
        ref_values = _frozen_reference(config, history)
        history.manifest["reference_point"] = list(ref_values)
    reference = ReferencePoint(accuracy=ref_values[0], neg_cost=ref_values[1])

    ctx = AcquisitionContext(
        gp_accuracy=gp_acc, gp_negcost=gp_cost, front=front, reference=reference
    )
    proposal = optimize_acquisition(
        ctx,
        restarts=config.acquisition_restarts,
        local_steps=config.acquisition_local_steps,
        rng=_substream(config.seed, _STREAM_ACQ, t),
    )
    candidate = ContinuousConfiguration(
        values=proposal.x, n_roles=roles.count, n_dims=pool.dim
    )
    team = project(pool, candidate, roles)
    result = evaluator.evaluate(
        team,
        _substream(config.seed, _STREAM_EVAL_BO, t),
        run_id=history.manifest["run_id"],
        iteration=len(history.records) + 1,
    )
    record = HistoryRecord(
        index=len(history.records),
        phase=PHASE_BO,
        iteration=t,
        team=dict(team.assignment),
        features=team.resolved_features,
        accuracy=result.accuracy,
        cost_usd=result.cost_usd,
        tokens=(
            None
            if result.per_role_tokens is None
            else {r: list(t_) for r, t_ in result.per_role_tokens.items()}
        ),
        wall_seconds=result.wall_seconds,
        proposal=proposal.x,
        acquisition_value=proposal.acquisition_value,
        gp_params={"accuracy": _params_snapshot(gp_acc), "neg_cost": _params_snapshot(gp_cost)},
        timestamp=_timestamp(config),
    )
    history.append(record)
    if writer is not None:
        writer.append(record)
    return history


def run(config: RunConfig, out_dir: str | Path | None = None) -> RunHistory:
    """Full budget: initialization plus ``n_iterations`` guided evaluations."""
    pool = config.resolve_pool()
    evaluator = Evaluator(config.evaluator, pool, config.role_set())
    writer = HistoryWriter(out_dir) if out_dir is not None else None
    history = initialize(config, pool, evaluator, writer=writer)
    for _ in range(config.n_iterations):
        step(config, pool, evaluator, history, writer=writer)
    return history


def _check_resumable(config: RunConfig, pool: ModelPool, history: RunHistory) -> None:
    manifest = history.manifest
    mismatches = []
    if manifest.get("pool_hash") != pool.content_hash():
        mismatches.append("pool hash")
    if tuple(manifest.get("roles", ())) != tuple(config.roles):
        mismatches.append("roles")
    if manifest.get("seed") != config.seed:
        mismatches.append("seed")
    if manifest.get("n_init") != config.n_init:
        mismatches.append("n_init")
    if manifest.get("evaluator", {}).get("kind") != config.evaluator.kind:
        mismatches.append("evaluator kind")
    if mismatches:
        raise HistoryError(
            "history does not match the run configuration (" + ", ".join(mismatches) + ")"
        )


def resume(history: RunHistory, config: RunConfig, out_dir: str | Path | None = None) -> RunHistory:
    """Continue a partial run; the completed portion is trusted as-is.

    The per-(stream, iteration) seeding means the continuation reproduces
    exactly what an uninterrupted run would have written.
    """
    pool = config.resolve_pool()
    _check_resumable(config, pool, history)
    evaluator = Evaluator(config.evaluator, pool, config.role_set())
    writer = HistoryWriter(out_dir) if out_dir is not None else None
    history = initialize(config, pool, evaluator, history=history, writer=writer)
    while len(history.phase_records(PHASE_BO)) < config.n_iterations:
        step(config, pool, evaluator, history, writer=writer)
    return history


def config_from_manifest(manifest: dict) -> RunConfig:
    """Rebuild the run configuration recorded in a manifest."""
    evaluator = manifest.get("evaluator", {"kind": "synthetic", "parameters": {}})
    ref = manifest.get("reference_point")
    return RunConfig(
        seed=int(manifest["seed"]),
        n_init=int(manifest["n_init"]),
        n_iterations=int(manifest["n_iterations"]),
        q=int(manifest.get("q", 1)),
        roles=tuple(manifest["roles"]),
        pool_path=manifest.get("pool_path"),
        evaluator=EvaluatorSpec(
            kind=evaluator["kind"], parameters=dict(evaluator.get("parameters", {}))
        ),
        gp_restarts=int(manifest.get("gp_restarts", 8)),
        acquisition_restarts=int(manifest.get("acquisition", {}).get("restarts", 32)),
        acquisition_local_steps=int(manifest.get("acquisition", {}).get("local_steps", 60)),
        reference_point=None if ref is None else (float(ref[0]), float(ref[1])),
        record_timestamps=bool(manifest.get("record_timestamps", False)),
    )
