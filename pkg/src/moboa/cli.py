"""Command-line interface.

Subcommands: run, resume, analyze, project, hv, importance, validate-pool.
Settings resolve with precedence flags > environment (MOBOA_*) > config file >
defaults. Diagnostics go to stderr; data goes to files or stdout.

Exit codes: 0 success, 2 configuration error, 3 evaluator failure (partial
history preserved), 4 missing or corrupt history.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import analysis
from .configuration import ContinuousConfiguration, RoleSet, nearest_model_index, project
from .errors import (
    ConfigError,
    DimensionError,
    DomainError,
    EvaluationError,
    HistoryError,
    MoboaError,
)
from .evaluators import EvaluatorSpec, load_replay_table
from .history import HISTORY_FILENAME, RunHistory, history_from_replay_table, load_history
from .loop import RunConfig, config_from_manifest, resume, run
from .pareto import ReferencePoint
from .pool import default_pool_path, load_pool

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_EVALUATOR = 3
EXIT_HISTORY = 4


def _parse_evaluator(text: str, extra_parameters: dict | None = None) -> EvaluatorSpec:
    parameters = dict(extra_parameters or {})
    if text == "synthetic":
        return EvaluatorSpec(kind="synthetic", parameters=parameters)
    if text.startswith("tabular:"):
        parameters["path"] = text.split(":", 1)[1]
        return EvaluatorSpec(kind="tabular", parameters=parameters)
    if text.startswith("external:"):
        parameters["command"] = text.split(":", 1)[1]
        return EvaluatorSpec(kind="external", parameters=parameters)
    raise ConfigError(
        f"unknown evaluator {text!r}; use synthetic, tabular:PATH, or external:CMD"
    )


def _parse_ref_point(text: str) -> tuple[float, float]:
    """``A,C`` with accuracy A and positive USD cost C."""
    try:
        acc_str, cost_str = text.split(",")
        return (float(acc_str), -float(cost_str))
    except ValueError:
        raise ConfigError(f"--ref-point expects 'accuracy,cost_usd', got {text!r}") from None


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _resolve_run_config(args) -> tuple[RunConfig, str | None]:
    doc = _load_config_file(args.config)
    env_seed = os.environ.get("MOBOA_SEED")
    env_out = os.environ.get("MOBOA_OUT")

    seed = args.seed
    if seed is None and env_seed is not None:
        try:
            seed = int(env_seed)
        except ValueError:
            raise ConfigError(f"MOBOA_SEED must be an integer, got {env_seed!r}") from None
    if seed is None:
        seed = int(doc.get("seed", 0))

    n_init = args.n_init if args.n_init is not None else int(doc.get("n_init", 15))
    n_iterations = (
        args.n_iterations if args.n_iterations is not None else int(doc.get("n_iterations", 15))
    )
    pool_path = args.pool or doc.get("pool")
    out_dir = args.out or env_out or doc.get("out")

    evaluator_text = args.evaluator or doc.get("evaluator", "synthetic")
    evaluator = _parse_evaluator(evaluator_text, doc.get("evaluator_parameters"))

    if args.ref_point is not None:
        reference = _parse_ref_point(args.ref_point)
    elif "ref_point" in doc:
        raw = doc["ref_point"]
        reference = (float(raw[0]), -float(raw[1]))
    else:
        reference = None

    config = RunConfig(
        seed=seed,
        n_init=n_init,
        n_iterations=n_iterations,
        roles=tuple(doc.get("roles", RunConfig().roles)),
        pool_path=str(pool_path) if pool_path else None,
        evaluator=evaluator,
        gp_restarts=int(doc.get("gp_restarts", 8)),
        acquisition_restarts=int(doc.get("acquisition_restarts", 32)),
        acquisition_local_steps=int(doc.get("acquisition_local_steps", 60)),
        reference_point=reference,
        record_timestamps=bool(doc.get("record_timestamps", False)),
    )
    return config, out_dir


def _load_history_any(path: str) -> RunHistory:
    """Run directory / history file / replay table, by shape and extension."""
    p = Path(path)
    if p.suffix.lower() in (".csv", ".tsv"):
        return history_from_replay_table(load_replay_table(p))
    return load_history(p)


def _print_err(message: str) -> None:
    print(f"error: {message}", file=sys.stderr)


def _cmd_run(args) -> int:
    config, out_dir = _resolve_run_config(args)
    if out_dir is None:
        pool = config.resolve_pool()
        from .loop import _run_id  # default directory named after the deterministic run id

        out_dir = Path("runs") / _run_id(config, pool.content_hash())
    try:
        history = run(config, out_dir=out_dir)
    except EvaluationError as err:
        _print_err(f"evaluation failed: {err}")
        _print_err(f"partial history preserved; resume with: moboa resume --history {out_dir}")
        return EXIT_EVALUATOR
    analysis.write_reports(history, out_dir)
    print(f"{len(history.records)} evaluations -> {out_dir}")
    return EXIT_OK


def _cmd_resume(args) -> int:
    history = load_history(args.history)
    config = config_from_manifest(history.manifest)
    if args.n_iterations is not None:
        config.n_iterations = args.n_iterations
    if args.pool:
        config.pool_path = args.pool
    out_dir = Path(args.history)
    if not out_dir.is_dir():
        out_dir = out_dir.parent
    try:
        history = resume(history, config, out_dir=out_dir)
    except EvaluationError as err:
        _print_err(f"evaluation failed: {err}")
        _print_err(f"partial history preserved; resume with: moboa resume --history {out_dir}")
        return EXIT_EVALUATOR
    analysis.write_reports(history, out_dir)
    print(f"{len(history.records)} evaluations -> {out_dir}")
    return EXIT_OK


def _cmd_analyze(args) -> int:
    history = _load_history_any(args.history)
    ref = ReferencePoint(*_parse_ref_point(args.ref_point)) if args.ref_point else None
    edges = (
        tuple(float(v) for v in args.tiers.split(","))
        if args.tiers
        else analysis.DEFAULT_TIER_EDGES
    )
    out_dir = Path(args.out) if args.out else Path(args.history).with_suffix("") / "reports"
    bundle = analysis.write_reports(history, out_dir, ref=ref, tier_edges=edges)
    print(f"front of {len(bundle['front'])} points -> {out_dir}")
    return EXIT_OK


def _cmd_hv(args) -> int:
    history = _load_history_any(args.history)
    ref = ReferencePoint(*_parse_ref_point(args.ref_point)) if args.ref_point else None
    print("iteration,hypervolume")
    for k, value in analysis.hypervolume_trace(history, ref):
        print(f"{k},{value!r}")
    return EXIT_OK


def _cmd_importance(args) -> int:
    history = _load_history_any(args.history)
    report = analysis.importance_from_history(history)
    if report is None:
        raise HistoryError("history carries no fitted hyperparameters (no guided records)")
    print("feature,accuracy_importance,neg_cost_importance")
    for label, acc, cost in report.features:
        print(f"{label},{acc!r},{cost!r}")
    print("role,accuracy_importance,neg_cost_importance")
    for role, acc, cost in report.agents:
        print(f"{role},{acc!r},{cost!r}")
    return EXIT_OK


def _cmd_project(args) -> int:
    pool = load_pool(args.pool or default_pool_path())
    try:
        values = np.array([float(v) for v in args.values], dtype=float)
    except ValueError:
        raise ConfigError("projection values must be numbers") from None
    roles = RoleSet(tuple(args.roles.split(","))) if args.roles else RoleSet()
    d = pool.dim
    if values.shape == (d,):
        matrix = values[None, :]
        role_names = ("role",)
    elif values.shape == (roles.count * d,):
        matrix = values.reshape(roles.count, d)
        role_names = roles.roles
    else:
        raise DimensionError(
            f"expected {d} or {roles.count * d} values, got {len(values)}"
        )
    normalized = pool.normalized_matrix()
    for name, row in zip(role_names, matrix):
        idx, dist = nearest_model_index(pool, row)
        active = ~pool.constant_dims
        dists = np.sqrt(((normalized[:, active] - row[active]) ** 2).sum(axis=1))
        ties = int(np.sum(np.isclose(dists, dists[idx], rtol=0.0, atol=0.0)))
        note = " (tie, lowest pool index wins)" if ties > 1 else ""
        print(f"{name}: {pool.models[idx].id} distance={dist:.6f}{note}")
    return EXIT_OK


def _cmd_validate_pool(args) -> int:
    pool = load_pool(args.pool or default_pool_path())
    print(f"pool ok: {pool.size} models x {pool.dim} features ({pool.content_hash()})")
    for name, lo, hi, const in zip(
        pool.schema.names, pool.minima, pool.maxima, pool.constant_dims
    ):
        flag = " [constant]" if const else ""
        print(f"  {name}: min={lo:g} max={hi:g}{flag}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="moboa",
        description="Multi-objective Bayesian optimization of model-to-role assignments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute a full optimization run")
    resume_p = sub.add_parser("resume", help="continue an interrupted run")
    analyze_p = sub.add_parser("analyze", help="write the report bundle for a history")
    hv_p = sub.add_parser("hv", help="print the hypervolume trace of a history")
    imp_p = sub.add_parser("importance", help="print feature importances of a history")
    project_p = sub.add_parser("project", help="project a feature vector onto the pool")
    validate_p = sub.add_parser("validate-pool", help="check a pool document")

    for p in (run_p,):
        p.add_argument("--config", help="TOML run configuration file")
        p.add_argument("--pool", help="pool document (default: packaged pool)")
        p.add_argument("--seed", type=int)
        p.add_argument("--n-init", type=int, dest="n_init")
        p.add_argument("--n-iterations", type=int, dest="n_iterations")
        p.add_argument(
            "--evaluator", help="synthetic | tabular:PATH | external:CMD (default synthetic)"
        )
        p.add_argument("--out", help="run directory (default: env MOBOA_OUT or runs/<run-id>)")
        p.add_argument("--ref-point", dest="ref_point", help="accuracy,cost_usd")

    resume_p.add_argument("--history", required=True, help="run directory to continue")
    resume_p.add_argument("--pool", help="pool document override (hash-checked)")
    resume_p.add_argument("--n-iterations", type=int, dest="n_iterations")

    for p in (analyze_p, hv_p, imp_p):
        p.add_argument("--history", required=True, help="run directory, history file, or replay table")
        p.add_argument("--ref-point", dest="ref_point", help="accuracy,cost_usd")
    analyze_p.add_argument("--out", help="report directory")
    analyze_p.add_argument("--tiers", help="comma-separated performance bin edges")

    project_p.add_argument("--pool", help="pool document (default: packaged pool)")
    project_p.add_argument("--roles", help="comma-separated role names")
    project_p.add_argument("values", nargs="+", help="normalized feature values (D or N*D)")

    validate_p.add_argument("--pool", help="pool document (default: packaged pool)")
    return parser


_HANDLERS = {
    "run": _cmd_run,
    "resume": _cmd_resume,
    "analyze": _cmd_analyze,
    "hv": _cmd_hv,
    "importance": _cmd_importance,
    "project": _cmd_project,
    "validate-pool": _cmd_validate_pool,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except HistoryError as err:
        _print_err(str(err))
        return EXIT_HISTORY
    except EvaluationError as err:
        _print_err(str(err))
        return EXIT_EVALUATOR
    except (ConfigError, DimensionError, DomainError) as err:
        _print_err(str(err))
        return EXIT_CONFIG
    except MoboaError as err:
        _print_err(str(err))
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
