"""Black-box team evaluation: synthetic benchmark, tabular replay, external process.

Every evaluator maps a discrete team assignment to an accuracy in [0, 1] and a
non-negative USD cost; those bounds are enforced at this interface regardless
of where the numbers came from. Cost always follows the token law
``sum over roles of (input_tokens * price_in + output_tokens * price_out)``
with prices in USD per one million tokens.
"""

from __future__ import annotations

import csv
import json
import shlex
import subprocess
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .configuration import RoleSet, TeamAssignment
from .errors import ConfigError, EvaluationError, SchemaError, TabularLookupError
from .pool import INPUT_PRICE, OUTPUT_PRICE, PERFORMANCE_SCORE, ModelPool

EVALUATOR_KINDS = ("synthetic", "tabular", "external")


@dataclass(frozen=True)
class EvaluationResult:
    """Outcome of one black-box evaluation."""

    accuracy: float
    cost_usd: float
    per_role_tokens: dict[str, tuple[int, int]] | None = None
    wall_seconds: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "accuracy", float(self.accuracy))
        object.__setattr__(self, "cost_usd", float(self.cost_usd))
        if not 0.0 <= self.accuracy <= 1.0:
            raise EvaluationError(f"accuracy {self.accuracy} outside [0, 1]")
        if self.cost_usd < 0.0:
            raise EvaluationError(f"cost {self.cost_usd} is negative")


@dataclass(frozen=True)
class EvaluatorSpec:
    """Which evaluator to use plus its kind-specific parameters."""

    kind: str
    parameters: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in EVALUATOR_KINDS:
            raise ConfigError(f"unknown evaluator kind {self.kind!r}")


# ---------------------------------------------------------------------------
# Synthetic benchmark
# ---------------------------------------------------------------------------

SYNTHETIC_DEFAULTS = {
    "gain": 1.1,
    "manager_weight": 0.6,
    "manager_floor": 0.15,
    "reasoning_feature": "mmlu_pro",
    "coding_feature": "livecodebench",
    "input_tokens": 300_000,
    "output_tokens": 50_000,
    "search_output_multiplier": 2.0,
    "quantize": False,
}


def _synthetic_params(overrides: Mapping) -> dict:
    params = dict(SYNTHETIC_DEFAULTS)
    unknown = set(overrides) - set(params)
    if unknown:
        raise ConfigError(f"unknown synthetic parameters: {sorted(unknown)}")
    params.update(overrides)
    return params


def _feature_index(pool: ModelPool, name: str, fallback_rank: int) -> int:
    """Index of a named performance feature, or the nth performance dim as fallback."""
    if name in pool.schema.names:
        return pool.schema.index_of(name)
    perf = [i for i, kind in enumerate(pool.schema.kinds) if kind == PERFORMANCE_SCORE]
    if not perf:
        raise SchemaError("synthetic evaluator needs at least one performance-score feature")
    return perf[min(fallback_rank, len(perf) - 1)]


def synthetic_objective(
    team: TeamAssignment, pool: ModelPool, roles: RoleSet, parameters: Mapping | None = None
) -> tuple[float, dict[str, tuple[int, int]]]:
    """Deterministic accuracy and token profile for a team.

    Accuracy is a saturating blend dominated by the first role's reasoning
    score (weight 0.6, remaining weight split across the other roles; the
    second role contributes its coding score instead). It drops to zero when
    the first role's reasoning score falls below the floor threshold, no
    matter how strong the rest of the team is. Output volume, not input, is
    the cost driver: the second role emits twice the output-token baseline.
    """
    params = _synthetic_params(parameters or {})
    reasoning = _feature_index(pool, params["reasoning_feature"], 0)
    coding = _feature_index(pool, params["coding_feature"], 1)
    feats = team.resolved_features
    n = roles.count

    lead = feats[0, reasoning]
    if lead < params["manager_floor"]:
        accuracy = 0.0
    else:
        if n == 1:
            score = lead
        else:
            share = (1.0 - params["manager_weight"]) / (n - 1)
            score = params["manager_weight"] * lead
            for i in range(1, n):
                dim = coding if i == 1 else reasoning
                score += share * feats[i, dim]
        accuracy = min(1.0, max(0.0, params["gain"] * score))
    if params["quantize"]:
        accuracy = round(accuracy * 10.0) / 10.0

    tokens = {}
    for i, role in enumerate(roles.roles):
        out = params["output_tokens"] * (params["search_output_multiplier"] if i == 1 else 1.0)
        tokens[role] = (int(params["input_tokens"]), int(round(out)))
    return accuracy, tokens


def token_cost(
    pool: ModelPool, team: TeamAssignment, tokens: Mapping[str, tuple[int, int]]
) -> float:
    """USD cost of a token profile under the assigned models' raw prices."""
    in_dims = [i for i, k in enumerate(pool.schema.kinds) if k == INPUT_PRICE]
    out_dims = [i for i, k in enumerate(pool.schema.kinds) if k == OUTPUT_PRICE]
    total = 0.0
    for role, model_id in team.assignment.items():
        raw = np.asarray(pool.models[pool.index_of(model_id)].features)
        in_tok, out_tok = tokens[role]
        total += in_tok * raw[in_dims].sum() / 1e6 + out_tok * raw[out_dims].sum() / 1e6
    return total


# ---------------------------------------------------------------------------
# Tabular replay
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReplayTable:
    """Parsed replay table: role columns plus (accuracy, cost_usd) per team."""

    roles: tuple[str, ...]
    rows: tuple[tuple[tuple[str, ...], float, float], ...]

    def lookup(self, team: TeamAssignment) -> tuple[float, float]:
        key = tuple(team.assignment[r] for r in self.roles)
        for row_key, accuracy, cost in self.rows:
            if row_key == key:
                return accuracy, cost
        raise TabularLookupError(f"team {dict(zip(self.roles, key))} not in replay table")


def load_replay_table(path) -> ReplayTable:
    """Read a delimited replay table (CSV; tab-separated for .tsv files).

    Expected header: one column per role, then ``accuracy`` and ``cost_usd``.
    Conflicting duplicate teams are a config error.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"replay table not found: {path}")
    delimiter = "\t" if path.suffix.lower() == ".tsv" else ","
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh, delimiter=delimiter)
        header = reader.fieldnames or []
        if "accuracy" not in header or "cost_usd" not in header:
            raise SchemaError(f"replay table {path} needs accuracy and cost_usd columns")
        roles = tuple(c for c in header if c not in ("accuracy", "cost_usd"))
        if not roles:
            raise SchemaError(f"replay table {path} has no role columns")
        seen: dict[tuple[str, ...], tuple[float, float]] = {}
        rows = []
        for line_no, row in enumerate(reader, start=2):
            try:
                key = tuple(row[r].strip() for r in roles)
                accuracy = float(row["accuracy"])
                cost = float(row["cost_usd"])
            except (AttributeError, TypeError, ValueError, KeyError):
                raise SchemaError(f"replay table {path} line {line_no} is malformed") from None
            if key in seen and seen[key] != (accuracy, cost):
                raise ConfigError(f"replay table {path} line {line_no}: conflicting duplicate team")
            if key not in seen:
                seen[key] = (accuracy, cost)
                rows.append((key, accuracy, cost))
    return ReplayTable(roles=roles, rows=tuple(rows))


# ---------------------------------------------------------------------------
# External process protocol
# ---------------------------------------------------------------------------


def external_evaluate(
    parameters: Mapping,
    team: TeamAssignment,
    run_id: str = "adhoc",
    iteration: int = 0,
) -> EvaluationResult:
    """Delegate one evaluation to an external harness.

    Command mode: the configured command receives the request document on
    stdin and must print the reply document to stdout. Directory mode: the
    request is written to ``<dir>/<run_id>-<iteration>.request.json`` and the
    matching ``.reply.json`` is polled for until the timeout.

    Request fields: run_id, iteration, assignment {role: model_id}.
    Reply fields: accuracy, cost_usd, optional tokens {role: {input, output}}.
    """
    timeout = float(parameters.get("timeout", 3600.0))
    attempts = int(parameters.get("retries", 0)) + 1
    request = {
        "run_id": run_id,
        "iteration": iteration,
        "assignment": dict(team.assignment),
    }
    payload = json.dumps(request, sort_keys=True)

    last_error: EvaluationError | None = None
    for _ in range(attempts):
        try:
            if "command" in parameters:
                raw = _run_command(parameters["command"], payload, timeout)
            elif "directory" in parameters:
                raw = _exchange_files(parameters["directory"], request, payload, timeout)
            else:
                raise ConfigError("external evaluator needs a command or directory parameter")
            return _parse_reply(raw, team)
        except EvaluationError as err:
            last_error = err
    raise last_error


def _run_command(command: str, payload: str, timeout: float) -> str:
    argv = shlex.split(command)
    try:
        proc = subprocess.run(
            argv, input=payload, capture_output=True, text=True, timeout=timeout
        )
    except subprocess.TimeoutExpired:
        raise EvaluationError(f"external harness timed out after {timeout} s") from None
    except OSError as err:
        raise EvaluationError(f"cannot launch external harness: {err}") from None
    if proc.returncode != 0:
        raise EvaluationError(
            f"external harness exited with status {proc.returncode}", payload=proc.stderr
        )
    return proc.stdout


def _exchange_files(directory, request: dict, payload: str, timeout: float) -> str:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    stem = f"{request['run_id']}-{request['iteration']}"
    (directory / f"{stem}.request.json").write_text(payload)
    reply_path = directory / f"{stem}.reply.json"
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        if reply_path.exists():
            return reply_path.read_text()
        time.sleep(0.05)
    raise EvaluationError(f"no reply at {reply_path} within {timeout} s")


def _parse_reply(raw: str, team: TeamAssignment) -> EvaluationResult:
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError:
        raise EvaluationError("external reply is not valid JSON", payload=raw) from None
    if not isinstance(doc, dict) or "accuracy" not in doc or "cost_usd" not in doc:
        raise EvaluationError("external reply missing accuracy/cost_usd", payload=raw)
    try:
        accuracy = float(doc["accuracy"])
        cost = float(doc["cost_usd"])
    except (TypeError, ValueError):
        raise EvaluationError("external reply fields are not numeric", payload=raw) from None
    tokens = None
    if "tokens" in doc and doc["tokens"] is not None:
        try:
            tokens = {
                role: (int(tt["input"]), int(tt["output"])) for role, tt in doc["tokens"].items()
            }
        except (TypeError, KeyError, ValueError):
            raise EvaluationError("external reply token map is malformed", payload=raw) from None
    try:
        return EvaluationResult(accuracy=accuracy, cost_usd=cost, per_role_tokens=tokens)
    except EvaluationError as err:
        raise EvaluationError(f"external reply out of range: {err}", payload=raw) from None


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------


class Evaluator:
    """Bound evaluator: spec + pool + roles, ready to score teams."""

    def __init__(self, spec: EvaluatorSpec, pool: ModelPool, roles: RoleSet):
        self.spec = spec
        self.pool = pool
        self.roles = roles
        if spec.kind == "tabular":
            source = spec.parameters.get("path")
            if source is None:
                raise ConfigError("tabular evaluator needs a path parameter")
            self._table = load_replay_table(source)
        elif spec.kind == "synthetic":
            self._params = _synthetic_params(spec.parameters)

    def evaluate(
        self,
        team: TeamAssignment,
        rng: np.random.Generator | None = None,
        run_id: str = "adhoc",
        iteration: int = 0,
    ) -> EvaluationResult:
        for model_id in team.assignment.values():
            self.pool.index_of(model_id)  # raises ConfigError for foreign ids
        if self.spec.kind == "synthetic":
            accuracy, tokens = synthetic_objective(team, self.pool, self.roles, self._params)
            cost = token_cost(self.pool, team, tokens)
            return EvaluationResult(accuracy=accuracy, cost_usd=cost, per_role_tokens=tokens)
        if self.spec.kind == "tabular":
            accuracy, cost = self._table.lookup(team)
            return EvaluationResult(accuracy=accuracy, cost_usd=cost)
        return external_evaluate(self.spec.parameters, team, run_id=run_id, iteration=iteration)


def evaluate(
    spec: EvaluatorSpec,
    team: TeamAssignment,
    pool: ModelPool,
    roles: RoleSet,
    rng: np.random.Generator | None = None,
    run_id: str = "adhoc",
    iteration: int = 0,
) -> EvaluationResult:
    """One-shot convenience wrapper around :class:`Evaluator`."""
    return Evaluator(spec, pool, roles).evaluate(team, rng, run_id=run_id, iteration=iteration)
