"""Post-hoc reporting over a run history.

Every report is a pure function of the loaded history; ``write_reports``
renders the whole bundle as delimited tables plus one machine-readable JSON
document. Long-format tables (iteration, series, value) are emitted for
external plotting; no figures are rendered here.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import HistoryError
from .history import PHASE_BO, PHASE_INIT, RunHistory
from .pareto import ParetoFront, ReferencePoint, hypervolume_2d, non_dominated_set
from .stats import cohens_d, welch_t_test

DEFAULT_TIER_EDGES = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5)


# ---------------------------------------------------------------------------
# Phase statistics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PhaseComparison:
    """Init-vs-guided comparison for one objective.

    The test statistics are computed in the maximization framing (cost is
    negated), so a positive t means the guided phase improved the objective.
    ``percent_change`` is on the raw reported means.
    """

    objective: str
    init: dict
    bo: dict
    t_statistic: float
    df: float
    p_value: float
    cohens_d: float
    percent_change: float | None


def _summary(values: np.ndarray) -> dict:
    return {
        "mean": float(values.mean()),
        "std": float(values.std(ddof=1)) if len(values) > 1 else 0.0,
        "min": float(values.min()),
        "max": float(values.max()),
        "count": int(len(values)),
    }


def phase_stats(history: RunHistory) -> dict[str, PhaseComparison]:
    """Welch t-test, Cohen's d, and summary stats per objective and phase."""
    init = history.phase_records(PHASE_INIT)
    bo = history.phase_records(PHASE_BO)
    if len(init) < 2 or len(bo) < 2:
        raise HistoryError("phase statistics need at least 2 records in each phase")
    out = {}
    for objective, raw_getter, sign in (
        ("accuracy", lambda r: r.accuracy, 1.0),
        ("cost_usd", lambda r: r.cost_usd, -1.0),
    ):
        raw_init = np.array([raw_getter(r) for r in init])
        raw_bo = np.array([raw_getter(r) for r in bo])
        t, df, p = welch_t_test(sign * raw_bo, sign * raw_init)
        d = cohens_d(sign * raw_bo, sign * raw_init)
        mean_init = raw_init.mean()
        change = (
            None
            if mean_init == 0.0
            else float((raw_bo.mean() - mean_init) / abs(mean_init) * 100.0)
        )
        out[objective] = PhaseComparison(
            objective=objective,
            init=_summary(raw_init),
            bo=_summary(raw_bo),
            t_statistic=t,
            df=df,
            p_value=p,
            cohens_d=d,
            percent_change=change,
        )
    return out


# ---------------------------------------------------------------------------
# Hypervolume trace and reference handling
# ---------------------------------------------------------------------------


def resolve_reference(history: RunHistory, ref: ReferencePoint | None = None) -> ReferencePoint:
    """Reference for analyses: explicit > manifest > policy over init records."""
    if ref is not None:
        return ref
    stored = history.manifest.get("reference_point")
    if stored is not None:
        return ReferencePoint(accuracy=float(stored[0]), neg_cost=float(stored[1]))
    costs = [r.cost_usd for r in history.phase_records(PHASE_INIT)] or [
        r.cost_usd for r in history.records
    ]
    if not costs:
        raise HistoryError("cannot derive a reference point from an empty history")
    return ReferencePoint(accuracy=0.0, neg_cost=-2.0 * max(costs))


def hypervolume_trace(
    history: RunHistory, ref: ReferencePoint | None = None
) -> list[tuple[int, float]]:
    """Dominated hypervolume of the first k records, for k from the end of the
    initialization through the full budget. Non-decreasing by construction."""
    if not history.records:
        raise HistoryError("cannot trace an empty history")
    ref = resolve_reference(history, ref)
    n_init = len(history.phase_records(PHASE_INIT))
    start = max(n_init, 1)
    objectives = history.objectives()
    trace = []
    for k in range(start, len(objectives) + 1):
        front = non_dominated_set(objectives[:k])
        trace.append((k, hypervolume_2d(front, ref)))
    return trace


# ---------------------------------------------------------------------------
# Performance tiers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TierReport:
    """Running-minimum cost within one performance bin."""

    label: str
    low: float
    high: float
    first_cost: float
    best_cost: float
    improvement_pct: float
    series: tuple[tuple[int, float], ...]  # (record index, running min cost)


def tier_cost_evolution(
    history: RunHistory, edges=DEFAULT_TIER_EDGES
) -> list[TierReport]:
    """Track the cheapest cost seen per accuracy bin as records accumulate.

    Bins come from consecutive edges, half-open except the last (closed at the
    top edge). Accuracies outside the edge range are not binned; empty bins
    are absent from the report.
    """
    edges = sorted(float(e) for e in edges)
    if len(edges) < 2:
        raise HistoryError("tier edges must define at least one bin")
    bins = list(zip(edges[:-1], edges[1:]))
    state: dict[int, dict] = {}
    for record in history.records:
        acc = record.accuracy
        bin_idx = None
        for i, (low, high) in enumerate(bins):
            if (low <= acc < high) or (i == len(bins) - 1 and acc == high):
                bin_idx = i
                break
        if bin_idx is None:
            continue
        slot = state.setdefault(
            bin_idx, {"first": record.cost_usd, "best": record.cost_usd, "series": []}
        )
        slot["best"] = min(slot["best"], record.cost_usd)
        slot["series"].append((record.index, slot["best"]))
    reports = []
    for i, (low, high) in enumerate(bins):
        if i not in state:
            continue
        slot = state[i]
        improvement = (
            0.0 if slot["first"] == 0.0 else (slot["first"] - slot["best"]) / slot["first"] * 100.0
        )
        reports.append(
            TierReport(
                label=f"{low:g}-{high:g}",
                low=low,
                high=high,
                first_cost=slot["first"],
                best_cost=slot["best"],
                improvement_pct=improvement,
                series=tuple(slot["series"]),
            )
        )
    return reports


# ---------------------------------------------------------------------------
# Assignment frequencies
# ---------------------------------------------------------------------------


def assignment_frequency(
    history: RunHistory, phase: str | None = None
) -> dict[str, dict[str, int]]:
    """Count how often each model was assigned to each role.

    ``phase`` filters to one phase; each role's counts sum to the number of
    selected records.
    """
    records = history.records if phase is None else history.phase_records(phase)
    counts: dict[str, dict[str, int]] = {}
    for record in records:
        for role, model_id in record.team.items():
            role_counts = counts.setdefault(role, {})
            role_counts[model_id] = role_counts.get(model_id, 0) + 1
    return counts


# ---------------------------------------------------------------------------
# Feature importance
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ImportanceReport:
    """Inverse-lengthscale relevance per flattened input dimension.

    ``features`` maps "role::feature" labels to per-objective importances,
    ordered by descending accuracy-objective importance. ``agents`` sums each
    role's feature importances per objective.
    """

    features: tuple[tuple[str, float, float], ...]  # (label, accuracy, neg_cost)
    agents: tuple[tuple[str, float, float], ...]


def importance_report(
    lengthscales_by_objective: dict[str, np.ndarray],
    feature_names,
    roles,
) -> ImportanceReport:
    """Build the relevance report from fitted ARD lengthscales.

    ``lengthscales_by_objective`` needs "accuracy" and "neg_cost" vectors of
    length len(roles) * len(feature_names), laid out role-major like the
    surrogate inputs.
    """
    roles = list(roles)
    feature_names = list(feature_names)
    labels = [f"{role}::{name}" for role in roles for name in feature_names]
    importances = {}
    for objective in ("accuracy", "neg_cost"):
        ls = np.asarray(lengthscales_by_objective[objective], dtype=float)
        if ls.shape != (len(labels),):
            raise HistoryError(
                f"{objective} lengthscales have shape {ls.shape}, expected ({len(labels)},)"
            )
        importances[objective] = 1.0 / ls
    order = np.argsort(-importances["accuracy"])
    features = tuple(
        (labels[i], float(importances["accuracy"][i]), float(importances["neg_cost"][i]))
        for i in order
    )
    d = len(feature_names)
    agents = tuple(
        (
            role,
            float(importances["accuracy"][i * d : (i + 1) * d].sum()),
            float(importances["neg_cost"][i * d : (i + 1) * d].sum()),
        )
        for i, role in enumerate(roles)
    )
    return ImportanceReport(features=features, agents=agents)


def importance_from_history(history: RunHistory) -> ImportanceReport | None:
    """Importance from the last guided record's hyperparameter snapshot, if any."""
    bo = history.phase_records(PHASE_BO)
    if not bo or bo[-1].gp_params is None:
        return None
    snapshot = bo[-1].gp_params
    roles = history.manifest.get("roles") or list(bo[-1].team.keys())
    names = history.manifest.get("feature_names")
    if names is None:
        d = len(snapshot["accuracy"]["lengthscales"]) // max(len(roles), 1)
        names = [f"f{i}" for i in range(d)]
    return importance_report(
        {
            "accuracy": np.asarray(snapshot["accuracy"]["lengthscales"]),
            "neg_cost": np.asarray(snapshot["neg_cost"]["lengthscales"]),
        },
        names,
        roles,
    )


# ---------------------------------------------------------------------------
# Front table and report bundle
# ---------------------------------------------------------------------------


def front_table(history: RunHistory) -> list[dict]:
    """Final non-dominated set with provenance, one row per front point."""
    front: ParetoFront = history.final_front()
    roles = history.manifest.get("roles") or (
        list(history.records[0].team.keys()) if history.records else []
    )
    rows = []
    for point, provenance in zip(front.points, front.provenance):
        record = history.records[provenance[0]]
        row = {
            "accuracy": point.accuracy,
            "cost_usd": -point.neg_cost,
            "evaluation_index": provenance[0],
        }
        for role in roles:
            row[role] = record.team.get(role, "")
        rows.append(row)
    return rows


def _write_csv(path: Path, fieldnames, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def write_reports(
    history: RunHistory,
    out_dir,
    ref: ReferencePoint | None = None,
    tier_edges=DEFAULT_TIER_EDGES,
) -> dict:
    """Emit the full report bundle into ``out_dir`` and return it as a dict."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    reference = resolve_reference(history, ref)
    bundle: dict = {
        "reference_point": {"accuracy": reference.accuracy, "neg_cost": reference.neg_cost}
    }

    roles = history.manifest.get("roles") or (
        list(history.records[0].team.keys()) if history.records else []
    )

    front_rows = front_table(history)
    _write_csv(
        out_dir / "front.csv",
        ["accuracy", "cost_usd", "evaluation_index", *roles],
        front_rows,
    )
    bundle["front"] = front_rows

    trace = hypervolume_trace(history, reference)
    _write_csv(
        out_dir / "hv_trace.csv",
        ["iteration", "series", "value"],
        [{"iteration": k, "series": "hypervolume", "value": v} for k, v in trace],
    )
    bundle["hypervolume_trace"] = [{"iteration": k, "value": v} for k, v in trace]

    try:
        stats = phase_stats(history)
        _write_csv(
            out_dir / "phase_stats.csv",
            [
                "objective",
                "phase",
                "mean",
                "std",
                "min",
                "max",
                "count",
                "t_statistic",
                "df",
                "p_value",
                "cohens_d",
                "percent_change",
            ],
            [
                {
                    "objective": comparison.objective,
                    "phase": phase_name,
                    **summary,
                    "t_statistic": comparison.t_statistic,
                    "df": comparison.df,
                    "p_value": comparison.p_value,
                    "cohens_d": comparison.cohens_d,
                    "percent_change": comparison.percent_change,
                }
                for comparison in stats.values()
                for phase_name, summary in (("init", comparison.init), ("bo", comparison.bo))
            ],
        )
        bundle["phase_stats"] = {k: asdict(v) for k, v in stats.items()}
    except HistoryError:
        bundle["phase_stats"] = None

    tiers = tier_cost_evolution(history, tier_edges)
    _write_csv(
        out_dir / "tier_costs.csv",
        ["iteration", "series", "value"],
        [
            {"iteration": idx, "series": tier.label, "value": cost}
            for tier in tiers
            for idx, cost in tier.series
        ],
    )
    _write_csv(
        out_dir / "tier_summary.csv",
        ["tier", "first_cost", "best_cost", "improvement_pct", "n_records"],
        [
            {
                "tier": tier.label,
                "first_cost": tier.first_cost,
                "best_cost": tier.best_cost,
                "improvement_pct": tier.improvement_pct,
                "n_records": len(tier.series),
            }
            for tier in tiers
        ],
    )
    bundle["tiers"] = [asdict(t) for t in tiers]

    frequency_rows = []
    for phase in (None, PHASE_INIT, PHASE_BO):
        counts = assignment_frequency(history, phase)
        label = phase or "all"
        for role, role_counts in counts.items():
            for model_id, count in sorted(role_counts.items()):
                frequency_rows.append(
                    {"phase": label, "role": role, "model_id": model_id, "count": count}
                )
    _write_csv(
        out_dir / "assignment_frequency.csv",
        ["phase", "role", "model_id", "count"],
        frequency_rows,
    )
    bundle["assignment_frequency"] = frequency_rows

    importance = importance_from_history(history)
    if importance is not None:
        _write_csv(
            out_dir / "importance.csv",
            ["feature", "accuracy_importance", "neg_cost_importance"],
            [
                {"feature": label, "accuracy_importance": a, "neg_cost_importance": c}
                for label, a, c in importance.features
            ],
        )
        _write_csv(
            out_dir / "agent_importance.csv",
            ["role", "accuracy_importance", "neg_cost_importance"],
            [
                {"role": role, "accuracy_importance": a, "neg_cost_importance": c}
                for role, a, c in importance.agents
            ],
        )
        bundle["importance"] = asdict(importance)
    else:
        bundle["importance"] = None

    (out_dir / "analysis.json").write_text(json.dumps(bundle, indent=2, sort_keys=True) + "\n")
    return bundle
