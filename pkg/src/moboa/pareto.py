"""Pareto dominance, non-dominated filtering, and exact 2-objective hypervolume.

Both objectives are maximized: accuracy in its natural direction, cost as its
negation. The hypervolume of a front is the area weakly dominated by the front
and bounded below by a reference point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, DomainError

BRUTEFORCE_LIMIT = 12


@dataclass(frozen=True)
class ObjectiveVector:
    """One evaluation outcome: accuracy (higher better) and negated cost in USD."""

    accuracy: float
    neg_cost: float

    def __post_init__(self):
        if not (math.isfinite(self.accuracy) and math.isfinite(self.neg_cost)):
            raise DomainError("objective components must be finite")

    def as_tuple(self) -> tuple[float, float]:
        return (self.accuracy, self.neg_cost)


@dataclass(frozen=True)
class ReferencePoint:
    """Anchor for hypervolume; intended to be dominated by every counted point."""

    accuracy: float
    neg_cost: float


@dataclass(frozen=True)
class ParetoFront:
    """Mutually non-dominated points sorted ascending by accuracy.

    ``provenance`` parallels ``points``; each entry is the tuple of evaluation
    indices that produced the point (duplicates collapse and merge indices).
    """

    points: tuple[ObjectiveVector, ...]
    provenance: tuple[tuple[int, ...], ...]

    def __len__(self) -> int:
        return len(self.points)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        acc = np.array([p.accuracy for p in self.points], dtype=float)
        neg = np.array([p.neg_cost for p in self.points], dtype=float)
        return acc, neg


def dominates(a: ObjectiveVector, b: ObjectiveVector) -> bool:
    """True iff ``a`` is at least as good on both objectives and strictly better on one."""
    if a.accuracy < b.accuracy or a.neg_cost < b.neg_cost:
        return False
    return a.accuracy > b.accuracy or a.neg_cost > b.neg_cost


def non_dominated_set(
    points: Sequence[ObjectiveVector],
    provenance: Sequence[int] | None = None,
) -> ParetoFront:
    """Filter to the maximal points; exact duplicates collapse, merging provenance."""
    if provenance is None:
        provenance = range(len(points))
    merged: dict[tuple[float, float], list[int]] = {}
    for point, idx in zip(points, provenance):
        merged.setdefault(point.as_tuple(), []).append(int(idx))

    # Scan by descending accuracy; a point survives iff its neg_cost strictly
    # exceeds the best neg_cost seen so far.
    ordered = sorted(merged.items(), key=lambda kv: (-kv[0][0], -kv[0][1]))
    kept: list[tuple[tuple[float, float], tuple[int, ...]]] = []
    best_neg = -math.inf
    for key, indices in ordered:
        if key[1] > best_neg:
            kept.append((key, tuple(sorted(indices))))
            best_neg = key[1]
    kept.sort(key=lambda kv: kv[0][0])
    return ParetoFront(
        points=tuple(ObjectiveVector(*key) for key, _ in kept),
        provenance=tuple(prov for _, prov in kept),
    )


def _staircase(front_acc, front_neg, ref: ReferencePoint):
    """Strip boundaries and heights of the region dominated by the front.

    Returns (s, h): s has length k+2 with s[0]=ref accuracy and s[-1]=inf; strip
    j spans (s[j], s[j+1]) and the front covers it up to height h[j] (length
    k+1, h[-1]=ref neg_cost). Points that do not dominate the reference are
    dropped, which clips their contribution to zero.
    """
    keep = (front_acc > ref.accuracy) & (front_neg > ref.neg_cost)
    acc = front_acc[keep]
    neg = front_neg[keep]
    order = np.argsort(acc)
    acc = acc[order]
    neg = neg[order]
    s = np.concatenate(([ref.accuracy], acc, [np.inf]))
    h = np.concatenate((neg, [ref.neg_cost]))
    return s, h


def hypervolume_2d(front: ParetoFront, ref: ReferencePoint) -> float:
    """Exact sweep hypervolume of a non-dominated maximization front.

    Walking the front by ascending accuracy, each point owns the vertical
    strip from its predecessor's accuracy to its own, up from the reference
    cost level to its own cost level. Points that fail to dominate the
    reference contribute zero.
    """
    if len(front) == 0:
        return 0.0
    acc, neg = front.arrays()
    x = np.maximum(acc, ref.accuracy)
    heights = np.maximum(neg - ref.neg_cost, 0.0)
    prev = np.concatenate(([ref.accuracy], x[:-1]))
    return float(np.sum((x - prev) * heights))


def hypervolume_improvement(
    front: ParetoFront, ref: ReferencePoint, candidates: np.ndarray
) -> np.ndarray:
    """Realized hypervolume gain of each candidate point against a fixed front.

    ``candidates`` is an (n, 2) array of (accuracy, neg_cost) rows; the result
    is the n-vector of HV(front + candidate) - HV(front) values. Vectorized so
    Monte Carlo estimators can push large sample batches through it.
    """
    candidates = np.asarray(candidates, dtype=float)
    if candidates.ndim != 2 or candidates.shape[1] != 2:
        raise DimensionError("candidates must be an (n, 2) array")
    acc, neg = front.arrays()
    s, h = _staircase(acc, neg, ref)
    y1 = candidates[:, 0:1]
    y2 = candidates[:, 1:2]
    widths = np.clip(np.minimum(y1, s[None, 1:]) - s[None, :-1], 0.0, None)
    heights = np.clip(y2 - h[None, :], 0.0, None)
    return (widths * heights).sum(axis=1)


def hypervolume_bruteforce(
    points: Iterable[ObjectiveVector] | np.ndarray, ref: ReferencePoint
) -> float:
    """Inclusion-exclusion over all 2^n subsets of rectangle intersections.

    Independent oracle for the sweep; enforces n <= 12. Accepts raw point sets
    (domination filtering is unnecessary: dominated rectangles cancel out).
    """
    pts = np.array(
        [p.as_tuple() if isinstance(p, ObjectiveVector) else p for p in points], dtype=float
    )
    n = len(pts)
    if n == 0:
        return 0.0
    if n > BRUTEFORCE_LIMIT:
        raise DomainError(f"brute-force hypervolume limited to n <= {BRUTEFORCE_LIMIT}")
    subsets = np.arange(1, 2**n)
    masks = (subsets[:, None] >> np.arange(n)[None, :]) & 1  # (2^n-1, n)
    chosen = np.where(masks[:, :, None] == 1, pts[None, :, :], np.inf)
    corners = chosen.min(axis=1)  # componentwise min over each subset
    widths = np.maximum(corners[:, 0] - ref.accuracy, 0.0)
    heights = np.maximum(corners[:, 1] - ref.neg_cost, 0.0)
    signs = np.where(masks.sum(axis=1) % 2 == 1, 1.0, -1.0)
    return float(np.sum(signs * widths * heights))
