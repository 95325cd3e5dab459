import numpy as np
import pytest

from moboa.errors import DomainError
from moboa.pareto import (
    ObjectiveVector,
    ParetoFront,
    ReferencePoint,
    dominates,
    hypervolume_2d,
    hypervolume_bruteforce,
    hypervolume_improvement,
    non_dominated_set,
)

ARCHETYPES = [
    ObjectiveVector(0.5, -0.445803),
    ObjectiveVector(0.4, -0.144317),
    ObjectiveVector(0.0, -0.030155),
]
DOMINATED = [
    ObjectiveVector(0.5, -0.737),
    ObjectiveVector(0.3, -0.351),
]
REF = ReferencePoint(accuracy=0.0, neg_cost=-2.0)


def random_points(rng, n):
    return [
        ObjectiveVector(float(a), float(c))
        for a, c in zip(rng.uniform(0, 1, n), rng.uniform(-2, 0, n))
    ]


def test_dominates_equal_accuracy_cheaper_wins():
    assert dominates(ObjectiveVector(0.5, -0.445803), ObjectiveVector(0.5, -0.737))


def test_dominates_irreflexive():
    point = ObjectiveVector(0.5, -0.445803)
    assert not dominates(point, point)


def test_dominates_balanced_archetype_beats_homogeneous_baseline():
    assert dominates(ObjectiveVector(0.4, -0.144), ObjectiveVector(0.3, -0.351))


def test_dominates_is_strict_partial_order(rng):
    points = random_points(rng, 40)
    points += points[:5]  # force duplicates and ties
    for a in points:
        assert not dominates(a, a)
        for b in points:
            if dominates(a, b):
                assert not dominates(b, a)
            for c in points:
                if dominates(a, b) and dominates(b, c):
                    assert dominates(a, c)


def test_non_dominated_set_recovers_archetypes():
    front = non_dominated_set(ARCHETYPES + DOMINATED)
    assert [p.as_tuple() for p in front.points] == sorted(
        p.as_tuple() for p in ARCHETYPES
    )


def test_non_dominated_set_single_point():
    front = non_dominated_set([ObjectiveVector(0.3, -0.1)])
    assert len(front) == 1


def test_non_dominated_set_collapses_duplicates():
    point = ObjectiveVector(0.3, -0.1)
    front = non_dominated_set([point, point, point])
    assert len(front) == 1
    assert front.provenance == ((0, 1, 2),)


def test_front_sorted_ascending_accuracy(rng):
    for _ in range(50):
        front = non_dominated_set(random_points(rng, 12))
        acc = [p.accuracy for p in front.points]
        assert acc == sorted(acc)
        for i, a in enumerate(front.points):
            for b in front.points[i + 1 :]:
                assert not dominates(a, b) and not dominates(b, a)


def test_hypervolume_single_point_rectangle():
    front = non_dominated_set([ObjectiveVector(0.5, -0.445803)])
    assert hypervolume_2d(front, REF) == pytest.approx(0.5 * (2.0 - 0.445803), abs=1e-12)


def test_hypervolume_empty_front():
    assert hypervolume_2d(ParetoFront(points=(), provenance=()), REF) == 0.0


def test_hypervolume_archetype_front_matches_bruteforce():
    front = non_dominated_set(ARCHETYPES)
    assert hypervolume_2d(front, REF) == pytest.approx(
        hypervolume_bruteforce(ARCHETYPES, REF), abs=1e-12
    )


def test_hypervolume_two_point_hand_case():
    # rectangles 0.4x1.0 and 0.8x0.4 overlapping in 0.4x0.4
    points = [ObjectiveVector(0.4, -1.0), ObjectiveVector(0.8, -1.6)]
    ref = ReferencePoint(0.0, -2.0)
    expect = 0.4 * 1.0 + 0.8 * 0.4 - 0.4 * 0.4
    assert hypervolume_bruteforce(points, ref) == pytest.approx(expect, abs=1e-12)
    assert hypervolume_2d(non_dominated_set(points), ref) == pytest.approx(expect, abs=1e-12)


def test_dominated_point_adds_zero_to_bruteforce():
    base = [ObjectiveVector(0.5, -0.4)]
    extra = base + [ObjectiveVector(0.3, -0.8)]
    assert hypervolume_bruteforce(extra, REF) == pytest.approx(
        hypervolume_bruteforce(base, REF), abs=1e-12
    )


def test_sweep_matches_bruteforce_on_random_fronts(rng):
    for _ in range(300):
        points = random_points(rng, int(rng.integers(1, 9)))
        hv = hypervolume_2d(non_dominated_set(points), REF)
        assert hv == pytest.approx(hypervolume_bruteforce(points, REF), abs=1e-10)


def test_hv_monotone_under_added_points(rng):
    for _ in range(100):
        points = random_points(rng, 6)
        extra = random_points(rng, 1)
        hv = hypervolume_2d(non_dominated_set(points), REF)
        hv_plus = hypervolume_2d(non_dominated_set(points + extra), REF)
        assert hv_plus >= hv - 1e-12


def test_hv_of_front_equals_hv_of_full_set(rng):
    for _ in range(100):
        points = random_points(rng, 10)
        assert hypervolume_2d(non_dominated_set(points), REF) == pytest.approx(
            hypervolume_bruteforce(points, REF), abs=1e-10
        )


def test_points_not_dominating_reference_are_clipped():
    outlier = ObjectiveVector(0.5, -3.0)  # costs more than the reference allows
    front = non_dominated_set([outlier])
    assert hypervolume_2d(front, REF) == 0.0
    mixed = non_dominated_set([outlier, ObjectiveVector(0.2, -0.5)])
    assert hypervolume_2d(mixed, REF) == pytest.approx(0.2 * 1.5, abs=1e-12)


def test_improvement_matches_sweep_difference(rng):
    for _ in range(50):
        front = non_dominated_set(random_points(rng, 6))
        base = hypervolume_2d(front, REF)
        candidates = np.column_stack(
            (rng.uniform(-0.2, 1.2, 40), rng.uniform(-2.5, 0.2, 40))
        )
        gains = hypervolume_improvement(front, REF, candidates)
        assert np.all(gains >= 0.0)
        for candidate, gain in zip(candidates, gains):
            merged = list(front.points)
            if np.isfinite(candidate).all():
                try:
                    merged = merged + [ObjectiveVector(*candidate)]
                except DomainError:
                    pass
            expect = hypervolume_2d(non_dominated_set(merged), REF) - base
            assert gain == pytest.approx(expect, abs=1e-10)


def test_bruteforce_size_limit():
    with pytest.raises(DomainError):
        hypervolume_bruteforce([ObjectiveVector(0.1, -0.1)] * 13, REF)
