import random

import pytest

from MainFiles.determinantal_cy import (
    SECTIONS,
    anticanonical_basis,
    det6,
    fibre_cubic,
    fibre_group,
    rank_profile,
    sample_general_points,
    sample_smooth_fibre,
    tau_fibre,
    tau_fixed_points,
    v6_member,
)
from MainFiles.finite_fields import PrimeField
from MainFiles.linear_systems import same_subspace
from MainFiles.plane_geometry import PlaneCurve, ProjPoint, rational_points
from MainFiles.workbench_errors import DegeneratePoint, NotGeneral

P = 101


@pytest.fixture
def rng():
    return random.Random(2024)


def fibre_points(curve, fixed):
    basis = anticanonical_basis()
    return [Q for Q in rational_points(curve, curve.field.p)
            if not basis.is_base_point(Q) and Q not in fixed]


def test_six_sections_through_the_frame():
    basis = anticanonical_basis()
    assert len(basis) == SECTIONS
    for curve in basis.basis:
        assert curve.evaluate([1, 1, 1]) == 0
    extra = PlaneCurve.from_polynomial("P2", "X^2*Y - X*Y^2").coeffs
    assert same_subspace(basis.system, list(basis.system.basis) + [extra])


def test_rank_profiles(rng):
    assert rank_profile(["1:2:3"] * 3, P) == 1
    for n in range(1, SECTIONS + 1):
        assert rank_profile(sample_general_points(n, P, rng), P) == n
    assert rank_profile(["1:2:3", "2:-1:5", "3:1:7"]) == 3


def test_base_points_are_rejected():
    with pytest.raises(DegeneratePoint):
        rank_profile(["1:2:3", "1:1:1"], P)
    with pytest.raises(DegeneratePoint):
        det6(["0:0:1", "1:2:3", "1:5:2", "2:1:3", "3:7:1", "4:4:9"], P)


def test_points_on_a_common_member(rng):
    fixed5 = sample_general_points(5, P, rng)
    curve = fibre_cubic(fixed5, P)
    Q = fibre_points(curve, fixed5)[0]
    six = list(fixed5) + [Q]
    assert rank_profile(six, P) == 5
    assert det6(six, P) == 0
    assert v6_member(six, P)


def test_generic_six_tuple_and_alternation(rng):
    six = sample_general_points(6, P, rng)
    value = det6(six, P)
    assert value != 0
    assert not v6_member(six, P)
    swapped = [six[1], six[0]] + six[2:]
    assert (det6(swapped, P) + value) % P == 0
    assert not v6_member(list(reversed(six)), P)


def test_membership_ignores_rescaling(rng):
    fixed5 = sample_general_points(5, P, rng)
    curve = fibre_cubic(fixed5, P)
    Q = fibre_points(curve, fixed5)[0]
    scaled = [tuple(3 * c for c in point.coords) for point in fixed5] + [tuple(7 * c for c in Q.coords)]
    assert v6_member(scaled, P)


def test_fibre_cubic_is_the_membership_locus(rng):
    fixed5 = sample_general_points(5, 13, rng)
    curve = fibre_cubic(fixed5, 13)
    for base in anticanonical_basis().base_points:
        assert curve.contains(base.over(PrimeField(13)))
    basis = anticanonical_basis()
    for coords in [(x, y, 1) for x in range(13) for y in range(13)]:
        Q = ProjPoint(coords, PrimeField(13))
        if basis.is_base_point(Q) or Q in fixed5:
            continue
        assert v6_member(list(fixed5) + [Q], 13) == curve.contains(Q)


def test_repeated_points_are_not_general():
    with pytest.raises(NotGeneral):
        fibre_cubic(["1:2:3", "1:2:3", "2:1:5", "3:4:1", "5:1:2"], P)


def test_fibre_involution(rng):
    fixed5 = sample_smooth_fibre(11, rng)
    origin = ProjPoint(fixed5[4].coords, PrimeField(11))
    assert tau_fibre(fixed5, origin, 11) == origin
    group = fibre_group(fixed5, 11)
    points = rational_points(group.curve, 11)
    for Q in points:
        assert tau_fibre(fixed5, tau_fibre(fixed5, Q, 11), 11) == Q
    for A in points[:4]:
        for B in points[:4]:
            assert group.neg(group.add(A, B)) == group.add(group.neg(A), group.neg(B))
    fixed = tau_fixed_points(fixed5, 11)
    assert origin in fixed
    assert len(fixed) in (1, 2, 4)
