import random

import numpy as np
import pytest

from MainFiles.curve_families import (
    FAMILY_REGISTRY,
    cubic_families,
    level2_22_predicate,
    level4_22_predicate,
    select_family,
)
from MainFiles.plane_geometry import (
    CubicWithOrigin,
    certify_smooth,
    count_points_batch,
    cubic_order,
    rational_points,
    singular_flags_batch,
    third_intersection,
)
from MainFiles.workbench_errors import BadPrime, NotPrime, UsageError


def test_registry_lookup():
    assert select_family("level5_cubic").newform_label == "5.4"
    assert "level5_cubic" in str(select_family("level5_cubic"))
    with pytest.raises(UsageError):
        select_family("level7_cubic")


def test_moment_exponents_follow_the_weight():
    assert select_family("level5_cubic").exponent == 2
    assert select_family("level4_cubic").exponent == 4
    assert select_family("level2_cubic").exponent == 6
    assert select_family("level1_weierstrass").exponent == 10
    assert select_family("level1_weierstrass").is_weierstrass


def test_cubic_families_carry_torsion():
    orders = sorted(family.torsion for family in cubic_families())
    assert orders == [2, 3, 4, 5]


def test_prime_policy():
    family = select_family("level5_cubic")
    with pytest.raises(BadPrime):
        family.fibre_set(5)
    with pytest.raises(BadPrime):
        family.fibre_set(3)
    with pytest.raises(NotPrime):
        family.fibre_set(9)
    assert 7 in family.good_primes(20)
    assert all(p > 5 for p in select_family("level3_22").good_primes(40))


def test_parameter_spaces():
    assert len(select_family("level5_cubic").fibre_set(7).params) == 8
    net = select_family("level3_cubic")
    p = net.good_primes(40)[0]
    assert len(net.fibre_set(p).params) == p * p + p + 1
    assert len(select_family("level1_weierstrass").fibre_set(7).params) == 42


def test_marked_points_lie_on_every_fibre():
    for family in cubic_families():
        p = family.good_primes(40)[0]
        fibres = family.fibre_set(p)
        origin, marked = family.origin_point(p), family.marked_point(p)
        for index in range(len(fibres.params)):
            curve = family.fibre_curve(fibres, index, p)
            assert curve.contains(origin)
            assert curve.contains(marked)


@pytest.mark.parametrize("family_id", ["level2_cubic", "level3_cubic", "level4_cubic", "level5_cubic"])
def test_marked_point_has_the_expected_order(family_id):
    family = select_family(family_id)
    p = family.good_primes(40)[0]
    fibres = family.fibre_set(p)
    origin, marked = family.origin_point(p), family.marked_point(p)
    smooth = 0
    for index in range(len(fibres.params)):
        curve = family.fibre_curve(fibres, index, p)
        if not certify_smooth(curve, p):
            continue
        smooth += 1
        assert CubicWithOrigin(curve, origin).order(marked, 10) == family.torsion
    assert smooth > 0


def test_level_five_fibre_at_one_one():
    family = select_family("level5_cubic")
    fibres = family.fibre_set(7)
    index = fibres.params.index("1:1")
    curve = family.fibre_curve(fibres, index, 7)
    G = CubicWithOrigin(curve, family.origin_point(7))
    assert cubic_order(G, family.marked_point(7), 10) == 5


@pytest.mark.parametrize("family_id, p", [("level5_cubic", 11), ("level3_cubic", 13)])
def test_group_law_is_associative_away_from_a_flex(family_id, p):
    family = select_family(family_id)
    fibres = family.fibre_set(p)
    checked = 0
    for index in range(len(fibres.params)):
        curve = family.fibre_curve(fibres, index, p)
        if not certify_smooth(curve, p):
            continue
        points = rational_points(curve, p)
        origin = next((P for P in points if third_intersection(curve, P, P) != P), None)
        if origin is None:
            continue
        G = CubicWithOrigin(curve, origin)
        rng = random.Random(index)
        for _ in range(100):
            P, Q, S = (rng.choice(points) for _ in range(3))
            assert G.add(G.add(P, Q), S) == G.add(P, G.add(Q, S))
        checked += 1
        if checked == 3:
            break
    assert checked > 0


@pytest.mark.parametrize("family_id", ["level2_cubic", "level3_cubic", "level4_22", "level5_22"])
def test_family_scans_match_direct_counting(family_id):
    family = select_family(family_id)
    p = family.good_primes(40)[1]
    fibres = family.fibre_set(p)
    everything = list(range(len(fibres.params)))
    assert family.count(fibres, everything, p).tolist() == \
        count_points_batch(family.ambient, p, fibres.coeffs).tolist()
    assert family.singular_flags(fibres, p).tolist() == \
        singular_flags_batch(family.ambient, p, fibres.coeffs).tolist()


def test_matching_residual_points_predicate():
    # residual point on v = 0 is u = 2; on v = 1 it is (C:A)
    matching = [0, 0, 1, 0, 0, 5, 2, 0, 0]
    other = [0, 0, 1, 0, 0, 5, 3, 0, 0]
    flags = level4_22_predicate(np.array([matching, other], dtype=np.int64), 7)
    assert flags.tolist() == [True, False]


def test_tangent_ruling_predicate():
    tangent = [0, 1, 1, 0, 5, 5, 0, 0, 0]
    transverse = [0, 1, 1, 0, 0, 5, 0, 0, 0]
    flags = level2_22_predicate(np.array([tangent, transverse], dtype=np.int64), 7)
    assert flags.tolist() == [True, False]


def test_predicates_filter_the_parameter_space():
    for family_id in ("level4_22", "level2_22"):
        family = FAMILY_REGISTRY[family_id]
        p = family.good_primes(40)[0]
        fibres = family.fibre_set(p)
        assert 0 < len(fibres.params)
        assert family.predicate(fibres.coeffs, p).all()
