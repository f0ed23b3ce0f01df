from fractions import Fraction

import numpy as np
import pytest

from MainFiles.finite_fields import PrimeField, RationalField
from MainFiles.plane_geometry import (
    CubicWithOrigin,
    PlaneCurve,
    ProjPoint,
    certify_smooth,
    count_points,
    count_points_batch,
    cubic_add,
    cubic_neg,
    cubic_order,
    extension_singular_flags,
    hasse_holds,
    linear_system_scan,
    projective_points,
    rational_points,
    singular_flags_batch,
    singular_points,
    third_intersection,
    weierstrass_curve,
    weierstrass_trace,
)
from MainFiles.workbench_errors import (
    BadReduction,
    DegenerateLine,
    DegeneratePoint,
    NotFound,
    NotOnCurve,
    NotPrime,
    UsageError,
)

NODAL_R = "X^2*Z + Y^2*X + Z^2*Y - 3*X*Y*Z"
FERMAT = "X^3 + Y^3 + Z^3"


def curve(text, p=None):
    field = PrimeField(p) if p is not None else None
    return PlaneCurve.from_polynomial("P2", text, field)


def point(coords, p):
    return ProjPoint(coords, PrimeField(p))


@pytest.fixture
def elliptic_group():
    field = PrimeField(11)
    E = weierstrass_curve(1, 1, field)
    return CubicWithOrigin(E, ProjPoint((0, 1, 0), field))


# ---------- Fields and points ----------

def test_quadratic_character():
    field = PrimeField(7)
    values = [field.chi(x) for x in range(7)]
    assert values == [0, 1, 1, -1, 1, -1, -1]
    assert sum(values) == 0
    for x in range(1, 7):
        for y in range(1, 7):
            assert field.chi(x) * field.chi(y) == field.chi(x * y)


def test_prime_field_rejects_composites():
    with pytest.raises(NotPrime):
        PrimeField(9)


def test_points_are_normalized():
    assert point((2, 4, 6), 7) == point((1, 2, 3), 7)
    assert str(point((0, 3, 6), 7)) == "0:1:2"
    assert ProjPoint.parse("1/2:1:0", RationalField()) == ProjPoint((1, 2, 0), RationalField())
    with pytest.raises(DegeneratePoint):
        point((0, 7, 14), 7)


# ---------- Counting ----------

def test_counts_over_f2():
    assert count_points(curve(FERMAT), 2) == 3
    assert count_points(curve(NODAL_R), 2) == 4
    # (1:1:1) is the only point of P2(F_2) off the coordinate triangle
    assert count_points(curve("X*Y*Z"), 2) == 6


def test_batch_count_matches_single_counts():
    curves = [curve(FERMAT), curve(NODAL_R), curve("X*Y*Z"), weierstrass_curve(1, 1)]
    coeffs = np.stack([c.coefficient_array(13) for c in curves])
    assert count_points_batch("P2", 13, coeffs).tolist() == [count_points(c, 13) for c in curves]


def test_linear_system_scan_matches_direct_enumeration():
    basis = np.stack([curve(text).coefficient_array(7) for text in
                      ("X^2*Y - X*Y*Z", "Y^2*Z - X*Y*Z", "Z^2*X - X*Y*Z", FERMAT)])
    counts, singular = linear_system_scan("P2", 7, basis)
    members = projective_points(4, 7) @ basis % 7
    assert counts.tolist() == count_points_batch("P2", 7, members).tolist()
    assert singular.tolist() == singular_flags_batch("P2", 7, members).tolist()


def test_linear_system_scan_on_the_quadric():
    basis = np.array([[1, 0, 0, 0, 0, 0, 0, 0, 1],
                      [0, 0, 1, 0, 3, 0, 1, 0, 0],
                      [0, 1, 0, 2, 0, 0, 0, 5, 0]], dtype=np.int64)
    counts, singular = linear_system_scan("P1xP1", 7, basis)
    members = projective_points(3, 7) @ basis % 7
    assert counts.tolist() == count_points_batch("P1xP1", 7, members).tolist()
    assert singular.tolist() == singular_flags_batch("P1xP1", 7, members).tolist()


def test_zero_reduction_is_rejected():
    with pytest.raises(BadReduction):
        curve("7*X^3 + 14*Y^2*Z").reduce(7)


def test_weierstrass_traces():
    assert weierstrass_trace(1, 0, 5) == 2
    assert weierstrass_trace(1, 0, 3) == 0
    with pytest.raises(BadReduction):
        weierstrass_trace(0, 0, 5)


def test_weierstrass_trace_matches_projective_count():
    for A, B in ((1, 1), (2, 3), (5, 7)):
        E = weierstrass_curve(A, B)
        assert 13 + 1 - count_points(E, 13) == weierstrass_trace(A, B, 13)


@pytest.mark.parametrize("p", [3, 5, 7, 11, 13, 17, 19, 23, 29, 31])
def test_weierstrass_trace_matches_affine_enumeration(p):
    x, y = np.meshgrid(np.arange(p), np.arange(p), indexing="ij")
    for A in range(p):
        for B in range(p):
            if (4 * A ** 3 + 27 * B ** 2) % p == 0:
                continue
            affine = int(((y * y - x * x * x - A * x - B) % p == 0).sum())
            assert weierstrass_trace(A, B, p) == p + 1 - (affine + 1)


def test_hasse_interval():
    assert hasse_holds(4, 4)
    assert hasse_holds(-5, 7)
    assert not hasse_holds(5, 6)
    for A in range(7):
        for B in range(7):
            if (4 * A ** 3 + 27 * B ** 2) % 7:
                assert hasse_holds(weierstrass_trace(A, B, 7), 7)


def test_evaluation_is_homogeneous():
    R = curve(NODAL_R)
    assert R.evaluate([2, 4, 6]) == 8 * R.evaluate([1, 2, 3])
    assert R.evaluate([Fraction(1, 2), 1, 3]) * 8 == R.evaluate([1, 2, 6])


# ---------- Singular points ----------

def test_nodal_cubic_has_one_node():
    assert singular_points(curve(NODAL_R), 7) == [point((1, 1, 1), 7)]


def test_fermat_cubic_is_smooth():
    assert singular_points(curve(FERMAT), 7) == []
    assert singular_points(curve(FERMAT), 7, degree_bound=2) == []
    assert certify_smooth(curve(FERMAT), 7)


def test_coordinate_triangle_vertices():
    vertices = {point((1, 0, 0), 5), point((0, 1, 0), 5), point((0, 0, 1), 5)}
    assert set(singular_points(curve("X*Y*Z"), 5)) == vertices
    assert not certify_smooth(curve("X*Y*Z"), 5)


def test_conjugate_singular_pair_needs_the_extension():
    # Z = 0 meets X^2 + Y^2 = Z^2 where X^2 = -Y^2, and -1 is a nonresidue mod 7.
    C = curve("Z*(X^2 + Y^2 - Z^2)")
    assert singular_points(C, 7) == []
    extension = singular_points(C, 7, degree_bound=2)
    assert len(extension) == 2
    assert not any(P.is_rational() for P in extension)
    assert count_points(C, 7) == 16
    assert not certify_smooth(C, 7)


def test_extension_flags_find_conjugate_singular_points():
    curves = [curve("Z*(X^2 + Y^2 - Z^2)"), curve(FERMAT), curve("X*Y*Z"), weierstrass_curve(1, 1)]
    coeffs = np.stack([c.coefficient_array(7) for c in curves])
    assert extension_singular_flags("P2", 7, coeffs).tolist() == [True, False, True, False]
    with pytest.raises(UsageError):
        extension_singular_flags("P2", 2, coeffs)


# ---------- Chord and tangent ----------

def test_third_point_on_a_line_section():
    E = weierstrass_curve(1, 0, PrimeField(5))
    R = third_intersection(E, point((0, 0, 1), 5), point((2, 0, 1), 5))
    assert R == point((3, 0, 1), 5)


def test_tangent_at_a_flex_returns_the_flex():
    E = weierstrass_curve(1, 0, PrimeField(5))
    infinity = point((0, 1, 0), 5)
    assert third_intersection(E, infinity, infinity) == infinity


def test_third_intersection_is_an_involution():
    E = weierstrass_curve(1, 1, PrimeField(11))
    points = rational_points(E, 11)
    for P in points[:5]:
        for Q in points[:5]:
            R = third_intersection(E, P, Q)
            assert third_intersection(E, P, R) == Q


def test_degenerate_chords():
    triangle = curve("X*Y*Z", 7)
    with pytest.raises(DegenerateLine):
        third_intersection(triangle, point((1, 0, 0), 7), point((0, 1, 0), 7))
    E = weierstrass_curve(1, 1, PrimeField(11))
    with pytest.raises(NotOnCurve):
        third_intersection(E, point((1, 1, 1), 11), point((0, 1, 0), 11))


def test_group_laws(elliptic_group):
    G = elliptic_group
    points = rational_points(G.curve, 11)
    for P in points:
        assert cubic_add(G, P, G.origin) == P
        assert cubic_neg(G, cubic_neg(G, P)) == P
        assert cubic_add(G, P, cubic_neg(G, P)) == G.origin
    sample = points[:6]
    for P in sample:
        for Q in sample:
            assert G.add(P, Q) == G.add(Q, P)
            for S in sample[:3]:
                assert G.add(G.add(P, Q), S) == G.add(P, G.add(Q, S))


def test_orders_divide_the_group_order(elliptic_group):
    G = elliptic_group
    points = rational_points(G.curve, 11)
    n = len(points)
    assert n == count_points(G.curve, 11)
    for P in points:
        assert G.multiple(n, P) == G.origin
        assert n % cubic_order(G, P, n) == 0
    assert cubic_order(G, G.origin, 1) == 1


def test_order_beyond_the_bound(elliptic_group):
    G = elliptic_group
    P = next(P for P in rational_points(G.curve, 11) if P != G.origin)
    with pytest.raises(NotFound):
        G.order(P, 1)


def test_singular_origin_is_rejected():
    R = curve(NODAL_R, 7)
    with pytest.raises(DegeneratePoint):
        CubicWithOrigin(R, point((1, 1, 1), 7))
