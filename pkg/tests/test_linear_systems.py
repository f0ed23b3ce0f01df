from fractions import Fraction

import pytest
import sympy

from MainFiles.finite_fields import PrimeField
from MainFiles.linear_systems import (
    QQ_FIELD,
    Line,
    PassThrough,
    TangentAt,
    matrix_rank,
    named_system,
    pair_point,
    parse_conditions,
    plane_point,
    reduce_mod_p,
    same_subspace,
    slice_system,
    solve_conditions,
)
from MainFiles.plane_geometry import PlaneCurve
from MainFiles.workbench_errors import BadPrime, InconsistentConditions, InvalidCondition, UsageError


def vectors(*texts, ambient="P2"):
    return [PlaneCurve.from_polynomial(ambient, text).coeffs for text in texts]


def test_net_with_three_tangencies():
    system = named_system("level3_cubic")
    assert system.dimension == 3
    assert same_subspace(system, vectors("X^2*Y - X*Y*Z", "Y^2*Z - X*Y*Z", "Z^2*X - X*Y*Z"))
    assert not same_subspace(system, vectors("X^3", "Y^3", "Z^3"))


def test_pencil_with_a_flex():
    system = named_system("level4_cubic")
    assert system.dimension == 2
    assert same_subspace(system, vectors("Y*Z*(X - Y)", "X*(X - Z)^2"))
    assert not same_subspace(system, vectors("Y*Z*(Y - Z)", "X*(X - Z)^2"))


def test_pencil_with_a_five_torsion_point():
    system = named_system("level5_cubic")
    assert system.dimension == 2
    assert same_subspace(system, vectors("Y*Z*(X + Y + Z)", "Y*Z*(Y + Z) - X*(X + Z)^2"))


def test_web_through_the_frame():
    system = named_system("level2_cubic")
    assert system.dimension == 4
    assert same_subspace(
        system, vectors("X^2*Y - X*Y*Z", "X^2*Z - X*Y*Z", "Y^2*Z - X*Y*Z", "Y*Z^2 - X*Y*Z")
    )


@pytest.mark.parametrize("name", ["level2_cubic", "level3_cubic", "level4_cubic", "level5_cubic",
                                  "level2_22", "level3_22", "level4_22", "level5_22", "anticanonical"])
def test_basis_satisfies_every_condition(name):
    system = named_system(name)
    rows = system.condition_matrix()
    for vector in system.basis:
        for row in rows:
            assert sum(a * b for a, b in zip(row, vector)) == 0
    rank = matrix_rank(rows, system.coefficient_dimension, QQ_FIELD)
    assert system.dimension + rank == system.coefficient_dimension


def test_same_subspace_is_reflexive():
    system = named_system("level2_cubic")
    assert same_subspace(system, system.basis)


def test_slices():
    web = named_system("level2_cubic")
    assert slice_system(web, [PassThrough(plane_point(1, 2, 1))]).dimension == 3
    assert slice_system(web, [PassThrough(plane_point(1, 1, 1))]).dimension == 4
    net = named_system("level3_cubic")
    assert slice_system(net, [PassThrough(plane_point(1, 2, 3))]).dimension == 2


def test_ten_lattice_points_admit_no_cubic():
    points = [plane_point(i, j, 1) for i in range(4) for j in range(4 - i)]
    with pytest.raises(InconsistentConditions):
        solve_conditions("P2", [PassThrough(P) for P in points])


def test_reduction_mod_p():
    pencil = named_system("level5_cubic")
    reduced = reduce_mod_p(pencil, 7)
    assert len(reduced) == 2
    assert matrix_rank([c.coeffs for c in reduced], 10, PrimeField(7)) == 2
    with pytest.raises(BadPrime):
        reduce_mod_p(pencil, 2)
    assert len(reduce_mod_p(named_system("level3_cubic"), 101)) == 3


@pytest.mark.parametrize("name", ["level2_cubic", "level3_cubic", "level4_cubic", "level5_cubic"])
def test_reduction_keeps_the_dimension_below_a_thousand(name):
    system = named_system(name)
    for p in sympy.primerange(2, 1000):
        if p not in system.bad_primes:
            assert len(reduce_mod_p(system, p)) == system.dimension


def test_condition_point_must_lie_on_its_line():
    with pytest.raises(InvalidCondition):
        TangentAt(Line(1, 0, 0), plane_point(1, 0, 0))


def test_parse_conditions_matches_built_in_net():
    text = "tangent 0:0:1 @ 0:1:0; tangent 1:0:0 @ 0:0:1; tangent 0:1:0 @ 1:0:0; pass 1:1:1"
    system = solve_conditions("P2", parse_conditions(text, "P2"))
    assert same_subspace(system, named_system("level3_cubic").basis)


def test_parse_conditions_on_the_quadric():
    conditions = parse_conditions("tangent u=0:1 @ 0:1|0:1; pass 1:0|1:0; pass 1/2:1|3:1", "P1xP1")
    assert conditions[1] == PassThrough(pair_point("inf", "inf"))
    assert conditions[2] == PassThrough(pair_point(Fraction(1, 2), 3))
    assert solve_conditions("P1xP1", conditions).dimension == 5


def test_parse_conditions_rejects_garbage():
    with pytest.raises(UsageError):
        parse_conditions("touch 1:0:0", "P2")
    with pytest.raises(UsageError):
        parse_conditions("tangent 0:0:1 0:1:0", "P2")
    with pytest.raises(UsageError):
        parse_conditions("pass a:b:c", "P2")
