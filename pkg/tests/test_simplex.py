import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import points
from volterra.simplex import (
    EmptySupport,
    InvalidPoint,
    SimplexPoint,
    ZeroMass,
    l1_distance,
    max_support,
    min_support,
    parse_point,
    renormalize,
    rho_distance,
    support,
)

e = SimplexPoint.vertex


def test_l1_examples():
    assert l1_distance(e(1), e(1)) == 0
    assert l1_distance(e(1), e(2)) == 2
    assert l1_distance(SimplexPoint.from_dense([0.5, 0.5]), SimplexPoint.from_dense([0.25, 0.75])) == 0.5


def test_rho_examples():
    z = SimplexPoint.zero()
    assert rho_distance(e(1), z) == 0.25
    assert rho_distance(e(2), z) == 0.125
    x = SimplexPoint.from_dense([0.2, 0.3, 0.5])
    assert rho_distance(x, x) == 0


def test_rho_matches_direct_sum():
    a = SimplexPoint.from_sparse({1: 0.5, 4: 0.5})
    b = SimplexPoint.from_sparse({2: 0.25, 4: 0.75})
    d = {1: 0.5, 2: 0.25, 4: 0.25}
    expected = sum(2.0**-k * v / (1 + v) for k, v in d.items())
    assert rho_distance(a, b) == pytest.approx(expected, rel=1e-15)


def test_support_examples():
    assert support(e(5)) == (5,)
    assert (min_support(e(5)), max_support(e(5))) == (5, 5)
    x = SimplexPoint.from_dense([0, 1 / 3, 0, 2 / 3])
    assert support(x) == (2, 4)
    with pytest.raises(EmptySupport):
        min_support(SimplexPoint.zero())
    with pytest.raises(EmptySupport):
        max_support(SimplexPoint.zero())


def test_renormalize_examples():
    assert renormalize(SimplexPoint.from_dense([0.5, 0.5])) == SimplexPoint.from_dense([0.5, 0.5])
    k = np.arange(1, 9)
    raw = SimplexPoint(k, 2.0**-k)
    out = renormalize(raw, 1.0)
    assert np.array_equal(out.values, 2.0**-k / (1 - 2.0**-8))
    assert out.on_sphere()
    with pytest.raises(ZeroMass):
        renormalize(SimplexPoint.zero())


def test_renormalize_above_unit_mass_input():
    # (1, 1) has mass 2, so it is built from the sparse map without the mass check.
    raw = SimplexPoint._trusted(np.array([1, 2]), np.array([1.0, 1.0]))
    assert renormalize(raw) == SimplexPoint([1, 2], [0.5, 0.5])


def test_canonical_form():
    x = SimplexPoint.from_sparse({3: 0.5, 1: 0.0, 2: 0.5})
    assert support(x) == (2, 3)
    with pytest.raises(InvalidPoint):
        SimplexPoint([2, 1], [0.5, 0.5])
    with pytest.raises(InvalidPoint):
        SimplexPoint([1], [0.0])
    with pytest.raises(InvalidPoint):
        SimplexPoint.from_sparse({1: -0.1, 2: 1.1})
    with pytest.raises(InvalidPoint):
        SimplexPoint([1, 2], [0.7, 0.7])


def test_mass_tolerance():
    SimplexPoint([1, 2], [0.5, 0.5 + 5e-13])
    with pytest.raises(InvalidPoint):
        SimplexPoint([1, 2], [0.5, 0.5 + 1e-11])


def test_parse_point_formats():
    dense = parse_point([0.25, 0, 0.75])
    sparse = parse_point({"1": 0.25, "3": 0.75})
    assert dense == sparse == parse_point('{"3": 0.75, "1": 0.25}') == parse_point("[0.25, 0, 0.75]")
    with pytest.raises(InvalidPoint):
        parse_point(3.0)


def test_restrict_shift_interior():
    x = SimplexPoint.uniform(1, 4)
    assert support(x.restrict(2, 3)) == (2, 3)
    assert support(x.restrict(3).shift(-2)) == (1, 2)
    assert x.is_interior(4) and not x.is_interior(5)
    assert not SimplexPoint.from_sparse({1: 0.5, 3: 0.5}).is_interior(3)
    with pytest.raises(InvalidPoint):
        x.shift(-1)


@given(points())
def test_literal_round_trip(x):
    lit = json.loads(json.dumps(x.to_literal()))
    y = parse_point(lit)
    assert y == x
    assert np.array_equal(y.values, x.values)


@given(points(), points(), points())
def test_metric_axioms(a, b, c):
    for d in (l1_distance, rho_distance):
        assert d(a, b) >= 0
        assert d(a, b) == d(b, a)
        assert d(a, a) == 0
        assert d(a, c) <= d(a, b) + d(b, c) + 1e-12
    assert rho_distance(a, b) < 1
    if a != b:
        assert l1_distance(a, b) > 0 and rho_distance(a, b) > 0


@given(points(unit=False), points(unit=False))
def test_rho_bounded_by_l1(a, b):
    assert rho_distance(a, b) <= l1_distance(a, b) + 1e-15


@pytest.mark.parametrize("m", [1, 3, 10])
def test_rho_and_l1_vanish_together_on_sphere(m):
    # x_t = (1 - t) e_m + t e_{m+5} lies on S and tends to e_m.
    for t in (1e-2, 1e-5, 1e-9):
        x = SimplexPoint.from_sparse({m: 1 - t, m + 5: t})
        l1, rho = l1_distance(x, e(m)), rho_distance(x, e(m))
        assert l1 == pytest.approx(2 * t, rel=1e-6)
        # rho is squeezed between constant multiples of l1 on this family
        assert 2.0 ** -(m + 6) * l1 <= rho <= l1


def test_rho_without_l1_off_the_sphere():
    # mass escaping to infinity: rho -> 0 while l1 stays 1 (limit leaves the sphere)
    for n in (10, 30, 60):
        assert rho_distance(e(n), SimplexPoint.zero()) == math.ldexp(0.5, -n)
        assert l1_distance(e(n), SimplexPoint.zero()) == 1


@given(points())
def test_geometric_and_uniform_on_sphere(x):
    for n in (1, 5, 64):
        assert SimplexPoint.geometric(n).on_sphere()
        assert SimplexPoint.uniform(3, 3 + n).on_sphere()
    assert renormalize(x, 0.5).on_sphere(0.5)
