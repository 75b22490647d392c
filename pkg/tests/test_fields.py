import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pnormcl.errors import InvalidScenarioError
from pnormcl.fields import (Datum, Field, Grid, VelocityModel, constant, field_from_datum,
                            l1_distance, riemann, total_variation)


def test_grid_geometry():
    g = Grid(-4, 4, 8)
    assert g.dx == 1.0
    np.testing.assert_allclose(g.edges, np.arange(-4, 5))
    np.testing.assert_allclose(g.centers, np.arange(-3.5, 4))
    assert g.padded(2).n_cells == 12 and g.padded(2).x_min == -6


@pytest.mark.parametrize("args", [(0, 0, 4), (1, 0, 4), (0, 1, 1), (0, 1, 2.5),
                                  (0, float("inf"), 4)])
def test_grid_rejects_bad_input(args):
    with pytest.raises(InvalidScenarioError):
        Grid(*args)


def test_constant_datum():
    f = field_from_datum(constant(0.7), Grid(-1, 3, 13))
    assert np.all(f.values == 0.7)


def test_riemann_layout_on_coarse_grid():
    g = Grid(-4, 4, 8)
    inc = field_from_datum(riemann(0.5, 1.0, 0), g)
    np.testing.assert_array_equal(inc.values, [0.5] * 4 + [1.0] * 4)
    dec = field_from_datum(riemann(1.0, 0.5, 0), g)
    np.testing.assert_array_equal(dec.values, inc.values[::-1])


def test_riemann_jump_outside_domain():
    with pytest.raises(InvalidScenarioError):
        field_from_datum(riemann(0.5, 1.0, 5.0), Grid(-4, 4, 8))


def test_field_is_read_only_and_validated():
    g = Grid(0, 1, 4)
    f = Field(g, [1, 2, 3, 4])
    with pytest.raises(ValueError):
        f.values[0] = 3
    with pytest.raises(InvalidScenarioError):
        Field(g, [1, 2, 3])
    with pytest.raises(InvalidScenarioError):
        Field(g, [1, -2, 3, 4])
    with pytest.raises(InvalidScenarioError):
        Field(g, [1, np.nan, 3, 4])


def test_field_extrapolates_constant():
    f = Field(Grid(0, 1, 4), [1, 2, 3, 4])
    np.testing.assert_array_equal(f.at([-5, 0.1, 0.9, 7]), [1, 1, 4, 4])


def test_coarsen_conserves_mass():
    g = Grid(0, 1, 6)
    f = Field(g, [1, 2, 3, 4, 5, 6])
    c = f.coarsen(3)
    np.testing.assert_allclose(c.values, [2, 5])
    assert c.values.sum() * c.grid.dx == pytest.approx(f.values.sum() * g.dx)


@pytest.mark.parametrize("values, tv", [([0.3] * 5, 0.0), ([0, 1, 0], 2.0)])
def test_total_variation(values, tv):
    assert total_variation(Field(Grid(0, 1, len(values)), values)) == tv


def test_total_variation_of_riemann_is_exact():
    for n in (7, 8, 1601):
        f = field_from_datum(riemann(0.5, 1.0, 0.013), Grid(-4, 4, n))
        assert total_variation(f) == 0.5


@given(st.lists(st.floats(0, 5), min_size=2, max_size=30), st.floats(0, 3))
def test_total_variation_shift_invariant(vals, c):
    g = Grid(0, 1, len(vals))
    a = total_variation(Field(g, vals))
    b = total_variation(Field(g, np.asarray(vals) + c))
    assert b == pytest.approx(a, abs=1e-9)


def test_l1_examples():
    g = Grid(-4, 4, 800)
    a = field_from_datum(constant(0.5), g)
    b = field_from_datum(constant(1.0), g)
    assert l1_distance(a, a, (-1, 1)) == 0
    assert l1_distance(a, b, (-1, 1)) == pytest.approx(1.0)
    s0 = field_from_datum(riemann(0.5, 1, 0), g)
    s1 = field_from_datum(riemann(0.5, 1, 0.5), g)
    assert l1_distance(s0, s1, (-1, 1)) == pytest.approx(0.25)


def test_l1_errors():
    a = field_from_datum(constant(0.5), Grid(-4, 4, 8))
    b = field_from_datum(constant(0.5), Grid(-4, 4, 16))
    with pytest.raises(InvalidScenarioError):
        l1_distance(a, b, (-1, 1))
    with pytest.raises(InvalidScenarioError):
        l1_distance(a, a, (-5, 1))


@settings(max_examples=50)
@given(st.lists(st.floats(0, 2), min_size=4, max_size=4),
       st.lists(st.floats(0, 2), min_size=4, max_size=4))
def test_l1_symmetric_nonnegative(u, v):
    g = Grid(0, 4, 4)
    a, b = Field(g, u), Field(g, v)
    d = l1_distance(a, b, (0, 4))
    assert d >= 0 and d == l1_distance(b, a, (0, 4))
    assert (d == 0) == (u == v)


def test_datum_roundtrip():
    for d in (constant(0.3), riemann(0.5, 1, 0.2), Datum("tanh", a=0.5, b=1, jump=0, width=2),
              Datum("values", values=(1.0, 2.0))):
        assert Datum.from_dict(d.to_dict()) == d
    with pytest.raises(InvalidScenarioError):
        Datum.from_dict({"kind": "spline"})


def test_velocity_model():
    v = VelocityModel.linear()
    assert v.V(0.25) == 0.75 and v.dV(0.3) == -1 and v.d2V(0.3) == 0
    assert v.flux(0.5) == 0.25
    assert v.max_abs_speed(0.5, 1.0) == pytest.approx(0.5)
    v.check_admissible(0, 1)
    with pytest.raises(InvalidScenarioError):
        VelocityModel((0.0, 1.0)).check_admissible(0, 1)
    w = VelocityModel.from_dict({"kind": "polynomial", "coeffs": [1, 0, -1]})
    assert w.dV(0.5) == -1.0 and VelocityModel.from_dict(w.to_dict()) == w
