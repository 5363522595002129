import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crosslab.dynsys import (
    GOLDEN, Box, DynamicalSystem, FiniteCyclic, GroupSpec, Point, QuadratureGrid, Torus,
    act, birkhoff_average, birkhoff_boxes, dual_grid, haar_grid, zone_grid,
)
from crosslab.errors import SystemMismatch


def test_act_rotation():
    sys = DynamicalSystem.rotation(0.3819)
    assert act(sys, 1, 0.25)[0] == pytest.approx(0.6319)


def test_act_identity(rotation):
    assert act(rotation, 0, 0.7)[0] == 0.7


def test_act_finite_cyclic():
    sys = DynamicalSystem.periodic(2)
    assert act(sys, 3, 1)[0] == 0


def test_act_point_is_trivial(point):
    assert act(point, 5, 0.0).shape == (0,)


def test_act_dimension_mismatch(rotation):
    with pytest.raises(SystemMismatch):
        act(rotation, (1, 2), 0.1)
    with pytest.raises(SystemMismatch):
        act(rotation, 1, (0.1, 0.2))


@settings(max_examples=60, deadline=None)
@given(s=st.integers(-50, 50), t=st.integers(-50, 50), x=st.floats(0, 1, exclude_max=True))
def test_action_law_torus(s, t, x):
    sys = DynamicalSystem.rotation(GOLDEN)
    lhs = act(sys, s, act(sys, t, x))
    rhs = act(sys, s + t, x)
    # equality on the circle, not as reals in [0, 1)
    assert abs((lhs - rhs + 0.5) % 1.0 - 0.5)[0] < 1e-12


@settings(max_examples=60, deadline=None)
@given(s=st.tuples(st.integers(-20, 20), st.integers(-20, 20)),
       t=st.tuples(st.integers(-20, 20), st.integers(-20, 20)),
       x=st.tuples(st.integers(0, 1), st.integers(0, 2)))
def test_action_law_cyclic_exact(s, t, x):
    sys = DynamicalSystem.periodic([2, 3])
    lhs = act(sys, s, act(sys, t, x))
    rhs = act(sys, np.add(s, t), x)
    assert np.array_equal(lhs, rhs)


def test_haar_grid_examples():
    g = haar_grid(Point(), 17)
    assert len(g) == 1 and g.weights[0] == 1.0
    g = haar_grid(FiniteCyclic((2,)), 99)
    assert g.nodes[:, 0].tolist() == [0, 1] and g.weights.tolist() == [0.5, 0.5]
    g = haar_grid(Torus.from_theta(GOLDEN), 4)
    assert g.nodes[:, 0].tolist() == [0, 0.25, 0.5, 0.75]
    assert g.weights.tolist() == [0.25] * 4


def test_quadrature_weights_validated():
    with pytest.raises(ValueError):
        QuadratureGrid(np.zeros((2, 1)), np.array([0.5, 0.6]))


@pytest.mark.parametrize("degree", [1, 3, 7])
def test_quadrature_invariant_under_action(rng, degree):
    sys = DynamicalSystem.rotation(GOLDEN)
    grid = haar_grid(sys.space, 2 * degree + 1)
    ks = np.arange(-degree, degree + 1)
    c = rng.standard_normal(len(ks)) + 1j * rng.standard_normal(len(ks))

    def f(x):
        return np.exp(2j * np.pi * x[..., 0, None] * ks) @ c

    base = grid.integrate(f(grid.nodes))
    assert base == pytest.approx(c[degree], abs=1e-12)
    for t in (1, -3, 40):
        moved = grid.integrate(f(act(sys, t, grid.nodes)))
        assert abs(moved - base) < 1e-10


def test_birkhoff_boxes():
    boxes = birkhoff_boxes(3)
    assert [b.cardinality for b in boxes] == [3, 5, 7]
    assert boxes[0].sites[:, 0].tolist() == [-1, 0, 1]
    assert birkhoff_boxes(1, rank=2)[0].cardinality == 9


def test_box_index_roundtrip():
    box = Box(2, rank=2)
    assert box.index(box.sites).tolist() == list(range(25))


def test_birkhoff_average_degree_one():
    sys = DynamicalSystem.rotation(GOLDEN)
    n_max = 256

    def f(x):
        return np.cos(2 * np.pi * x[..., 0])

    errs = [abs(birkhoff_average(sys, f, 0.3, Box(n))) for n in (16, 32, 64, 128, n_max)]
    assert errs[-1] <= 10 / n_max
    assert errs[-1] < errs[0]


def test_zone_grid_periodic():
    sys = DynamicalSystem.periodic([2, 4])
    z = zone_grid(sys, 4)
    assert len(z) == 16
    assert z.nodes[:, 0].max() < 0.5 and z.nodes[:, 1].max() < 0.25
    assert len(dual_grid(1, 8)) == 8


def test_system_validation():
    with pytest.raises(SystemMismatch):
        DynamicalSystem(GroupSpec(2), Torus.from_theta(GOLDEN))
    with pytest.raises(SystemMismatch):
        DynamicalSystem(GroupSpec(1, (3,)), FiniteCyclic((2,)))
    with pytest.raises(ValueError):
        GroupSpec(0)
    with pytest.raises(ValueError):
        Torus(((1.2,),))
    sys = DynamicalSystem(GroupSpec(1), FiniteCyclic((5,)))
    assert sys.group.quotient_period == (5,)
    assert math.isinf(Torus.from_theta(0.1).size)
