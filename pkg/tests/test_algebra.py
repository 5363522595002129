import itertools

import numpy as np
import pytest

from crosslab.algebra import Kernel, convolve, inner, involve, l1_norm, l1_norm_report, random_kernel
from crosslab.dynsys import GOLDEN, haar_grid
from crosslab.errors import SystemMismatch
from crosslab.presets import almost_mathieu, laplacian, unit

from conftest import SYSTEMS


# -- pointwise oracles: evaluate the defining sums directly ---------------------

def _sample_points(sys, rng, n=7):
    if sys.dim == 0:
        return np.zeros((1, 0))
    if sys.space.finite:
        return haar_grid(sys.space, 1).nodes
    return rng.random((n, sys.dim))


def _support_box(k):
    lo = np.array([min(t[i] for t in k.support()) for i in range(k.rank)])
    hi = np.array([max(t[i] for t in k.support()) for i in range(k.rank)])
    return lo, hi


def brute_convolution(a, b, t, xs):
    sys = a.system
    total = np.zeros(len(xs), dtype=complex)
    for s in a.support():
        shifted = sys.act(np.negative(s), xs)
        total += a.evaluate(s, xs) * b.evaluate(np.subtract(t, s), shifted)
    return total


def brute_involution(a, t, xs):
    sys = a.system
    return np.conj(a.evaluate(np.negative(t), sys.act(np.negative(t), xs)))


def _targets(k):
    lo, hi = _support_box(k)
    return list(itertools.product(*[range(l - 1, h + 2) for l, h in zip(lo, hi)]))


@pytest.mark.parametrize("name", sorted(SYSTEMS))
def test_convolution_matches_defining_sum(name, rng):
    sys = SYSTEMS[name]
    a = random_kernel(sys, rng, radius=1, degree=2)
    b = random_kernel(sys, rng, radius=1, degree=1)
    ab = convolve(a, b)
    xs = _sample_points(sys, rng)
    for t in _targets(ab):
        assert np.max(np.abs(ab.evaluate(t, xs) - brute_convolution(a, b, t, xs))) < 1e-10


@pytest.mark.parametrize("name", sorted(SYSTEMS))
def test_involution_matches_definition(name, rng):
    sys = SYSTEMS[name]
    a = random_kernel(sys, rng, radius=2, degree=2)
    astar = involve(a)
    xs = _sample_points(sys, rng)
    for t in _targets(astar):
        assert np.max(np.abs(astar.evaluate(t, xs) - brute_involution(a, t, xs))) < 1e-12


@pytest.mark.parametrize("name", ["torus", "cyclic3", "torus_in_2"])
def test_inner_matches_quadrature(name, rng):
    sys = SYSTEMS[name]
    a = random_kernel(sys, rng, radius=1, degree=2)
    b = random_kernel(sys, rng, radius=2, degree=3)
    grid = haar_grid(sys.space, 16)
    quad = sum(grid.integrate(np.conj(a.evaluate(t, grid.nodes)) * b.evaluate(t, grid.nodes))
               for t in set(a.support()) | set(b.support()))
    assert abs(inner(a, b) - quad) < 1e-12


# -- spec examples ----------------------------------------------------------------

def test_unit_is_convolution_identity(rng):
    for sys in SYSTEMS.values():
        b = random_kernel(sys, rng, radius=2, degree=2)
        e = Kernel.unit(sys)
        assert convolve(e, b).allclose(b)
        assert convolve(b, e).allclose(b)


def test_point_laplacian_square(point):
    a = Kernel.from_coefficients(point, {1: 1, -1: 1})
    sq = convolve(a, a).trimmed()
    assert sq.terms() == {((-2,), ()): 1, ((0,), ()): 2, ((2,), ()): 1}


def test_shifted_mode_phase(rotation):
    a = Kernel.from_terms(rotation, {(1, 0): 1})
    b = Kernel.from_terms(rotation, {(0, 1): 1})
    ab = convolve(a, b)
    x = np.array([[0.1], [0.37]])
    expected = np.exp(2j * np.pi * (x[:, 0] - GOLDEN))
    assert np.allclose(ab.evaluate(1, x), expected, atol=1e-14)


def test_involution_examples(point, rotation, rng):
    a = Kernel.from_coefficients(point, {1: 1j})
    assert involve(a).terms() == {((-1,), ()): -1j}
    cos = Kernel.from_terms(rotation, {(0, 1): 0.5, (0, -1): 0.5})
    assert involve(cos).allclose(cos)
    r = random_kernel(rotation, rng)
    assert involve(involve(r)).allclose(r)


def test_inner_examples(rotation, rng):
    e = Kernel.unit(rotation)
    assert inner(e, e) == 1
    am = almost_mathieu(2.0)
    assert inner(am, am) == pytest.approx(4.0, abs=1e-14)
    a, b = random_kernel(rotation, rng), random_kernel(rotation, rng)
    assert inner(a, b) == pytest.approx(np.conj(inner(b, a)), abs=1e-12)
    val = inner(a, a)
    assert val.real >= 0 and abs(val.imag) < 1e-12


def test_l1_norm_examples(rotation, rng):
    assert l1_norm(Kernel.unit(rotation)) == 1.0
    assert l1_norm(almost_mathieu(2.0)) == pytest.approx(4.0, abs=1e-12)
    a = random_kernel(rotation, rng, radius=1, degree=2)
    c = 2.5 - 1.0j
    assert l1_norm(c * a) == pytest.approx(abs(c) * l1_norm(a), rel=1e-12)
    rep = l1_norm_report(a)
    assert rep["resolution"] >= 8 * a.mode_degree


def test_laplacian_preset_l1(point):
    assert l1_norm(laplacian(point)) == 2.0
    assert l1_norm(unit(point)) == 1.0


def test_system_mismatch(rotation, point):
    with pytest.raises(SystemMismatch):
        convolve(Kernel.unit(rotation), Kernel.unit(point))
    with pytest.raises(SystemMismatch):
        inner(Kernel.unit(rotation), Kernel.unit(point))


def test_finite_cyclic_values_roundtrip(period2):
    a = Kernel.from_coefficients(period2, {0: [0.0, 3.0]})
    vals = a.evaluate(0, np.array([[0.0], [1.0]]))
    assert np.allclose(vals, [0.0, 3.0], atol=1e-15)


# -- algebraic identities (Hilbert algebra) ---------------------------------------

@pytest.mark.parametrize("name", sorted(SYSTEMS))
def test_hilbert_algebra_identities(name, rng):
    sys = SYSTEMS[name]
    for _ in range(5):
        a, b, c = (random_kernel(sys, rng, radius=2, degree=2) for _ in range(3))
        # <a|b> = <b*|a*>
        assert abs(inner(a, b) - inner(involve(b), involve(a))) < 1e-10
        # <a*b|c> = <b|a* * c>
        assert abs(inner(convolve(a, b), c) - inner(b, convolve(involve(a), c))) < 1e-10
        assert convolve(convolve(a, b), c).max_deviation(convolve(a, convolve(b, c))) < 1e-10
        assert involve(convolve(a, b)).max_deviation(convolve(involve(b), involve(a))) < 1e-10


def test_support_arithmetic(rotation, rng):
    a = Kernel.from_terms(rotation, {(2, 1): 1.0, (-1, 0): 2.0})
    b = Kernel.from_terms(rotation, {(3, 0): 1.0, (0, -2): 1.0})
    allowed = {s + u for (s,) in a.support() for (u,) in b.support()}
    got = {t for (t,) in convolve(a, b).support()}
    assert got <= allowed


def test_selfadjoint_flag(rotation):
    assert almost_mathieu(3.0).is_selfadjoint()
    assert not Kernel.from_terms(rotation, {(1, 0): 1.0}).is_selfadjoint()
