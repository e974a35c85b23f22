import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from entanglenet.surfaces import (
    SURFACES,
    CriticalSurface,
    LengthProfile,
    RootError,
    critical_lengths,
    residual,
    solve_homogeneous,
    solve_scaled,
    surface,
)

CITED = {"square": 0.5, "triangular": 0.347296, "honeycomb": 0.652703, "bowtie-I": 0.404518}


def test_residual_examples():
    assert residual(surface("square"), [0.5, 0.5]) == 0.0
    assert abs(residual(surface("triangular"), [0.347296] * 3)) < 1e-5
    assert residual(surface("honeycomb"), [1.0, 1.0, 0.0]) == 0.0
    with pytest.raises(ValueError):
        residual(surface("square"), [0.5, 0.5, 0.5])
    with pytest.raises(ValueError):
        residual(surface("square"), [0.5, 1.5])


@pytest.mark.parametrize("name", sorted(CITED))
def test_homogeneous_roots(name):
    surf = surface(name)
    p = solve_homogeneous(surf)
    assert abs(p - CITED[name]) < 1e-5
    assert abs(residual(surf, [p] * surf.arity)) < 1e-9


def test_exact_roots_closed_form():
    # triangular: 1 - 3p + p^3 = 0 -> 2 sin(pi/18); honeycomb: 1 - 2 sin(pi/18)
    assert solve_homogeneous(surface("triangular")) == pytest.approx(2 * math.sin(math.pi / 18), abs=1e-9)
    assert solve_homogeneous(surface("honeycomb")) == pytest.approx(1 - 2 * math.sin(math.pi / 18), abs=1e-9)


def test_isosceles_triangular():
    surf = surface("triangular")
    p = solve_scaled(surf, (1.0, 1.0, math.sqrt(2.0)))
    assert abs(p - 0.388510) < 1e-5
    s2 = math.sqrt(2.0)
    assert abs(2 * p + p**s2 - p ** (2 + s2) - 1) < 1e-9
    assert p > solve_homogeneous(surf)


@pytest.mark.parametrize("name", sorted(SURFACES))
def test_unit_ratios_match_homogeneous(name):
    surf = surface(name)
    assert abs(solve_scaled(surf, [1.0] * surf.arity) - solve_homogeneous(surf)) < 1e-10


@pytest.mark.parametrize("name", sorted(SURFACES))
def test_surface_invariants(name):
    surf = surface(name)
    k = surf.arity
    assert surf.value([1.0] * k) >= 1.0
    assert surf.value([0.0] * k) == 0.0
    for coef, exps in surf.monomials:
        assert set(exps) <= {0, 1}
    # unique homogeneous root: one sign change along a fine grid
    grid = np.linspace(1e-6, 1, 2001)
    signs = np.sign([surf.value([p] * k) - 1 for p in grid])
    assert np.count_nonzero(np.diff(signs)) == 1


def test_exact_flags():
    assert {n for n, s in SURFACES.items() if s.exact} == {"square", "triangular", "honeycomb"}


def test_bowtie_surface_structure():
    surf = surface("bowtie-I")
    assert surf.arity == 5
    terms = {exps: coef for coef, exps in surf.monomials}
    assert terms[(0, 0, 0, 0, 1)] == 1
    assert terms[(1, 1, 0, 0, 1)] == -1
    assert terms[(0, 0, 1, 1, 1)] == -1
    assert terms[(1, 1, 1, 1, 1)] == 1
    # swapping the two triangles (1<->3, 2<->4) leaves the polynomial unchanged
    swapped = {(e[2], e[3], e[0], e[1], e[4]): c for e, c in terms.items()}
    assert swapped == terms


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(sorted(SURFACES)), st.data())
def test_residual_monotone(name, data):
    surf = surface(name)
    p = np.array(data.draw(st.lists(st.floats(0, 1), min_size=surf.arity, max_size=surf.arity)))
    for i in range(surf.arity):
        # F is multilinear, so the unit-step difference is the exact partial derivative
        up, lo = p.copy(), p.copy()
        up[i], lo[i] = 1.0, 0.0
        assert residual(surf, up) - residual(surf, lo) >= -1e-12
        # and a small forward difference agrees in sign up to rounding
        h = 1e-6
        if p[i] + h <= 1:
            step = p.copy()
            step[i] += h
            assert residual(surf, step) - residual(surf, p) >= -1e-12


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(sorted(SURFACES)), st.data())
def test_scaled_root_residual(name, data):
    surf = surface(name)
    ratios = data.draw(st.lists(st.floats(0.2, 5.0), min_size=surf.arity, max_size=surf.arity))
    p = solve_scaled(surf, ratios)
    assert 0 < p < 1
    assert abs(surf.value(np.power(p, ratios)) - 1) < 1e-9


def test_critical_lengths_square():
    res = critical_lengths(surface("square"), LengthProfile({1: 1.0, 2: 1.0}, 1 / 22))
    assert res.scale == pytest.approx(22 * math.log(2), abs=1e-7)
    assert res.scale == pytest.approx(15.25, abs=0.01)
    assert res.residual >= 0 and res.residual < 1e-9
    assert res.lengths == pytest.approx((res.scale, res.scale))
    assert res.probabilities == pytest.approx((0.5, 0.5), abs=1e-9)


def test_critical_lengths_triangular():
    res = critical_lengths(surface("triangular"), LengthProfile([1.0, 1.0, 1.0], 1 / 22))
    assert res.scale == pytest.approx(-22 * math.log(0.347296), abs=1e-4)
    assert res.scale == pytest.approx(23.27, abs=0.01)


def test_critical_lengths_lossless_unbounded():
    res = critical_lengths(surface("honeycomb"), LengthProfile([1.0, 2.0, 3.0], 0.0))
    assert res.unbounded
    assert math.isinf(res.scale)


def test_length_profile_validation():
    with pytest.raises(ValueError):
        LengthProfile({1: 1.0, 3: 1.0}, 0.1)
    with pytest.raises(ValueError):
        LengthProfile([1.0, -1.0], 0.1)
    with pytest.raises(ValueError):
        LengthProfile([1.0], -0.1)
    with pytest.raises(ValueError):
        critical_lengths(surface("square"), LengthProfile([1.0, 1.0, 1.0], 0.1))
    prof = LengthProfile([10.0, 20.0], 0.05)
    assert prof.probabilities() == pytest.approx(np.exp([-0.5, -1.0]))


def test_errors():
    with pytest.raises(KeyError):
        surface("kagome")
    with pytest.raises(ValueError):
        solve_scaled(surface("square"), [1.0])
    with pytest.raises(ValueError):
        solve_scaled(surface("square"), [1.0, 0.0])
    with pytest.raises(ValueError):
        CriticalSurface("bad", 2, ((1.0, (2, 0)),), False)
    weak = CriticalSurface("weak", 1, ((0.5, (1,)),), False)
    with pytest.raises(RootError):
        solve_homogeneous(weak)


def test_aliases():
    assert surface("4.4.4.4") is surface("square")
    assert surface("bow-tie-I") is surface("bowtie-I")
    assert surface("Triangular") is surface("triangular")
