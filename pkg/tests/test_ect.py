import math

import numpy as np
import pytest

from tbiga.ect import (LocalGenerators, critical_length_lower_bound, eval_generators, generators,
                       make_space)
from tbiga.errors import DimensionOverflow, DuplicateRoot


def test_dimension_and_monomials():
    sp = make_space([(0.0, math.pi / 4), (0.0, math.pi / 2)], 4)
    assert sp.dim == 5
    assert sp.mu0 == 1
    assert not sp.contains_identity
    assert make_space([(3.0, 0.0)], 3).contains_identity


def test_too_many_roots():
    with pytest.raises(DimensionOverflow):
        make_space([(0.0, 1.0), (0.0, 2.0)], 3)


def test_zero_root_is_implicit():
    with pytest.raises(DuplicateRoot):
        make_space([(0.0, 0.0)], 2)


def test_generator_listing():
    names = [str(g) for g in generators(make_space([(2.0, 0.0), (0.0, 3.0)], 4))]
    assert names == ["1", "x", "exp(2x)", "cos(3x)", "sin(3x)"]


def test_closed_form_derivatives_match_finite_differences():
    sp = make_space([(1.5, 0.0), (0.5, 2.0)], 5)
    x = np.linspace(-0.3, 0.7, 11)
    h = 1e-6
    d1 = eval_generators(sp, x, 1)
    fd = (eval_generators(sp, x + h) - eval_generators(sp, x - h)) / (2 * h)
    assert np.allclose(d1, fd, rtol=1e-7, atol=1e-7)


@pytest.mark.parametrize("roots,p,h", [
    ([(3.0, 0.0)], 3, 0.2),
    ([(0.0, math.pi / 2)], 4, 0.5),
    ([(182.84, 0.0), (300.0, 0.0)], 4, 0.125),
    ([(-2.0, 1.0)], 4, 0.3),
])
def test_local_generators_span_the_space(roots, p, h):
    # every closed-form generator is a fixed combination of the local ones
    sp = make_space(roots, p)
    lg = LocalGenerators(sp, h)
    u = np.linspace(0.0, 1.0, 40)
    local = lg(u)
    exact = eval_generators(sp, h * u, element=(0.0, h))
    coef, *_ = np.linalg.lstsq(local, exact, rcond=None)
    assert np.abs(local @ coef - exact).max() <= 1e-9 * max(1.0, np.abs(exact).max())


def test_local_generator_derivatives_chain():
    sp = make_space([(0.0, 2.0), (1.0, 0.0)], 5)
    lg = LocalGenerators(sp, 0.4)
    u = np.linspace(0.05, 0.95, 7)
    h = 1e-6
    fd = (lg(u + h) - lg(u - h)) / (2 * h)
    assert np.allclose(lg(u, 1), fd, atol=1e-6)


def test_operator_annihilates_its_exponential():
    sp = make_space([(40.0, 0.0)], 2)
    lg = LocalGenerators(sp, 1.0)
    w = 40.0 + 0j
    vals = lg.apply_operator(0.3, [w], 1)
    # (1 - D/w) D kills constants and e^{w u}; only x survives
    assert abs(vals[2]) < 1e-12
    assert abs(vals[0]) < 1e-14


def test_critical_length():
    assert critical_length_lower_bound(make_space([(1.0, 0.0)], 2)) == math.inf
    harmonic = make_space([(0.0, math.pi / 2), (0.0, math.pi)], 4)
    assert critical_length_lower_bound(harmonic) == pytest.approx(2.0)
    assert critical_length_lower_bound(make_space([(0.0, 3.0)], 2)) == pytest.approx(math.pi / 3)
