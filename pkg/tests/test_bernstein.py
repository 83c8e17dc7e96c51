import math

import numpy as np
import pytest

from tbiga.bernstein import build_bernstein, eval_local
from tbiga.cases import shape_params_tangential
from tbiga.ect import make_space
from tbiga.errors import SingularHermiteSystem


def classical_bernstein(p, a, b, x):
    t = (x - a) / (b - a)
    return np.stack([math.comb(p, j) * t**j * (1 - t) ** (p - j) for j in range(p + 1)], axis=-1)


@pytest.mark.parametrize("p", [1, 2, 3, 5, 7])
def test_polynomial_case_is_classical_bernstein(p):
    B = build_bernstein(make_space([], p), 0.5, 2.0)
    x = np.linspace(0.5, 2.0, 31)
    assert np.abs(eval_local(B, x) - classical_bernstein(p, 0.5, 2.0, x)).max() < 1e-12
    assert B.validity == "valid"


def test_cycloidal_nonnegativity_verdicts():
    # {1, cos x, sin x}: fine on [0, 2], negative values on [0, 4]
    sp = make_space([(0.0, 1.0)], 2)
    assert build_bernstein(sp, 0.0, 2.0).validity == "valid"
    long = build_bernstein(sp, 0.0, 4.0)
    assert long.validity == "suspect"
    assert long.diagnostics["min_value"] < -0.1


@pytest.mark.parametrize("roots,p,h", [
    ([(0.0, math.pi / 4), (0.0, math.pi / 2)], 4, 1.0),
    ([(5.0, 0.0), (-3.0, 0.0)], 4, 0.7),
    ([(0.0, 2.0, 2)], 5, 0.5),
    ([(1.0, 1.0)], 3, 0.8),
])
def test_end_conditions_and_partition_of_unity(roots, p, h):
    B = build_bernstein(make_space(roots, p), 0.0, h)
    Da, Db = B.end_derivatives()
    for j in range(p + 1):
        assert np.all(np.abs(Da[:j, j]) < 1e-10)
        assert np.all(np.abs(Db[: p - j, j]) < 1e-10)
    x = np.linspace(0.0, h, 101)
    V = eval_local(B, x)
    assert np.abs(V.sum(axis=1) - 1).max() < 1e-12
    assert V.min() > -1e-12
    assert V[0, 0] == pytest.approx(1.0)
    assert V[-1, -1] == pytest.approx(1.0)


def test_steep_exponentials_use_extended_precision():
    exps = [(a, 0.0) for a in shape_params_tangential(100.0, 1.0, 2.0, 3)]
    B = build_bernstein(make_space(exps + [(0.0, math.pi / 2)], 6), 0.0, 1 / 6)
    assert B.validity == "valid"
    assert B.diagnostics["partition_of_unity"] < 1e-12


def test_singular_hermite_system_raises():
    # cos and sin of frequency 1 on [0, 2 pi]: B_0 cannot vanish doubly at 2 pi
    with pytest.raises(SingularHermiteSystem):
        build_bernstein(make_space([(0.0, 1.0)], 2), 0.0, 2 * math.pi)


def test_derivative_evaluation():
    B = build_bernstein(make_space([(2.0, 0.0)], 3), 0.0, 1.0)
    x = np.linspace(0.1, 0.9, 9)
    e = 1e-6
    fd = (eval_local(B, x + e) - eval_local(B, x - e)) / (2 * e)
    assert np.allclose(eval_local(B, x, 1), fd, atol=1e-7)


def test_quadratic_bernstein_midpoint_values():
    B = build_bernstein(make_space([], 2), 0.0, 1.0)
    assert eval_local(B, np.array([0.5]))[0] == pytest.approx([0.25, 0.5, 0.25])


def test_exponential_pair_single_element():
    B = build_bernstein(make_space([(2.0, 0.0), (-2.0, 0.0)], 3), 0.0, 1.0)
    x = np.linspace(0.0, 1.0, 50)
    V = eval_local(B, x)
    assert np.all(V >= -1e-14) and np.all(V <= 1 + 1e-14)
    assert np.all(np.diff(V[:, -1]) > 0)            # B_p increases from 0 to 1
