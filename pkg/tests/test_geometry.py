import math

import numpy as np
import pytest

from tbiga.cases import RunConfig, case_spaces
from tbiga.errors import DegenerateJacobian, InterpolationSingular
from tbiga.geometry import ControlNetMap, analytic_map, fit_control_net, tensor_space

GRID = np.linspace(0.0, 1.0, 21)


def test_case1_map_corners():
    g = analytic_map("case1")
    C = 2 * math.cos(math.pi / 4) / (1 - math.cos(math.pi / 4))
    pts = g(np.array([0.0, 1.0, 0.0, 1.0]), np.array([0.0, 0.0, 1.0, 1.0]))
    # inner arc radius 1 and outer arc radius C + 2 centred at (-C, 0)
    assert np.allclose(pts[0], [1.0, 0.0])
    assert np.allclose(pts[1], [2.0, 0.0])
    assert np.hypot(*pts[2]) == pytest.approx(1.0)
    assert np.hypot(pts[3][0] + C, pts[3][1]) == pytest.approx(C + 2)


def test_annulus_map():
    g = analytic_map("annulus", r=1.0, R=2.0)
    S, T = np.meshgrid(GRID, GRID, indexing="ij")
    X = g(S, T)
    assert np.allclose(np.hypot(X[..., 0], X[..., 1]), 1 + S)
    assert np.allclose(np.arctan2(X[..., 1], X[..., 0]), math.pi / 2 * T)


def test_analytic_derivatives_by_finite_differences():
    g = analytic_map("case2")
    s, t, h = 0.3, 0.6, 1e-6
    d = g.derivatives(np.array(s), np.array(t), 2)
    fs = (g(np.array(s + h), np.array(t)) - g(np.array(s - h), np.array(t))) / (2 * h)
    ft = (g(np.array(s), np.array(t + h)) - g(np.array(s), np.array(t - h))) / (2 * h)
    assert np.allclose(d["s"], fs, atol=1e-7)
    assert np.allclose(d["t"], ft, atol=1e-7)


@pytest.mark.parametrize("case,kind,ell", [("cs1", "case1", None), ("cs2", "case2", None),
                                           ("cs3", "case2", 3), ("cs4", "annulus", 3)])
@pytest.mark.parametrize("m", [1, 4])
def test_control_net_reproduces_map(case, kind, ell, m):
    s, p1, t, p2, _ = case_spaces(RunConfig(case, ell=ell))
    space = tensor_space(s, p1, t, p2, m)
    exact = analytic_map(kind)
    net = fit_control_net(exact, space)
    S, T = np.meshgrid(GRID, GRID, indexing="ij")
    assert np.abs(net(S, T) - exact(S, T)).max() <= 1e-8
    # first derivatives are reproduced as well
    d1, d2 = net.derivatives(S, T, 1), exact.derivatives(S, T, 1)
    assert np.abs(d1["t"] - d2["t"]).max() <= 1e-7


def test_map_outside_space_is_approximated(caplog):
    space = tensor_space([], 2, [], 2, 2)
    exact = analytic_map("annulus")
    net = fit_control_net(exact, space)
    S, T = np.meshgrid(GRID, GRID, indexing="ij")
    err = np.abs(net(S, T) - exact(S, T)).max()
    assert 1e-6 < err < 5e-2
    assert "approximated" in caplog.text


def test_singular_greville_interpolation_without_fallback():
    s, p1, t, p2, _ = case_spaces(RunConfig("cs3", ell=3))
    space = tensor_space(s, p1, t, p2, 8)
    with pytest.raises(InterpolationSingular):
        fit_control_net(analytic_map("case2"), space, fallback=False)


def test_degenerate_jacobian():
    space = tensor_space([], 1, [], 1, 1)
    P = np.zeros((2, 2, 2))
    P[1, :, 0] = 1.0          # collapses t
    with pytest.raises(DegenerateJacobian):
        ControlNetMap(space, P).jacobian(np.array([0.5]), np.array([0.5]))


def test_control_net_csv(tmp_path):
    space = tensor_space([], 1, [], 1, 1)
    P = np.array([[[0, 0], [0, 1]], [[1, 0], [1, 1]]], dtype=float)
    ControlNetMap(space, P).to_csv(tmp_path / "net.csv")
    assert len((tmp_path / "net.csv").read_text().splitlines()) == 5


def test_annulus_jacobian_at_origin():
    jac = analytic_map("annulus").jacobian(np.array(0.0), np.array(0.0))
    assert np.allclose(jac.J, [[1.0, 0.0], [0.0, math.pi / 2]])
    assert jac.detJ == pytest.approx(math.pi / 2)


def test_identity_control_points_are_greville_grid():
    from tbiga.geometry import polynomial_greville

    space = tensor_space([], 3, [], 3, 4)
    net = fit_control_net(analytic_map("identity"), space)
    gs = polynomial_greville(space.s_space)
    assert np.allclose(net.control_points[:, 0, 0], gs)
    assert np.allclose(net.control_points[0, :, 1], gs)


def test_positive_jacobian_on_case_maps():
    g = np.linspace(0.0, 1.0, 15)
    S, T = np.meshgrid(g, g, indexing="ij")
    for kind in ("case1", "case2", "annulus", "identity"):
        assert np.all(analytic_map(kind).jacobian(S, T).detJ > 0)


def test_flat_index_round_trip():
    space = tensor_space([], 2, [], 3, 3)
    i = np.arange(space.n)
    k, l = space.unindex(i)
    assert np.array_equal(space.index(k, l), i)
    assert space.boundary_mask().sum() == space.n - (space.n1 - 2) * (space.n2 - 2)
