import math
from pathlib import Path

import numpy as np
import pytest

from tbiga.cases import (PRESETS, RunConfig, dump_presets, estimate_orders, load_config, overshoot,
                         run_single, shape_params_radial, shape_params_tangential,
                         write_results_csv)
from tbiga.errors import DegenerateError, TBIGAError

GOLDEN = Path(__file__).parent / "data" / "presets_golden.ini"


def test_radial_shape_parameters():
    assert shape_params_radial(100, 1, 2, 3) == pytest.approx([182.8427, 241.4214, 300.0], rel=1e-6)
    assert shape_params_radial(100, 1, 2, 1) == pytest.approx([241.4214], rel=1e-6)
    assert shape_params_radial(100, 1, 2, 2) == pytest.approx([100 * (2 * math.sqrt(2) - 1), 300])


def test_tangential_shape_parameters():
    pi = math.pi
    assert shape_params_tangential(100, 1, 2, 3) == pytest.approx([50 * pi, 75 * pi, 100 * pi])
    assert shape_params_tangential(100, 1, 2, 1) == pytest.approx([75 * pi])
    assert shape_params_tangential(100, 1, 2, 2) == pytest.approx([50 * pi, 100 * pi])
    with pytest.raises(ValueError):
        shape_params_tangential(100, 1, 2, 0)


def test_estimate_orders():
    assert estimate_orders([1e-2, 1.25e-3]) == pytest.approx([3.0])
    assert estimate_orders([2.6336e-8, 8.4881e-10])[0] == pytest.approx(4.96, abs=5e-3)
    assert estimate_orders([0.5]) == []
    with pytest.raises(DegenerateError):
        estimate_orders([1e-3, 1e-15])


def test_presets_match_golden_file():
    assert dump_presets() == GOLDEN.read_text()


def test_preset_values():
    cs1 = PRESETS["cs1"]
    c = math.cos(math.pi / 4)
    assert cs1["C"] == 2 * c / (1 - c) and cs1["R"] == cs1["C"] + 2
    assert PRESETS["cs2"]["C"] == 1 / math.sqrt(2)
    assert PRESETS["cs5"]["a_modulus"] == 1e4 and PRESETS["cs5"]["theta"] == math.pi / 4
    assert PRESETS["cs3"]["a_modulus"] == PRESETS["cs4"]["a_modulus"] == 100


def test_overshoot_metric():
    assert overshoot(np.array([0.0, 0.5, 1.0]), "cs3") == 0.0
    assert overshoot(np.array([-0.1, 1.0]), "cs4") == pytest.approx(0.1)
    assert overshoot(np.array([-0.01, 1.02]), "cs5") == pytest.approx(0.02)


def test_dof_accounting():
    r = run_single(RunConfig("cs1", m=[2]), 2)
    n1 = n2 = 2 + 4
    assert r.n == n1 * n2 == 36
    assert r.dof == (n1 - 2) * (n2 - 2)
    assert all(row["dof"] == 36 for row in r.rows())


def test_runs_are_deterministic(tmp_path):
    cfg = RunConfig("cs2", m=[4], p=2)
    for name in ("a.csv", "b.csv"):
        write_results_csv([run_single(cfg, 4)], tmp_path / name)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    header = (tmp_path / "a.csv").read_text().splitlines()[0]
    assert header == "case,space,p1,p2,m,dof,quad,metric,value"


def test_config_file(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("[run]\ncase = cs3\nm = 4,8\nell = 2\nsupg = yes\n")
    cfg = load_config(path)
    assert (cfg.case, cfg.m, cfg.ell, cfg.supg) == ("cs3", [4, 8], 2, True)


def test_errors_carry_context(monkeypatch):
    import tbiga.cases as cases
    from tbiga.errors import SingularSystem

    with pytest.raises(ValueError):
        RunConfig("cs9").preset()

    def broken(system):
        raise SingularSystem("factorization failed")

    monkeypatch.setattr(cases, "solve", broken)
    with pytest.raises(SingularSystem, match=r"cs2 \(tb\) m=1: factorization failed"):
        run_single(RunConfig("cs2", m=[1], p=2), 1)
