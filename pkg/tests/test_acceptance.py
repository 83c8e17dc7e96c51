"""Acceptance criteria, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v`` or ``python3 tests/test_acceptance.py``.
"""
import logging
import math
import time

import numpy as np
import pytest
from scipy.interpolate import BSpline

from tbiga.bernstein import build_bernstein
from tbiga.cases import RunConfig, case_spaces, estimate_orders, run_single
from tbiga.ect import make_space
from tbiga.geometry import analytic_map, fit_control_net, tensor_space
from tbiga.recurrence import RecurrenceOracle
from tbiga.tbspline import (Partition, build_tbspline_space, greville_abscissae,
                            knots_from_partition, sample_grid)

# published reference values
CS1_TB = {1: 7.9294e-04, 2: 3.4854e-04, 4: 2.9655e-05, 8: 8.3556e-07, 16: 2.6336e-08,
          32: 8.4881e-10}
CS1_POLY = {1: 5.0629e-03, 2: 5.9308e-04, 4: 8.4760e-05, 8: 2.7812e-06, 16: 9.2305e-08,
            32: 2.9782e-09}
REL_TOL = 0.25
ROUNDOFF_FLOOR = 1e-12        # overshoots below this are treated as zero


def report(number, title, ok, detail, seconds):
    line = f"ACCEPTANCE {number} {'PASS' if ok else 'FAIL'} [{seconds:6.1f}s] {title}: {detail}"
    print(line)
    return line


def _timed(fn):
    t0 = time.perf_counter()
    ok, detail = fn()
    return ok, detail, time.perf_counter() - t0


def criterion_1():
    tb, poly = {}, {}
    for space, out in (("tb", tb), ("poly", poly)):
        for m in CS1_TB:
            out[m] = run_single(RunConfig("cs1", space=space), m).metrics["linf_error"]
    bad = []
    for name, got, ref in (("tb", tb, CS1_TB), ("poly", poly, CS1_POLY)):
        for m in ref:
            rel = abs(got[m] - ref[m]) / ref[m]
            if rel > REL_TOL:
                bad.append(f"{name} m={m} off by {rel:.0%}")
    ratios = {m: poly[m] / tb[m] for m in tb if m >= 2}
    bad += [f"ratio m={m} = {r:.3f} < 2" for m, r in ratios.items() if r < 2]
    detail = ("TB " + " ".join(f"{tb[m]:.4e}" for m in tb) + " | poly "
              + " ".join(f"{poly[m]:.4e}" for m in poly) + " | ratios "
              + " ".join(f"{r:.2f}" for r in ratios.values()))
    return not bad, detail + ("" if not bad else " | " + "; ".join(bad))


CS2_LEVELS = {2: [8, 16, 32, 64], 4: [4, 8, 16, 32], 6: [4, 8, 16, 32]}


def criterion_2():
    parts, ok = [], True
    for p, levels in CS2_LEVELS.items():
        errs = [run_single(RunConfig("cs2", p=p), m).metrics["linf_error"] for m in levels]
        order = estimate_orders(errs)[-1]
        good = abs(order - (p + 1)) <= 0.25
        ok &= good
        parts.append(f"p={p} m={levels[-2]}->{levels[-1]} order {order:.3f}"
                     f" (target {p + 1}){'' if good else ' FAIL'}")
    return ok, "; ".join(parts)


def criterion_3():
    tb = run_single(RunConfig("cs5", m=[50]), 50).metrics
    supg = run_single(RunConfig("cs5", m=[50], space="poly", supg=True), 50).metrics
    poly = run_single(RunConfig("cs5", m=[50], space="poly"), 50).metrics
    checks = {
        "TB max in [1, 1.01]": 1.0 <= tb["max"] <= 1.01,
        "TB |min| <= 5e-3": abs(tb["min"]) <= 5e-3,
        "SUPG max in [1, 1.01]": 1.0 <= supg["max"] <= 1.01,
        "SUPG |min| <= 5e-3": abs(supg["min"]) <= 5e-3,
        "poly max > 1.05": poly["max"] > 1.05,
    }
    detail = (f"TB max {tb['max']:.5f} min {tb['min']:.4e} | SUPG max {supg['max']:.5f} "
              f"min {supg['min']:.4e} | poly max {poly['max']:.4f}")
    failed = [k for k, v in checks.items() if not v]
    return not failed, detail + ("" if not failed else " | failed: " + "; ".join(failed))


def criterion_4():
    parts, ok = [], True
    for case in ("cs3", "cs4"):
        ov = [run_single(RunConfig(case, ell=ell), 8 if case == "cs3" else 6).metrics["overshoot"]
              for ell in range(4)]
        floored = [max(v, ROUNDOFF_FLOOR) for v in ov]
        mono = all(b <= a for a, b in zip(floored, floored[1:]))
        final = ov[-1] <= 1e-2
        ok &= mono and final
        parts.append(f"{case} " + " ".join(f"{v:.2e}" for v in ov)
                     + ("" if mono else " not monotone") + ("" if final else " ell=3 too large"))
    return ok, "; ".join(parts)


def _random_partition(rng, p, m):
    x = np.concatenate([[0.0], np.cumsum(rng.uniform(0.2, 1.0, m))])
    return Partition(x / x[-1], tuple(int(r) for r in rng.integers(0, p, m - 1)))


def criterion_5():
    rng = np.random.default_rng(20240601)
    res = {}
    worst = 0.0
    for _ in range(50):
        p, m = int(rng.integers(1, 6)), int(rng.integers(1, 7))
        part = _random_partition(rng, p, m)
        ts = build_tbspline_space(make_space([], p), part)
        x = sample_grid(ts, 9)
        ref = BSpline.design_matrix(x, knots_from_partition(part, p).knots, p).toarray()
        worst = max(worst, np.abs(ts.collocation(x) - ref).max())
    res["cox-de-boor"] = (worst <= 1e-10, f"{worst:.1e}")

    worst = 0.0
    for case, ells in (("cs1", [None]), ("cs2", [None]), ("cs3", range(4)), ("cs4", range(4)),
                       ("cs5", [None])):
        for ell in ells:
            s, p1, t, p2, _ = case_spaces(RunConfig(case, ell=ell))
            for roots, p in ((s, p1), (t, p2)):
                for m in ((50,) if case == "cs5" else (1, 2, 4, 8, 16, 32)):
                    ts = build_tbspline_space(make_space(roots, p), Partition.uniform(m, p))
                    worst = max(worst, np.abs(ts.collocation(sample_grid(ts, 25)).sum(1) - 1).max())
    res["partition-of-unity"] = (worst <= 1e-9, f"{worst:.1e}")

    worst = 0.0
    configs = [([(3.0, 0.0)], 2, 3), ([(-2.0, 0.0)], 3, 4), ([(1.0, 0.0), (-1.5, 0.0)], 3, 2),
               ([(2.0, 0.0), (5.0, 0.0)], 4, 3), ([(6.0, 0.0)], 3, 4), ([(0.0, 1.0)], 2, 3),
               ([(0.0, 2.0)], 3, 3), ([(0.0, math.pi / 2)], 4, 4), ([(0.0, 1.0)], 4, 2),
               ([(10.0, 0.0), (20.0, 0.0)], 3, 2)]
    for roots, p, m in configs:
        part = _random_partition(rng, p, m)
        ts = build_tbspline_space(make_space(roots, p), part)
        oracle = RecurrenceOracle(ts.space, ts.knots)
        for xv in np.linspace(0.0, 1.0, 9):
            worst = max(worst, np.abs(ts.collocation(np.array([xv]))[0] - oracle(float(xv))).max())
    res["recurrence-oracle"] = (worst <= 1e-6, f"{worst:.1e}")

    cyc = make_space([(0.0, 1.0)], 2)
    verdicts = (build_bernstein(cyc, 0.0, 2.0).validity, build_bernstein(cyc, 0.0, 4.0).validity)
    res["hermite-verdicts"] = (verdicts == ("valid", "suspect"), "/".join(verdicts))

    worst = 0.0
    for roots, p in (([], 3), ([(4.0, 0.0)], 3), ([(0.0, 1.0)], 4), ([(182.84, 0.0)], 4)):
        for m in (1, 3, 8):
            ts = build_tbspline_space(make_space(roots, p), Partition.uniform(m, p))
            x = sample_grid(ts, 25)
            worst = max(worst, np.abs(ts.collocation(x) @ greville_abscissae(ts) - x).max())
    res["greville"] = (worst <= 1e-9, f"{worst:.1e}")

    wrong = 0
    for _ in range(100):
        p, m = int(rng.integers(1, 7)), int(rng.integers(1, 6))
        x = np.concatenate([[0.0], np.cumsum(rng.uniform(0.2, 1.0, m))])
        r = tuple(int(v) for v in rng.integers(-1, p, m - 1))
        roots = [(1.5, 0.0)] if p >= 2 and rng.random() < 0.5 else []
        ts = build_tbspline_space(make_space(roots, p), Partition(x / x[-1], r), check=False)
        wrong += ts.n != p + 1 + sum(p - ri for ri in r)
    res["dimension"] = (wrong == 0, f"{100 - wrong}/100")
    ok = all(v[0] for v in res.values())
    return ok, "; ".join(f"{k} {v[1]}{'' if v[0] else ' FAIL'}" for k, v in res.items())


def criterion_6():
    g = np.linspace(0.0, 1.0, 21)
    S, T = np.meshgrid(g, g, indexing="ij")
    parts, ok = [], True
    for case, kind in (("cs1", "case1"), ("cs2", "case2"), ("cs4", "annulus")):
        s, p1, t, p2, _ = case_spaces(RunConfig(case))
        exact = analytic_map(kind)
        worst = 0.0
        for m in (1, 2, 4, 8, 16, 32):
            net = fit_control_net(exact, tensor_space(s, p1, t, p2, m))
            worst = max(worst, np.abs(net(S, T) - exact(S, T)).max())
        ok &= worst <= 1e-8
        parts.append(f"{kind} {worst:.1e}")
    return ok, "; ".join(parts)


CRITERIA = [
    (1, "case 1 error table", criterion_1, 120),
    (2, "case 2 convergence orders", criterion_2, 300),
    (3, "case 5 overshoot", criterion_3, 600),
    (4, "cases 3-4 overshoot monotone in ell", criterion_4, None),
    (5, "property suites", criterion_5, None),
    (6, "geometry exactness", criterion_6, None),
]


@pytest.mark.parametrize("number,title,fn,budget", CRITERIA, ids=[f"c{c[0]}" for c in CRITERIA])
def test_acceptance(number, title, fn, budget, capsys):
    logging.getLogger("tbiga").setLevel(logging.ERROR)
    ok, detail, seconds = _timed(fn)
    if budget is not None and seconds > budget:
        ok = False
        detail += f" | runtime {seconds:.0f}s over {budget}s"
    with capsys.disabled():
        print()
        report(number, title, ok, detail, seconds)
    assert ok, detail


if __name__ == "__main__":
    logging.basicConfig(level=logging.ERROR)
    for number, title, fn, budget in CRITERIA:
        ok, detail, seconds = _timed(fn)
        if budget is not None and seconds > budget:
            ok = False
        report(number, title, ok, detail, seconds)
