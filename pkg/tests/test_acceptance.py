"""Acceptance criteria 1-10, each at its stated tolerance.

Every test records a single verdict line that is printed in the terminal
summary. Failures are reported as they are; tolerances are not adjusted.
"""
import time

import numpy as np
import pytest

from flexmh.analysis import (
    _s_shaped_effort,
    classify_regime,
    random_convex_instance,
    random_general_instance,
    random_ntype_instance,
    screening_path_trace,
    verify_structure,
    welfare_report,
)
from flexmh.cli import reproduce_osc_ex1
from flexmh.config import environment_from_config, example_config
from flexmh.funcspace import (
    LinearEffort,
    PowerCost,
    PowerEffort,
    upper_concave_envelope,
)
from flexmh.menus import Menu, check_feasibility, is_single_full_range
from flexmh.model import FULL, Interval, build_environment, theta_restricted
from flexmh.solvers import (
    brute_force_oracle,
    pinned_payments,
    solve_menu_convex_effort,
    solve_menu_equal_power,
    solve_menu_general,
    solve_menu_via_convexification,
    solve_ntypes_fullrange,
)

CONVEX_SEED = 3
GENERAL_SEED = 4
NTYPE_SEED = 9
CLAIM_TOL = 1e-7


@pytest.fixture(scope="module")
def convex_suite():
    rng = np.random.default_rng(CONVEX_SEED)
    suite = []
    for _ in range(50):
        env, desc = random_convex_instance(rng)
        suite.append((env, desc, solve_menu_convex_effort(env)))
    return suite


@pytest.fixture(scope="module")
def general_suite():
    rng = np.random.default_rng(GENERAL_SEED)
    suite = []
    for _ in range(20):
        env, desc = random_general_instance(rng)
        suite.append((env, desc, solve_menu_general(env)))
    return suite


@pytest.fixture(scope="module")
def example1():
    start = time.perf_counter()
    env = environment_from_config(example_config("ef-ex1"))
    rep = solve_menu_convex_effort(env)
    eq = solve_menu_equal_power(env)
    return env, rep, eq, time.perf_counter() - start


def _failures(checks):
    return [name for name, ok in checks if not ok]


def test_criterion_01_example1_numbers(example1, record_criterion):
    env, rep, eq, seconds = example1
    a0, a1 = rep.menu.alphas
    s0, s1 = eq.menu.alphas
    values = [
        ("alpha0_mh", rep.alpha_mh[0], 0.25, 1e-9),
        ("alpha1_mh", rep.alpha_mh[1], 0.40824829, 1e-7),
        ("alpha0_opt", a0, 0.23198047, 1e-5),
        ("alpha1_opt", a1, 0.42074019, 1e-5),
        ("alpha0_equal_power", s0, 0.19749115, 1e-5),
        ("alpha1_equal_power", s1, 0.44439977, 1e-5),
        ("m0", rep.menu.payments[0], 0.0, 1e-9),
        ("m1", rep.menu.payments[1], 0.0, 1e-9),
    ]
    checks = [(f"{n}={v:.8f} (want {e:.8f})", abs(v - e) <= tol) for n, v, e, tol in values]
    checks.append((f"runtime {seconds:.2f}s", seconds <= 10.0))
    bad = _failures(checks)
    record_criterion(1, not bad, "all values within tolerance" if not bad
                     else "off: " + "; ".join(bad))
    assert not bad, bad


def test_criterion_02_binding_boundary_and_path(example1, record_criterion):
    env, rep, _, _ = example1
    a0, a1 = rep.menu.alphas
    boundary = 2 * a0 ** 2 - (2 / 3) * a0 ** 3 - (4 / 3) * a1 ** 3
    trace = screening_path_trace(env, 101)
    m1 = -trace.column("neg_m1")
    d0 = np.diff(trace.column("term0")).min()
    d1 = np.diff(trace.column("term1")).min()
    checks = [(f"boundary {boundary:.2e}", abs(boundary) <= 1e-5),
              (f"max path m1 {m1.max() + 0.0:.2e}", m1.max() <= 1e-7),
              (f"term increments {min(d0, d1):.2e}", min(d0, d1) >= -1e-12)]
    bad = _failures(checks)
    record_criterion(2, not bad, "; ".join(n for n, _ in checks))
    assert not bad, bad


def test_criterion_03_regime_iff_single_full_range(convex_suite, record_criterion):
    matches = 0
    for env, desc, rep in convex_suite:
        pooled = classify_regime(env).tag == "EqualPower"
        matches += pooled == is_single_full_range(rep.menu, env)
    n_pool = sum(classify_regime(env).tag == "EqualPower" for env, _, _ in convex_suite)
    record_criterion(3, matches == len(convex_suite),
                     f"{matches}/{len(convex_suite)} match ({n_pool} pooling instances)")
    assert matches == len(convex_suite)


def _claim(claims, cid):
    return next(c for c in claims if c.id == cid)


def test_criterion_04_full_range_iff_equal_powers(convex_suite, general_suite, record_criterion):
    results = []
    for env, _, rep in convex_suite + general_suite:
        results.append(_claim(verify_structure(rep, env), "full_range_iff_equal_powers").holds)
    ok = sum(results)
    record_criterion(4, ok == len(results), f"{ok}/{len(results)} optima")
    assert ok == len(results)


STRUCTURE = ("feasible", "efforts_ordered", "payment_implication", "powers_ordered",
             "payoffs_ordered")


def test_criterion_05_structural_properties(convex_suite, general_suite, example1,
                                            record_criterion):
    env1, rep1, _, _ = example1
    bad = []
    total = 0
    for i, (env, _, rep) in enumerate(convex_suite + general_suite + [(env1, None, rep1)]):
        for c in verify_structure(rep, env):
            if c.id in STRUCTURE:
                total += 1
                if not c.holds:
                    bad.append(f"#{i} {c.id} margin {c.margin:.2e}")
    record_criterion(5, not bad, f"{total - len(bad)}/{total} claims hold"
                     + ("" if not bad else ": " + "; ".join(bad[:5])))
    assert not bad, bad


def test_criterion_06_oracle_equivalence(convex_suite, example1, record_criterion):
    # the first ten instances of the seeded convex suite, fixed in advance
    gaps, above = [], []
    for env, _, rep in convex_suite[:10]:
        oracle = brute_force_oracle(env, 15)
        width = env.x_hi - env.x_lo
        gaps.append((rep.objective - oracle.objective) / width)
        above.append(oracle.objective <= rep.objective + 1e-12)
    env1, rep1, _, _ = example1
    general = solve_menu_general(env1)
    reduction_gap = abs(general.objective - rep1.objective)
    n_ok = sum(g <= 0.01 for g in gaps)
    ok = all(above) and n_ok == len(gaps) and reduction_gap <= 1e-6
    record_criterion(6, ok, f"oracle <= solver in {sum(above)}/10; gap/(x_hi-x_lo) <= 0.01 in "
                     f"{n_ok}/10 (max {max(gaps):.4f}); example 1 general vs reduced "
                     f"{reduction_gap:.1e}")
    assert all(above)
    assert reduction_gap <= 1e-6
    assert n_ok == len(gaps), [round(g, 5) for g in gaps]


def _chord_max_all(x, y, ts):
    """O(n^3) overall: best chord over all sample pairs at every query point."""
    i, j = np.triu_indices(len(x), k=1)
    xi, xj, yi, yj = x[i], x[j], y[i], y[j]
    out = []
    for t in ts:
        sel = (xi <= t) & (t <= xj)
        w = (t - xi[sel]) / (xj[sel] - xi[sel])
        vals = (1 - w) * yi[sel] + w * yj[sel]
        hit = y[x == t]
        out.append(max(vals.max() if vals.size else -np.inf, hit.max() if hit.size else -np.inf))
    return np.array(out)


def _eval_points(th, Theta):
    """Breakpoints of both functions inside the domain of th."""
    lo, hi = th.x[0], th.x[-1]
    inner = Theta.x[(Theta.x > lo) & (Theta.x < hi)]
    return np.unique(np.concatenate((th.x, inner)))


def test_criterion_07_envelope(record_criterion):
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        x = np.sort(rng.uniform(-2.0, 2.0, 50))
        y = rng.normal(size=50) + rng.uniform(-1, 1) * x ** 2
        env = upper_concave_envelope(x, y)
        ts = np.concatenate((x, 0.5 * (x[1:] + x[:-1])))
        worst = max(worst, float(np.max(np.abs(env(ts) - _chord_max_all(x, y, ts)))))

    # truncations of non-concave theta: Theta_R0 - Theta nonincreasing on c(R0),
    # Theta_R1 - Theta nondecreasing on c(R1)
    violation = -np.inf
    costs = [(0.5, PowerCost(1.0, 2.0)), (0.5, PowerCost(0.5, 2.0))]
    for _ in range(100):
        x_hi = float(rng.uniform(0.5, 1.5))
        if rng.random() < 0.5:
            effort = PowerEffort(float(rng.uniform(0.3, 0.9)))
        else:
            effort = _s_shaped_effort(rng, x_hi)
        env = build_environment((0.0, x_hi), effort, costs, 501)
        x0, x1 = sorted(rng.uniform(0.05, 0.95, 2) * x_hi)
        for rng_, sign in ((Interval(0.0, float(x0)), 1.0), (Interval(float(x1), x_hi), -1.0)):
            th = theta_restricted(env, rng_)
            pts = _eval_points(th, env.Theta)
            d = th(pts) - env.Theta(pts)
            violation = max(violation, float(np.max(sign * np.diff(d), initial=-np.inf)))
    ok = worst <= 1e-12 and violation <= 1e-9
    record_criterion(7, ok, f"envelope vs chord oracle max {worst:.1e}; "
                     f"worst wrong-direction increment of Theta_R - Theta {violation:.1e}")
    assert worst <= 1e-12
    assert violation <= 1e-9


def test_criterion_08_single_full_range(record_criterion):
    out = reproduce_osc_ex1()
    bad = [g["name"] for g in out["golden"] if not g["pass"]]
    rng = np.random.default_rng(8)
    for k in range(4):
        b1 = float(rng.uniform(0.3, 1.0))
        b0 = b1 * float(rng.uniform(1.3, 3.0))
        env = build_environment((0.0, float(rng.uniform(0.5, 1.5))),
                                PowerEffort(float(rng.uniform(0.3, 0.8))),
                                [(0.5, PowerCost(b0, 2.0)), (0.5, PowerCost(b1, 2.0))], 1001)
        gen = solve_menu_general(env)
        conv = solve_menu_via_convexification(env)
        if not is_single_full_range(gen.menu, env):
            bad.append(f"random#{k} not single full range")
        if conv is None or abs(gen.objective - conv.objective) > 1e-7 or max(
                abs(a - b) for a, b in zip(gen.menu.alphas, conv.menu.alphas)) > 1e-7:
            bad.append(f"random#{k} convexified differs")
    record_criterion(8, not bad, "example and 4 random instances agree" if not bad
                     else "; ".join(bad))
    assert not bad, bad


def _quadratic_three_types(rng):
    x_hi = float(rng.uniform(0.5, 1.5))
    if rng.random() < 0.5:
        effort = LinearEffort(float(rng.uniform(0.5, 2.0)))
    else:
        effort = PowerEffort(float(rng.uniform(0.3, 0.9)))
    c_hi = float(effort(x_hi))
    xi = x_hi / c_hi
    floor = xi / (4 * c_hi)
    betas = np.sort(floor * rng.uniform(1.2, 5.0, 3))[::-1]
    types = [(1 / 3, PowerCost(float(b), 2.0)) for b in betas]
    return build_environment((0.0, x_hi), effort, types, 1001), xi


def test_criterion_09_ntype(record_criterion):
    rng = np.random.default_rng(NTYPE_SEED)
    worst = np.inf
    for _ in range(20):
        env, _ = random_ntype_instance(rng, 3)
        rep = solve_ntypes_fullrange(env)
        worst = min(worst, check_feasibility(rep.menu, env).min_slack)
        top = min(float(env.dK(t, env.c_hi)) for t in range(3))
        for _ in range(5):
            kappas = np.sort(rng.uniform(0.0, top, 3))
            alphas = [env.inv_dK(t, k) for t, k in enumerate(kappas)]
            menu = Menu.build(env, alphas, pinned_payments(env, kappas), [FULL] * 3)
            worst = min(worst, check_feasibility(menu, env).min_slack)
    kappa_err = 0.0
    for _ in range(5):
        env, xi = _quadratic_three_types(rng)
        rep = solve_ntypes_fullrange(env)
        kappa_err = max(kappa_err, max(abs(k - xi / 2) for k in rep.menu.powers))
    ok = worst >= -1e-8 and kappa_err <= 1e-6
    record_criterion(9, ok, f"min IC slack {worst:.1e} over 20 optima and 100 pinned menus; "
                     f"max |kappa - xi/2| {kappa_err:.1e}")
    assert worst >= -1e-8
    assert kappa_err <= 1e-6


def test_criterion_10_welfare(convex_suite, general_suite, example1, record_criterion):
    env1, rep1, _, _ = example1
    osc = environment_from_config(example_config("osc-ex1"))
    optima = convex_suite + general_suite + [(env1, None, rep1),
                                             (osc, None, solve_menu_general(osc))]
    total, bad = 0, []
    for i, (env, _, rep) in enumerate(optima):
        for c in welfare_report(env, rep).claims:
            total += 1
            if c.margin < -CLAIM_TOL:
                bad.append(f"#{i} {c.id} {c.margin:.1e}")
    record_criterion(10, not bad, f"{total - len(bad)}/{total} claims hold"
                     + ("" if not bad else ": " + "; ".join(bad[:5])))
    assert not bad, bad
