import math

import numpy as np
import pytest

from flexmh.exceptions import AssumptionError
from flexmh.funcspace import LinearEffort, PowerCost, PowerEffort
from flexmh.menus import (
    Menu,
    check_feasibility,
    is_single_full_range,
    minimal_payments_binary,
)
from flexmh.model import FULL, build_environment
from flexmh.solvers import (
    EQUAL_POWER,
    SCREENING,
    brute_force_oracle,
    golden_section_max,
    pinned_payments,
    solve_first_best,
    solve_menu_convex_effort,
    solve_menu_equal_power,
    solve_menu_general,
    solve_menu_via_convexification,
    solve_ntypes_fullrange,
    solve_pure_mh,
)

# reduced two-type problem for c(x) = x, K0 = a^2, K1 = (2/3) a^3, p = (1/2, 1/2),
# maximised with a dense grid followed by a bounded scalar search on the m1 = 0 curve
EX1_OPT = (0.23198973166519915, 0.4207509211437281)
EX1_OPT_VALUE = 0.19806499242164952
# equal powers: a0 = k/2, a1 = sqrt(k/2), bounded scalar search over k
EX1_EQUAL = (0.19768185825797732, 0.4446142803126968)
EX1_EQUAL_VALUE = 0.1941777750607629


def test_golden_section_on_quadratic():
    x, fx = golden_section_max(lambda a: -(a - 0.3) ** 2, 0.0, 1.0, tol=1e-12)
    assert x == pytest.approx(0.3, abs=1e-6) and fx == pytest.approx(0.0, abs=1e-12)


def test_example1_benchmarks(ex1):
    assert solve_pure_mh(ex1, 0).alpha == pytest.approx(0.25, abs=1e-9)
    # 1 = K1' + K1'' a = 6 a^2
    assert solve_pure_mh(ex1, 1).alpha == pytest.approx(1 / math.sqrt(6), abs=1e-9)
    assert solve_pure_mh(ex1, 1).alpha == pytest.approx(0.40824829, abs=1e-7)
    # first best: 1 = 2a at the boundary 0.5, and 1 = 2a^2 beyond it
    assert solve_first_best(ex1, 0).alpha == pytest.approx(0.5, abs=1e-9)
    assert solve_first_best(ex1, 1).alpha == pytest.approx(0.5, abs=1e-9)
    mh = solve_pure_mh(ex1, 0)
    assert mh.contract.kappa == pytest.approx(0.5)
    assert mh.single_peaked


@pytest.mark.parametrize("beta", [0.3, 0.7, 1.5])
def test_quadratic_mh_effort(beta):
    # linear envelope slope xi: xi = 4 beta a
    xi = 1 / 1.6
    env = build_environment((0.0, 2.0), LinearEffort(1.6),
                            [(0.5, PowerCost(beta, 2.0)), (0.5, PowerCost(beta / 2, 2.0))])
    a = solve_pure_mh(env, 0).alpha
    assert a == pytest.approx(min(xi / (4 * beta), env.c_hi), abs=1e-9)


def test_equal_power_matches_scalar_oracle(ex1):
    rep = solve_menu_equal_power(ex1)
    a0, a1 = rep.menu.alphas
    assert (a0, a1) == pytest.approx(EX1_EQUAL, abs=1e-7)
    assert a0 == pytest.approx(a1 ** 2, abs=1e-7)
    assert rep.objective == pytest.approx(EX1_EQUAL_VALUE, abs=1e-12)
    assert is_single_full_range(rep.menu, ex1)


def test_equal_power_collapses_to_mh_when_types_coincide(symmetric):
    rep = solve_menu_equal_power(symmetric)
    mh = solve_pure_mh(symmetric, 0).alpha
    assert rep.menu.alphas == pytest.approx((mh, mh), abs=1e-7)


def test_convex_solver_example1(ex1):
    rep = solve_menu_convex_effort(ex1)
    assert rep.menu.alphas == pytest.approx(EX1_OPT, abs=1e-7)
    assert rep.objective == pytest.approx(EX1_OPT_VALUE, abs=1e-10)
    assert rep.menu.payments == pytest.approx((0.0, 0.0), abs=1e-9)
    assert rep.regime == SCREENING
    assert check_feasibility(rep.menu, ex1).feasible


def test_convex_solver_requires_convex_effort(osc):
    with pytest.raises(AssumptionError):
        solve_menu_convex_effort(osc)


def test_convex_solver_rejects_a1_violation(symmetric):
    with pytest.raises(AssumptionError):
        solve_menu_convex_effort(symmetric)


def test_general_solver_matches_reduced_problem(ex1):
    gen = solve_menu_general(ex1)
    conv = solve_menu_convex_effort(ex1)
    assert gen.objective == pytest.approx(conv.objective, abs=1e-6)
    r0, r1 = gen.menu.ranges
    assert r0 == FULL or r0.lo == 0.0
    assert r1 == FULL or r1.hi == 0.5


def test_general_solver_quadratic_concave_effort(osc):
    rep = solve_menu_general(osc)
    assert is_single_full_range(rep.menu, osc)
    # quadratic costs with envelope slope 1: common power 1/2
    assert rep.menu.powers == pytest.approx((0.5, 0.5), abs=1e-6)
    conv = solve_menu_via_convexification(osc)
    assert conv is not None
    assert conv.objective == pytest.approx(rep.objective, abs=1e-7)


def test_convexification_declines_screening_instances(ex1):
    assert solve_menu_via_convexification(ex1) is None


def test_oracle_bounds_the_refined_solver(ex1):
    gen = solve_menu_general(ex1)
    for mode in ("directional", "two_point"):
        n = 15 if mode == "directional" else 7
        orc = brute_force_oracle(ex1, n, mode)
        assert orc.objective <= gen.objective + 1e-12
        assert check_feasibility(orc.menu, ex1).feasible
    assert gen.objective - brute_force_oracle(ex1, 15).objective <= 0.002


def test_oracle_refuses_large_grids(ex1):
    with pytest.raises(ValueError):
        brute_force_oracle(ex1, 21)


def test_oracle_single_type_collapse(symmetric):
    orc = brute_force_oracle(symmetric, 11)
    mh = solve_pure_mh(symmetric, 0)
    assert orc.objective <= mh.profit + 1e-12
    assert orc.objective >= mh.profit - 0.01


def test_solvers_are_deterministic(ex1):
    a = solve_menu_general(ex1, seed=3)
    b = solve_menu_general(ex1, seed=3)
    assert a.menu == b.menu and a.objective == b.objective


def test_ntype_quadratic_linear_equal_powers():
    env = build_environment((0.0, 1.0), LinearEffort(1.0),
                            [(0.3, PowerCost(2.0, 2.0)), (0.3, PowerCost(1.0, 2.0)),
                             (0.4, PowerCost(0.6, 2.0))])
    rep = solve_ntypes_fullrange(env)
    assert rep.menu.powers == pytest.approx((0.5, 0.5, 0.5), abs=1e-6)
    assert rep.regime == EQUAL_POWER


def test_pinned_payments_closed_form():
    # quadratic costs: m_i - m_{i+1} = (k_{i+1}^2 - k_i^2) / (4 beta_i)
    betas = (2.0, 1.0, 0.6)
    env = build_environment((0.0, 1.0), LinearEffort(1.0),
                            [(0.3, PowerCost(betas[0], 2.0)), (0.3, PowerCost(betas[1], 2.0)),
                             (0.4, PowerCost(betas[2], 2.0))])
    k = np.array([0.2, 0.5, 0.9])
    m = pinned_payments(env, k)
    expect = np.zeros(3)
    for i in (1, 0):
        expect[i] = expect[i + 1] + (k[i + 1] ** 2 - k[i] ** 2) / (4 * betas[i])
    np.testing.assert_allclose(m, expect, atol=1e-12)
    menu = Menu.build(env, [env.inv_dK(t, k[t]) for t in range(3)], m, [FULL] * 3)
    assert check_feasibility(menu, env).min_slack >= -1e-8
    with pytest.raises(ValueError):
        pinned_payments(env, k[::-1])


def test_convex_solver_beats_dense_grid_on_random_instance():
    env = build_environment((0.0, 1.0), PowerEffort(1.8),
                            [(0.4, PowerCost(1.4, 2.6)), (0.6, PowerCost(0.9, 3.1))])
    rep = solve_menu_convex_effort(env)
    # directional menus on a grid; theta is concave so each truncated
    # envelope equals theta at the recommended effort
    g = np.linspace(0.0, env.c_hi, 401)
    A0, A1 = np.meshgrid(g, g, indexing="ij")
    keep = A0 <= A1
    a0, a1 = A0[keep], A1[keep]
    m0, m1 = minimal_payments_binary(env, a0, a1, 0.0, a0, a1, env.c_hi)
    p0, p1 = env.probs
    val = (p0 * (env.theta(a0) - env.dK(0, a0) * a0 - m0)
           + p1 * (env.theta(a1) - env.dK(1, a1) * a1 - m1))
    best = np.nanmax(val)
    assert rep.objective >= best - 1e-12
    assert rep.objective - best <= 1e-4
