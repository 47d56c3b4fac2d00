import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from flexmh.contracts import design_contract, misreport_value, truthful_payoff
from flexmh.menus import (
    Menu,
    check_feasibility,
    extend_directional,
    full_range_variant,
    is_single_full_range,
    maximal_range,
    menu_objective,
    minimal_payments,
    minimal_payments_binary,
    powers_equal,
)
from flexmh.model import FULL, Interval, singleton


def jacobi_payments(env, alphas, ranges, rounds=200000, tol=1e-13):
    """Plain fixed-point iteration from zero (slow but simple oracle)."""
    m = [0.0, 0.0]
    for _ in range(rounds):
        s = [design_contract(env, t, alphas[t], m[t], ranges[t]) for t in range(2)]
        new = []
        for t in range(2):
            u = truthful_payoff(design_contract(env, t, alphas[t], 0.0, ranges[t]), env)
            new.append(max(0.0, misreport_value(s[1 - t], t, env) - u))
        if max(abs(new[0] - m[0]), abs(new[1] - m[1])) < tol:
            return new
        if max(new) > 10:
            return None
        m = new
    return None


CASES = [
    ((0.2, 0.45), (singleton(0.2), singleton(0.45))),
    ((0.3, 0.35), (Interval(0.0, 0.3), Interval(0.35, 0.5))),
    ((0.1, 0.4), (FULL, FULL)),
    ((0.25, 0.25), (FULL, singleton(0.25))),
]


@pytest.mark.parametrize("alphas,ranges", CASES)
def test_minimal_payments_match_plain_iteration(ex1, alphas, ranges):
    fast = minimal_payments(ex1, alphas, ranges)
    slow = jacobi_payments(ex1, alphas, ranges)
    if slow is None:
        assert fast is None
    else:
        assert fast is not None
        np.testing.assert_allclose(fast, slow, atol=1e-9)
        menu = Menu.build(ex1, alphas, fast, ranges)
        assert check_feasibility(menu, ex1).feasible


@given(st.floats(0.0, 0.5), st.floats(0.0, 0.5), st.floats(0.0, 0.5), st.floats(0.0, 0.5))
def test_minimal_payments_are_minimal(ex1, a0, a1, d0, d1):
    if a0 > a1:
        a0, a1 = a1, a0
    r0 = Interval(0.0, min(a0 + d0, 0.5))
    r1 = Interval(max(a1 - d1, 0.0), 0.5)
    pay = minimal_payments(ex1, [a0, a1], [r0, r1])
    if pay is None:
        return
    menu = Menu.build(ex1, [a0, a1], pay, [r0, r1])
    assert check_feasibility(menu, ex1).feasible
    # lowering any positive payment breaks incentive compatibility
    for t in range(2):
        if pay[t] > 1e-6:
            lower = list(pay)
            lower[t] -= 1e-6
            assert not check_feasibility(menu.with_payments(ex1, lower), ex1).feasible


def test_binary_payments_vectorised(ex1):
    a0 = np.array([0.1, 0.2, 0.3])
    a1 = np.array([0.4, 0.45, 0.5])
    m0, m1 = minimal_payments_binary(ex1, a0, a1, 0.0, a0, a1, 0.5)
    for i in range(3):
        ref = minimal_payments(ex1, [a0[i], a1[i]],
                               [Interval(0.0, a0[i]), Interval(a1[i], 0.5)])
        np.testing.assert_allclose([m0[i], m1[i]], ref, atol=1e-12)


def test_infeasible_menu_is_flagged(ex1):
    # high type's contract given to the wrong effort ordering: type 0 copies it
    menu = Menu.build(ex1, [0.4, 0.1], [0.0, 0.0], [FULL, FULL])
    rep = check_feasibility(menu, ex1)
    assert not rep.feasible
    assert rep.min_slack < 0


def test_equal_power_menu_full_range(ex1):
    # K0'(a0) = K1'(a1): 2 a0 = 2 a1^2
    a1 = 0.44
    a0 = a1 ** 2
    menu = Menu.build(ex1, [a0, a1], [0.0, 0.0], [FULL, FULL])
    assert powers_equal(menu)
    assert check_feasibility(menu, ex1).feasible
    assert is_single_full_range(menu, ex1)
    assert maximal_range(menu, ex1, 0) == FULL


def test_maximal_range_of_screening_menu(ex1):
    a0, a1 = 0.23198973173625842, 0.42075092122604596
    menu = Menu.build(ex1, [a0, a1], [0.0, 0.0], [singleton(a0), singleton(a1)])
    assert check_feasibility(menu, ex1).feasible
    r0 = maximal_range(menu, ex1, 0)
    r1 = maximal_range(menu, ex1, 1)
    # the low type's range opens to the bottom only; the low type never
    # wants the high type's lower-powered contract, so that one opens fully
    assert r0.lo == 0.0 and r0.hi < 0.5
    assert r1 == FULL
    ext = extend_directional(menu, ex1)
    assert check_feasibility(ext, ex1).feasible
    assert menu_objective(ext, ex1) == pytest.approx(menu_objective(menu, ex1))
    # the full-range variant is infeasible since powers differ
    assert not check_feasibility(full_range_variant(menu, ex1), ex1).feasible
