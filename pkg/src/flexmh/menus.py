"""Menus of contracts: feasibility, minimal payments and range extensions."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .contracts import (
    DesignContract,
    best_response_arrays,
    design_contract,
    misreport_value,
    truthful_payoff,
)
from .exceptions import PropertyViolation
from .model import (
    FULL,
    Environment,
    FullRange,
    Interval,
    OutputDistribution,
    Points,
    Range,
    distribution_attaining,
    in_range,
    is_full,
    output_bounds,
)

IC_TOL = 1e-8
BINDING_TOL = 1e-6
POWER_TOL = 1e-9
PAYMENT_TOL = 1e-10
MAX_ROUNDS = 1000


@dataclass(frozen=True)
class Menu:
    contracts: tuple[DesignContract, ...]
    distributions: tuple[OutputDistribution, ...]

    def __post_init__(self):
        if len(self.contracts) != len(self.distributions):
            raise ValueError("one distribution per contract is required")
        for t, s in enumerate(self.contracts):
            if s.type_index != t:
                raise ValueError("contracts must be ordered by type")

    @classmethod
    def build(cls, env: Environment, alphas: Sequence[float], payments: Sequence[float],
              ranges: Sequence[Range]) -> "Menu":
        contracts = tuple(design_contract(env, t, a, m, r)
                          for t, (a, m, r) in enumerate(zip(alphas, payments, ranges)))
        dists = tuple(distribution_attaining(env, s.alpha, s.range) for s in contracts)
        return cls(contracts, dists)

    @property
    def alphas(self) -> tuple[float, ...]:
        return tuple(s.alpha for s in self.contracts)

    @property
    def powers(self) -> tuple[float, ...]:
        return tuple(s.kappa for s in self.contracts)

    @property
    def payments(self) -> tuple[float, ...]:
        return tuple(s.m for s in self.contracts)

    @property
    def ranges(self) -> tuple[Range, ...]:
        return tuple(s.range for s in self.contracts)

    def with_ranges(self, env: Environment, ranges: Sequence[Range]) -> "Menu":
        contracts = tuple(design_contract(env, s.type_index, s.alpha, s.m, r)
                          for s, r in zip(self.contracts, ranges))
        return Menu(contracts, self.distributions)

    def with_payments(self, env: Environment, payments: Sequence[float]) -> "Menu":
        contracts = tuple(replace(s, m=float(m)) for s, m in zip(self.contracts, payments))
        return Menu(contracts, self.distributions)


def menu_objective(menu: Menu, env: Environment) -> float:
    """Expected principal profit: output minus expected payment, per type."""
    total = 0.0
    for p, s, mu in zip(env.probs, menu.contracts, menu.distributions):
        total += p * (mu.mean_output - s.kappa * s.alpha - s.m)
    return float(total)


@dataclass(frozen=True)
class FeasibilityReport:
    mh_ok: tuple[bool, ...]
    ll_ok: tuple[bool, ...]
    ic_slack: np.ndarray  # [t, t'] = truthful(t) - value of t taking s_t'
    feasible: bool

    @property
    def min_slack(self) -> float:
        n = self.ic_slack.shape[0]
        off = self.ic_slack[~np.eye(n, dtype=bool)]
        return float(off.min())

    @property
    def binding(self) -> list[tuple[int, int]]:
        n = self.ic_slack.shape[0]
        return [(i, j) for i in range(n) for j in range(n)
                if i != j and abs(self.ic_slack[i, j]) <= BINDING_TOL]

    def recompute(self, tol: float = IC_TOL) -> bool:
        return bool(all(self.mh_ok) and all(self.ll_ok) and self.min_slack >= -tol)


def check_feasibility(menu: Menu, env: Environment) -> FeasibilityReport:
    n = len(menu.contracts)
    mh, ll = [], []
    for s, mu in zip(menu.contracts, menu.distributions):
        mean_ok = abs(mu.mean_effort(env) - s.alpha) <= 1e-9 * max(1.0, env.c_hi)
        supp_ok = all(bool(in_range(env, s.range, x, 1e-9)) for x in mu.support)
        mh.append(bool(mean_ok and supp_ok))
        ll.append(bool(s.m >= 0))
    slack = np.zeros((n, n))
    for t in range(n):
        u = truthful_payoff(menu.contracts[t], env)
        for j in range(n):
            if j != t:
                slack[t, j] = u - misreport_value(menu.contracts[j], t, env)
    slack.setflags(write=False)
    ok = bool(all(mh) and all(ll) and (n < 2 or slack[~np.eye(n, dtype=bool)].min() >= -IC_TOL))
    return FeasibilityReport(tuple(mh), tuple(ll), slack, ok)


def _payment_cap(env: Environment) -> float:
    return env.x_hi / min(env.probs)


def minimal_payments(env: Environment, alphas: Sequence[float],
                     ranges: Sequence[Range]) -> tuple[float, ...] | None:
    """Smallest non-negative constants making the menu incentive compatible.

    Monotone fixed point started from zero; None when it passes the payment
    cap or fails to settle. Two types use the accelerated scheme of
    minimal_payments_binary.
    """
    n = env.n_types
    base = [design_contract(env, t, alphas[t], 0.0, ranges[t]) for t in range(n)]
    if n == 2:
        s0, s1 = base
        m0, m1 = minimal_payments_binary(env, s0.alpha, s1.alpha, s0.r_lo, s0.r_hi,
                                         s1.r_lo, s1.r_hi)
        if np.isnan(m0):
            return None
        return float(m0), float(m1)
    u0 = np.array([truthful_payoff(s, env) for s in base])
    kap = np.array([s.kappa for s in base])
    rlo = np.array([s.r_lo for s in base])
    rhi = np.array([s.r_hi for s in base])
    cap = _payment_cap(env)
    m = np.zeros(n)
    for _ in range(MAX_ROUNDS):
        new = np.zeros(n)
        for t in range(n):
            others = [j for j in range(n) if j != t]
            _, v = best_response_arrays(kap[others], m[others], rlo[others], rhi[others],
                                        env.c_hi, env.cost(t))
            new[t] = max(0.0, float(np.max(v)) - u0[t])
        if np.any(new > cap):
            return None
        done = np.max(np.abs(new - m)) < PAYMENT_TOL
        m = new
        if done:
            return tuple(float(v) for v in m)
    return None


def minimal_payments_binary(env: Environment, a0, a1, r0_lo, r0_hi, r1_lo, r1_hi):
    """Vectorised two-type minimal payments; infeasible entries come back as nan.

    With m0 = f0(m1) and m1 = f1(m0), the composite phi = f1(f0(.)) is convex,
    non-decreasing and has slope at most 1 (each best-response value is a
    maximum of functions affine in the constant with weight in [0, 1]).
    The least fixed point of phi is reached from zero by secant steps, which
    never overshoot a root of the convex phi(m) - m; a secant slope of 1 or
    more proves there is no fixed point.
    """
    K0, K1 = env.cost(0), env.cost(1)
    a0, a1, r0_lo, r0_hi, r1_lo, r1_hi = (np.array(v, dtype=float) for v in np.broadcast_arrays(
        *(np.asarray(v, dtype=float) for v in (a0, a1, r0_lo, r0_hi, r1_lo, r1_hi))))
    shape = a0.shape
    a0, a1, r0_lo, r0_hi, r1_lo, r1_hi = (v.reshape(-1) for v in (a0, a1, r0_lo, r0_hi,
                                                                  r1_lo, r1_hi))
    k0 = K0.derivative(a0)
    k1 = K1.derivative(a1)
    u0 = k0 * a0 - K0(a0)
    u1 = k1 * a1 - K1(a1)
    cap = _payment_cap(env)

    def f0(m1, idx):
        _, v = best_response_arrays(k1[idx], m1, r1_lo[idx], r1_hi[idx], env.c_hi, K0)
        return np.maximum(0.0, v - u0[idx])

    def f1(m0, idx):
        _, v = best_response_arrays(k0[idx], m0, r0_lo[idx], r0_hi[idx], env.c_hi, K1)
        return np.maximum(0.0, v - u1[idx])

    size = a0.size
    everything = np.arange(size)
    x = np.zeros(size)                       # current iterate for m1
    fx = f1(f0(x, everything), everything)   # phi(x)
    m1 = np.full(size, np.nan)
    done = np.abs(fx - x) < PAYMENT_TOL
    m1[done] = x[done]
    active = np.nonzero(~done)[0]
    # first plain step, then secant steps
    xp, fxp = x[active], fx[active]
    xc = fxp.copy()
    for _ in range(MAX_ROUNDS):
        if active.size == 0:
            break
        fc = f1(f0(xc, active), active)
        conv = np.abs(fc - xc) < PAYMENT_TOL
        dx = xc - xp
        with np.errstate(divide="ignore", invalid="ignore"):
            slope = np.where(dx > 0, (fc - fxp) / dx, 0.0)
        diverge = ~conv & (slope >= 1.0 - 1e-12) & (fc > xc)
        over = ~conv & (xc > cap)
        m1[active[conv]] = np.maximum(xc[conv], fc[conv])
        keep = ~(conv | diverge | over)
        gap = fc - xc
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(slope < 1.0 - 1e-12, gap / (1.0 - slope), gap)
        xn = xc + np.maximum(step, gap)
        active, xp, fxp, xc = active[keep], xc[keep], fc[keep], xn[keep]
    m1 = np.where(m1 > cap, np.nan, m1)
    ok = ~np.isnan(m1)
    m0 = np.full(size, np.nan)
    if ok.any():
        idx = np.nonzero(ok)[0]
        m0[idx] = f0(m1[idx], idx)
    m0 = np.where(m0 > cap, np.nan, m0)
    m1 = np.where(np.isnan(m0), np.nan, m1)
    return m0.reshape(shape), m1.reshape(shape)


def _as_interval(env: Environment, rng: Range) -> tuple[float, float]:
    return output_bounds(env, rng)


def _normalise(env: Environment, lo: float, hi: float) -> Range:
    rng = Interval(lo, hi)
    return FULL if is_full(env, rng, 0.0) else rng


def maximal_range(menu: Menu, env: Environment, t: int, tol: float = 1e-8) -> Range:
    """Widest interval around the range of contract t keeping every other
    type's incentive constraint against it intact."""
    if not check_feasibility(menu, env).feasible:
        raise ValueError("maximal range needs a feasible menu")
    s = menu.contracts[t]
    others = [j for j in range(env.n_types) if j != t]
    bar = {j: truthful_payoff(menu.contracts[j], env) + 1e-9 for j in others}

    def ok(lo: float, hi: float) -> bool:
        trial = design_contract(env, t, s.alpha, s.m, _normalise(env, lo, hi))
        return all(misreport_value(trial, j, env) <= bar[j] for j in others)

    lo, hi = _as_interval(env, s.range)
    if not ok(lo, hi):
        # a point set may be dominated by its hull; keep the original range
        return s.range
    if ok(env.x_lo, hi):
        new_lo = env.x_lo
    else:
        a, b = env.x_lo, lo  # a infeasible, b feasible
        while b - a > tol:
            mid = 0.5 * (a + b)
            if ok(mid, hi):
                b = mid
            else:
                a = mid
        new_lo = b
    if ok(new_lo, env.x_hi):
        new_hi = env.x_hi
    else:
        a, b = hi, env.x_hi  # a feasible, b infeasible
        while b - a > tol:
            mid = 0.5 * (a + b)
            if ok(new_lo, mid):
                a = mid
            else:
                b = mid
        new_hi = a
    return _normalise(env, new_lo, new_hi)


def extend_directional(menu: Menu, env: Environment) -> Menu:
    """Open the lowest type's range to the bottom and the highest type's to the top."""
    if not check_feasibility(menu, env).feasible:
        raise ValueError("directional extension needs a feasible menu")
    ranges = list(menu.ranges)
    lo_hi = _as_interval(env, ranges[0])[1]
    hi_lo = _as_interval(env, ranges[-1])[0]
    ranges[0] = _normalise(env, env.x_lo, lo_hi)
    ranges[-1] = _normalise(env, hi_lo, env.x_hi)
    out = menu.with_ranges(env, ranges)
    rep = check_feasibility(out, env)
    if not rep.feasible:
        raise PropertyViolation(
            f"directional extension broke feasibility (min slack {rep.min_slack:.3e})")
    return out


def powers_equal(menu: Menu, tol: float = POWER_TOL) -> bool:
    k = np.asarray(menu.powers)
    return bool(np.max(k) - np.min(k) <= tol * max(1.0, float(np.max(np.abs(k)))))


def is_single_full_range(menu: Menu, env: Environment) -> bool:
    m = np.asarray(menu.payments)
    return bool(powers_equal(menu)
                and all(is_full(env, s.range) for s in menu.contracts)
                and np.max(m) - np.min(m) <= POWER_TOL)


def full_range_variant(menu: Menu, env: Environment) -> Menu:
    """Same efforts and payments with every range opened to the full interval."""
    contracts = tuple(design_contract(env, s.type_index, s.alpha, s.m, FULL)
                      for s in menu.contracts)
    return Menu(contracts, menu.distributions)


__all__ = [
    "Menu", "FeasibilityReport", "check_feasibility", "minimal_payments",
    "minimal_payments_binary", "maximal_range", "extend_directional",
    "is_single_full_range", "powers_equal", "full_range_variant", "menu_objective",
    "FullRange", "Points",
]
