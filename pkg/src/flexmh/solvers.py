"""Benchmarks, optimal menus and the brute-force oracle."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .contracts import DesignContract, design_contract
from .exceptions import AssumptionError, PropertyViolation
from .funcspace import (
    PiecewiseLinearEffort,
    PiecewiseLinearFn,
    bisect_increasing,
    integral_of_inverse_derivative,
)
from .menus import (
    BINDING_TOL,
    Menu,
    check_feasibility,
    menu_objective,
    minimal_payments,
    minimal_payments_binary,
    powers_equal,
)
from .model import (
    FULL,
    Environment,
    Interval,
    OutputDistribution,
    Points,
    RangeEnvelopes,
    check_assumptions,
    distribution_attaining,
    is_full,
    restricted_value,
    single_peak_violations,
)

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
TIE_TOL = 1e-9
EQUAL_POWER = "EqualPower"
SCREENING = "Screening"


# ---------------------------------------------------------------------------
# 1-d helpers


def golden_section_max(f: Callable[[float], float], a: float, b: float,
                       tol: float = 1e-12, max_iter: int = 300) -> tuple[float, float]:
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if abs(b - a) <= tol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    cands = [(f(a), -a, a), (fc, -c, c), (fd, -d, d), (f(b), -b, b)]
    best = max(cands)
    return best[2], best[0]


def _grid_then_golden(f_vec, f, lo: float, hi: float, n: int = 2001,
                      tol: float = 1e-13) -> tuple[float, float]:
    grid = np.linspace(lo, hi, n)
    vals = np.asarray(f_vec(grid), dtype=float)
    i = int(np.argmax(vals))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, n - 1)]
    x, fx = golden_section_max(f, a, b, tol)
    if vals[i] > fx:
        return float(grid[i]), float(vals[i])
    return float(x), float(fx)


def _maximize_on_pieces(Theta: PiecewiseLinearFn, g: Callable, dg: Callable,
                        lo: float, hi: float) -> float:
    """argmax of Theta - g on [lo, hi]: on each linear piece of Theta the
    stationary point solves g'(a) = slope, found by bisection."""
    xs = Theta.x
    knots = [lo] + [float(v) for v in xs if lo < v < hi] + [hi]
    cands = set(knots)
    for a, b in zip(knots[:-1], knots[1:]):
        if b <= a:
            continue
        slope = (Theta(b) - Theta(a)) / (b - a)
        ha, hb = slope - dg(a), slope - dg(b)
        if ha > 0 > hb:
            x, y = a, b
            for _ in range(200):
                mid = 0.5 * (x + y)
                if mid <= x or mid >= y:
                    break
                if slope - dg(mid) > 0:
                    x = mid
                else:
                    y = mid
            cands.add(0.5 * (x + y))
    vals = [(Theta(c) - g(c), -c) for c in sorted(cands)]
    return -max(vals)[1]


# ---------------------------------------------------------------------------
# benchmarks


@dataclass(frozen=True)
class MHSolution:
    alpha: float
    profit: float
    contract: DesignContract
    distribution: OutputDistribution
    single_peaked: bool


@dataclass(frozen=True)
class FBSolution:
    alpha: float
    surplus: float


def _benchmark(env: Environment, g, dg) -> tuple[float, bool]:
    grid = np.union1d(env.alpha_grid, env.Theta.x)
    grid = grid[(grid >= 0) & (grid <= env.c_hi)]
    vals = env.Theta(grid) - g(grid)
    peaked = single_peak_violations(vals) == 0
    i = int(np.argmax(vals))
    if not peaked:
        return float(grid[i]), False
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    return float(_maximize_on_pieces(env.Theta, g, dg, float(lo), float(hi))), True


def solve_pure_mh(env: Environment, t: int) -> MHSolution:
    """Profit-maximising effort when the type is observable."""
    K = env.cost(t)
    g = lambda a: K.derivative(a) * a
    dg = lambda a: K.derivative(a) + K.second_derivative(a) * a
    alpha, peaked = _benchmark(env, g, dg)
    s = design_contract(env, t, alpha, 0.0, FULL)
    profit = env.Theta(alpha) - s.kappa * alpha
    return MHSolution(alpha, float(profit), s, distribution_attaining(env, alpha, FULL), peaked)


def solve_first_best(env: Environment, t: int) -> FBSolution:
    """Surplus-maximising effort."""
    K = env.cost(t)
    alpha, _ = _benchmark(env, K, K.derivative)
    return FBSolution(alpha, float(env.Theta(alpha) - env.K(t, alpha)))


def benchmarks(env: Environment) -> tuple[tuple[float, ...], tuple[float, ...]]:
    mh = tuple(solve_pure_mh(env, t).alpha for t in range(env.n_types))
    fb = tuple(solve_first_best(env, t).alpha for t in range(env.n_types))
    return mh, fb


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class SolveReport:
    menu: Menu
    objective: float
    alpha_mh: tuple[float, ...]
    alpha_fb: tuple[float, ...]
    regime: str
    binding: dict
    trace: dict
    method: str
    warnings: tuple[str, ...] = field(default=())

    @property
    def alphas(self) -> tuple[float, ...]:
        return self.menu.alphas

    @property
    def payments(self) -> tuple[float, ...]:
        return self.menu.payments


def make_report(env: Environment, menu: Menu, method: str, trace: dict,
                warnings: Sequence[str] = (), check: bool = True) -> SolveReport:
    feas = check_feasibility(menu, env)
    if check and not feas.feasible:
        raise PropertyViolation(
            f"{method} produced an infeasible menu (min IC slack {feas.min_slack:.3e})")
    mh, fb = benchmarks(env)
    binding = {
        "ll": tuple(bool(m <= BINDING_TOL) for m in menu.payments),
        "ic": tuple(feas.binding),
    }
    regime = EQUAL_POWER if powers_equal(menu) else SCREENING
    return SolveReport(menu, menu_objective(menu, env), mh, fb, regime, binding,
                       dict(trace), method, tuple(warnings))


def _require_binary(env: Environment):
    if env.n_types != 2:
        raise AssumptionError("this solver handles exactly two types")


def _require(env: Environment, names: Sequence[str]):
    rep = check_assumptions(env)
    bad = [n for n in names if not rep[n].holds]
    if bad:
        raise AssumptionError(f"assumptions violated: {', '.join(bad)}")


# ---------------------------------------------------------------------------
# pattern search


def pattern_search(f_batch: Callable[[np.ndarray], np.ndarray], x0, lower, upper,
                   step: float, tol: float, seed: int = 0, n_random: int = 8,
                   max_polls: int = 20000) -> tuple[np.ndarray, float, int]:
    """Compass search with extra random directions, maximising f_batch.

    f_batch maps an (n, d) array of points to n values. A move is accepted
    only on a strict improvement; otherwise the step halves.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    x = np.clip(np.asarray(x0, dtype=float), lower, upper)
    d = x.size
    fx = float(f_batch(x[None, :])[0])
    rng = np.random.default_rng(seed)
    eye = np.eye(d)
    polls = 0
    while step > tol and polls < max_polls:
        polls += 1
        rand = rng.normal(size=(n_random, d))
        rand /= np.linalg.norm(rand, axis=1, keepdims=True)
        dirs = np.vstack([eye, -eye, rand, -rand])
        trials = np.clip(x + step * dirs, lower, upper)
        vals = np.asarray(f_batch(trials), dtype=float)
        j = int(np.argmax(vals))
        if vals[j] > fx + 1e-15 * max(1.0, abs(fx)):
            x, fx = trials[j], float(vals[j])
        else:
            step *= 0.5
    return x, fx, polls


# ---------------------------------------------------------------------------
# equal power


def _power_interval(env: Environment) -> tuple[float, float]:
    lo = max(env.dK(t, 0.0) for t in range(env.n_types))
    hi = min(env.dK(t, env.c_hi) for t in range(env.n_types))
    return float(lo), float(hi)


def _equal_power_objective(env: Environment, kappa):
    kappa = np.asarray(kappa, dtype=float)
    total = np.zeros_like(kappa)
    for t, p in enumerate(env.probs):
        a = env.inv_dK(t, kappa)
        total = total + p * (env.Theta(a) - kappa * a)
    return total


def equal_power_optimum(env: Environment, grid: int = 2001) -> tuple[float, float]:
    lo, hi = _power_interval(env)
    if hi < lo:
        raise AssumptionError("no common contract power is attainable by every type")
    if hi == lo:
        return lo, float(_equal_power_objective(env, lo))
    f = lambda k: float(_equal_power_objective(env, k))
    return _grid_then_golden(lambda k: _equal_power_objective(env, k), f, lo, hi, grid)


def solve_menu_equal_power(env: Environment, grid: int = 2001) -> SolveReport:
    """Best single full-range contract."""
    kappa, _ = equal_power_optimum(env, grid)
    alphas = [env.inv_dK(t, kappa) for t in range(env.n_types)]
    menu = Menu.build(env, alphas, [0.0] * env.n_types, [FULL] * env.n_types)
    return make_report(env, menu, "equal_power", {"kappa_grid": grid, "kappa": kappa})


# ---------------------------------------------------------------------------
# convex effort: reduced two-variable problem


def reduced_objective(env: Environment, a0, a1):
    """Objective of the convex-effort reduced problem and the implied m1."""
    K0, K1 = env.cost(0), env.cost(1)
    p0, p1 = env.probs
    a0 = np.asarray(a0, dtype=float)
    a1 = np.asarray(a1, dtype=float)
    k0, k1 = K0.derivative(a0), K1.derivative(a1)
    m1 = np.maximum(0.0, (k0 * a0 - K1(a0)) - (k1 * a1 - K1(a1)))
    val = p0 * (env.Theta(a0) - k0 * a0) + p1 * (env.Theta(a1) - k1 * a1 - m1)
    feas = (a0 <= a1 + 1e-12) & (k0 >= k1 - 1e-12 * np.maximum(1.0, np.abs(k0)))
    return np.where(feas, val, -np.inf), m1


def _kink_partner(env: Environment, a0):
    """a1 on the curve where m1 switches on; nan when it does not exist."""
    K0, K1 = env.cost(0), env.cost(1)
    a0 = np.asarray(a0, dtype=float)
    target = K0.derivative(a0) * a0 - K1(a0)
    G1 = lambda a: K1.derivative(a) * a - K1(a)
    top = float(G1(env.c_hi))
    a1 = bisect_increasing(G1, target, 0.0, env.c_hi, iters=100)
    return np.where(target <= top, a1, np.nan)


def convex_effort_candidates(env: Environment, grid: int = 400, tol: float = 1e-8,
                             seed: int = 0) -> list[tuple[float, float, float, str]]:
    c_hi = env.c_hi
    cands = []
    # coarse grid and local refinement
    g = np.linspace(0.0, c_hi, grid + 1)
    A0, A1 = np.meshgrid(g, g, indexing="ij")
    vals, _ = reduced_objective(env, A0, A1)
    i, j = np.unravel_index(int(np.argmax(vals)), vals.shape)
    f2 = lambda z: reduced_objective(env, z[:, 0], z[:, 1])[0]
    x, fx, _ = pattern_search(f2, [g[i], g[j]], [0, 0], [c_hi, c_hi],
                              step=c_hi / grid, tol=tol * c_hi, seed=seed)
    cands.append((fx, float(x[0]), float(x[1]), "grid"))

    # along the m1 kink
    part = _kink_partner(env, g)
    kv, _ = reduced_objective(env, g, np.where(np.isnan(part), 0.0, part))
    kv = np.where(np.isnan(part), -np.inf, kv)
    if np.isfinite(kv).any():
        i = int(np.argmax(kv))
        lo, hi = g[max(i - 1, 0)], g[min(i + 1, g.size - 1)]

        def on_kink(a):
            b = float(_kink_partner(env, a))
            return -np.inf if np.isnan(b) else float(reduced_objective(env, a, b)[0])

        a0, fk = golden_section_max(on_kink, lo, hi, tol=1e-14)
        if fk < kv[i]:
            a0, fk = float(g[i]), float(kv[i])
        cands.append((fk, a0, float(_kink_partner(env, a0)), "kink"))

    # stationary points off the kink: with m1 slack the efforts are the pure
    # moral-hazard ones; with m1 positive the high type's effort is first best
    mh0, mh1 = solve_pure_mh(env, 0).alpha, solve_pure_mh(env, 1).alpha
    cands.append((float(reduced_objective(env, mh0, mh1)[0]), mh0, mh1, "mh"))
    fb1 = solve_first_best(env, 1).alpha
    gv, _ = reduced_objective(env, g, fb1)
    if np.isfinite(gv).any():
        i = int(np.argmax(gv))
        lo, hi = g[max(i - 1, 0)], g[min(i + 1, g.size - 1)]
        a0, fv = golden_section_max(lambda a: float(reduced_objective(env, a, fb1)[0]),
                                    lo, hi, tol=1e-14)
        if fv < gv[i]:
            a0, fv = float(g[i]), float(gv[i])
        cands.append((fv, a0, fb1, "fb_high"))

    # along equal powers (absent when no common power is attainable)
    try:
        kappa, _ = equal_power_optimum(env)
    except AssumptionError:
        return cands
    a0, a1 = env.inv_dK(0, kappa), env.inv_dK(1, kappa)
    fe = float(reduced_objective(env, a0, a1)[0])
    if not np.isfinite(fe):  # rounding on the boundary; the value itself is valid
        fe = float(env.probs[0] * (env.Theta(a0) - kappa * a0)
                   + env.probs[1] * (env.Theta(a1) - kappa * a1))
    cands.append((fe, a0, a1, "equal"))
    return cands


_PRIORITY = ("equal", "mh", "fb_high", "kink", "reduced", "from_equal", "extra", "grid")


def _pick(cands):
    """Largest objective; ties within TIE_TOL go to equal power, then to the
    analytically located candidates, then to the searched ones."""
    best = max(c[0] for c in cands)
    close = [c for c in cands if c[0] >= best - TIE_TOL]
    return min(close, key=lambda c: (_PRIORITY.index(c[-1]), tuple(c[1:-1])))


def solve_menu_convex_effort(env: Environment, grid: int = 400, tol: float = 1e-8,
                             seed: int = 0) -> SolveReport:
    """Optimal two-type menu when the effort function is convex."""
    _require_binary(env)
    if not env.theta_is_concave():
        raise AssumptionError("effort function is not convex (theta differs from its envelope)")
    _require(env, ["A1"])
    cands = convex_effort_candidates(env, grid, tol, seed)
    obj, a0, a1, tag = _pick(cands)
    trace = {"grid": [grid, grid], "refine_tol": tol,
             "candidates": {c[-1]: c[0] for c in cands}, "chosen": tag}
    if tag == "equal" or abs(env.dK(0, a0) - env.dK(1, a1)) <= TIE_TOL * max(1.0, env.dK(0, a0)):
        if tag != "equal":
            kappa = env.dK(0, a0)
            a1 = env.inv_dK(1, kappa)
        menu = Menu.build(env, [a0, a1], [0.0, 0.0], [FULL, FULL])
        return make_report(env, menu, "convex_effort", trace)
    m1 = float(reduced_objective(env, a0, a1)[1])
    ranges = [Points((float(env.theta(a0)),)), Points((float(env.theta(a1)),))]
    menu = Menu.build(env, [a0, a1], [0.0, m1], ranges)
    return make_report(env, menu, "convex_effort", trace)


# ---------------------------------------------------------------------------
# general effort: search over efforts and directional truncations


class _GeneralProblem:
    """Objective over z = (a0, a1, d0, d1) with r0_hi = a0 + d0, r1_lo = a1 - d1."""

    def __init__(self, env: Environment):
        self.env = env
        self.env_r = RangeEnvelopes(env)
        self.p0, self.p1 = env.probs
        self.K0, self.K1 = env.cost(0), env.cost(1)

    def unpack(self, z):
        z = np.atleast_2d(np.asarray(z, dtype=float))
        c_hi = self.env.c_hi
        a0 = np.clip(z[:, 0], 0.0, c_hi)
        a1 = np.clip(z[:, 1], 0.0, c_hi)
        r0 = np.minimum(a0 + np.maximum(z[:, 2], 0.0), c_hi)
        r1 = np.maximum(a1 - np.maximum(z[:, 3], 0.0), 0.0)
        return a0, a1, r0, r1

    def evaluate(self, a0, a1, r0, r1, th0=None, th1=None):
        env = self.env
        m0, m1 = minimal_payments_binary(env, a0, a1, 0.0, r0, r1, env.c_hi)
        if th0 is None:
            th0 = np.array([self.env_r.prefix(a, r) for a, r in zip(a0, r0)])
            th1 = np.array([self.env_r.suffix(a, r) for a, r in zip(a1, r1)])
        k0 = self.K0.derivative(a0)
        k1 = self.K1.derivative(a1)
        val = self.p0 * (th0 - k0 * a0 - m0) + self.p1 * (th1 - k1 * a1 - m1)
        return np.where(np.isnan(val), -np.inf, val)

    def __call__(self, z):
        return self.evaluate(*self.unpack(z))


def solve_menu_general(env: Environment, grid: int = 40, tol: float = 1e-8, seed: int = 0,
                       top: int = 4, extra_seeds: Sequence[Sequence[float]] = ()) -> SolveReport:
    """Optimal two-type menu for any effort function.

    Searches efforts and directional range truncations: a coarse grid, then
    pattern search from the best grid points and from structured seeds
    (the best single full-range contract and, for convex effort, the
    reduced-problem optimum).
    """
    _require_binary(env)
    _require(env, ["A1", "A2"])
    prob = _GeneralProblem(env)
    c_hi = env.c_hi
    g = np.linspace(0.0, c_hi, grid)

    # restricted-envelope tables on the grid
    P = np.full((grid, grid), np.nan)  # [r0 index, a0 index]
    S = np.full((grid, grid), np.nan)  # [r1 index, a1 index]
    for j in range(grid):
        for i in range(j + 1):
            P[j, i] = prob.env_r.prefix(g[i], g[j])
        for i in range(j, grid):
            S[j, i] = prob.env_r.suffix(g[i], g[j])

    i0, j0, i1, k1 = np.meshgrid(np.arange(grid), np.arange(grid), np.arange(grid),
                                 np.arange(grid), indexing="ij", sparse=True)
    mask = (i0 <= j0) & (k1 <= i1) & (i0 <= i1)
    I0, J0, I1, K1 = (np.broadcast_to(v, mask.shape)[mask] for v in (i0, j0, i1, k1))
    vals = prob.evaluate(g[I0], g[I1], g[J0], g[K1], P[J0, I0], S[K1, I1])
    order = np.lexsort((-g[K1], g[J0], g[I1], g[I0], -vals))

    starts = []
    seen = set()
    for idx in order:
        if len(starts) >= top or not np.isfinite(vals[idx]):
            break
        key = (int(I0[idx]), int(I1[idx]))
        if key in seen:
            continue
        seen.add(key)
        a0, a1 = g[I0[idx]], g[I1[idx]]
        starts.append(("grid", [a0, a1, g[J0[idx]] - a0, a1 - g[K1[idx]]]))

    try:
        eq = solve_menu_equal_power(env)
    except AssumptionError:
        eq = None
    if eq is not None:
        ea0, ea1 = eq.menu.alphas
        starts.append(("from_equal", [ea0, ea1, c_hi - ea0, ea1]))
    if env.theta_is_concave():
        cands = convex_effort_candidates(env, seed=seed)
        _, ra0, ra1, _ = _pick(cands)
        starts.append(("reduced", [ra0, ra1, 0.0, 0.0]))
    for z in extra_seeds:
        starts.append(("extra", list(z)))

    lower = np.zeros(4)
    upper = np.full(4, c_hi)
    results = []
    polls_total = 0
    for k, (tag, z0) in enumerate(starts):
        z, fz, polls = pattern_search(prob, z0, lower, upper, step=c_hi / max(grid - 1, 1),
                                      tol=tol * c_hi, seed=seed + k)
        polls_total += polls
        results.append((fz, *prob.unpack(z)[0:4], tag))
    results = [(float(r[0]), float(r[1][0]), float(r[2][0]), float(r[3][0]), float(r[4][0]), r[5])
               for r in results]
    if eq is not None:
        results.append((eq.objective, ea0, ea1, c_hi, 0.0, "equal"))

    best = _pick(results)
    trace = {"grid": [grid] * 4, "refine_tol": tol, "starts": len(starts),
             "polls": polls_total, "chosen": best[-1]}
    if best[-1] == "equal":
        return make_report(env, eq.menu, "general", trace)
    _, a0, a1, r0, r1, _ = best
    ranges = [_directional(env, 0.0, r0), _directional(env, r1, c_hi)]
    pay = minimal_payments(env, [a0, a1], ranges)
    if pay is None:
        raise PropertyViolation("refined general optimum lost feasibility")
    menu = Menu.build(env, [a0, a1], pay, ranges)
    if powers_equal(menu):
        full = Menu.build(env, [a0, a1], [0.0, 0.0], [FULL, FULL])
        if check_feasibility(full, env).feasible and menu_objective(full, env) >= menu_objective(menu, env) - 1e-12:
            menu = full
    return make_report(env, menu, "general", trace)


def _directional(env: Environment, r_lo: float, r_hi: float):
    lo = env.x_lo if r_lo <= 0.0 else float(env.theta(r_lo))
    hi = env.x_hi if r_hi >= env.c_hi else float(env.theta(r_hi))
    rng = Interval(lo, max(hi, lo))
    return FULL if is_full(env, rng, 0.0) else rng


# ---------------------------------------------------------------------------
# convexification


def convexified_environment(env: Environment) -> Environment:
    """Same instance with the effort function replaced by the inverse of Theta."""
    Th = env.Theta
    effort = PiecewiseLinearEffort(tuple(float(v) for v in Th.y), tuple(float(v) for v in Th.x))
    return env.with_effort(effort)


def solve_menu_via_convexification(env: Environment, grid: int = 400, tol: float = 1e-8,
                                   seed: int = 0) -> SolveReport | None:
    """Single full-range menu obtained from the convexified instance, or None
    when that instance's optimum screens with different powers."""
    _require_binary(env)
    env_c = convexified_environment(env)
    rep = solve_menu_convex_effort(env_c, grid, tol, seed)
    if rep.regime != EQUAL_POWER:
        return None
    menu = Menu.build(env, rep.menu.alphas, rep.menu.payments, [FULL] * env.n_types)
    trace = dict(rep.trace)
    trace["convexified_objective"] = rep.objective
    return make_report(env, menu, "convexified", trace)


# ---------------------------------------------------------------------------
# N types, full ranges


def _G(env: Environment, t: int, kappa: float) -> float:
    a = env.inv_dK(t, kappa)
    return kappa * a - env.K(t, a)


def ntype_objective(env: Environment, kappas: Sequence[float]) -> float:
    n = env.n_types
    k = np.asarray(kappas, dtype=float)
    if np.any(np.diff(k) < -1e-15):
        return -np.inf
    m = np.zeros(n)
    for i in range(n - 2, -1, -1):
        m[i] = m[i + 1] + _G(env, i, k[i + 1]) - _G(env, i, k[i])
    total = 0.0
    for t, p in enumerate(env.probs):
        a = env.inv_dK(t, k[t])
        total += p * (env.Theta(a) - k[t] * a - m[t])
    return float(total)


def pinned_payments(env: Environment, kappas: Sequence[float]) -> np.ndarray:
    """Constants for full-range contracts with nondecreasing powers: the
    highest type gets zero and m_i - m_{i+1} integrates (K_i')^{-1} over
    [kappa_i, kappa_{i+1}]."""
    k = np.asarray(kappas, dtype=float)
    if np.any(np.diff(k) < 0):
        raise ValueError("powers must be nondecreasing in the type index")
    n = k.size
    m = np.zeros(n)
    for i in range(n - 2, -1, -1):
        lo, hi = k[i], k[i + 1]
        m[i] = m[i + 1] + (integral_of_inverse_derivative(env.cost(i), lo, hi, env.c_hi)
                           if hi > lo else 0.0)
    return m


def solve_ntypes_fullrange(env: Environment, grid: int = 201, tol: float = 1e-13,
                           max_sweeps: int = 200) -> SolveReport:
    """Best menu of full-range contracts with ordered powers."""
    _require(env, ["NT1", "NT2"])
    n = env.n_types
    k_lo, k_hi = _power_interval(env)
    f = lambda k: ntype_objective(env, k)

    def improve(k: np.ndarray) -> np.ndarray:
        fk = f(k)
        for _ in range(max_sweeps):
            before = fk
            # single coordinates, then contiguous blocks moving together
            for i, j in [(i, i) for i in range(n)] + [(i, j) for i in range(n)
                                                       for j in range(i + 1, n)]:
                lo = k[i - 1] if i > 0 else k_lo
                hi = k[j + 1] if j < n - 1 else k_hi
                if hi <= lo:
                    continue

                def h(v, i=i, j=j):
                    trial = k.copy()
                    trial[i:j + 1] = v
                    return f(trial)

                v, fv = _grid_then_golden(lambda vs: np.array([h(x) for x in vs]), h,
                                          lo, hi, grid)
                if fv > fk:
                    k[i:j + 1] = v
                    fk = fv
            if fk - before <= tol * max(1.0, abs(fk)):
                break
        return k

    starts = []
    kappa_eq, _ = equal_power_optimum(env)
    starts.append(np.full(n, kappa_eq))
    mh = [solve_pure_mh(env, t) for t in range(n)]
    starts.append(np.clip(np.maximum.accumulate([s.contract.kappa for s in mh]), k_lo, k_hi))
    results = []
    for s in starts:
        k = improve(np.array(s, dtype=float))
        results.append((f(k), tuple(k)))
    best_val = max(r[0] for r in results)
    pooled = [r for r in results if r[0] >= best_val - TIE_TOL and np.ptp(r[1]) <= TIE_TOL]
    kappas = np.array((pooled or sorted(results, key=lambda r: -r[0]))[0][1])

    m = pinned_payments(env, kappas)
    alphas = [env.inv_dK(t, kappas[t]) for t in range(n)]
    menu = Menu.build(env, alphas, m, [FULL] * n)
    return make_report(env, menu, "ntype_fullrange",
                       {"kappa_grid": grid, "starts": len(starts)})


# ---------------------------------------------------------------------------
# brute force


def brute_force_oracle(env: Environment, n: int = 15, mode: str = "directional") -> SolveReport:
    """Exhaustive search on a small grid (test oracle).

    mode "directional": efforts and directional truncation points on an
    n-point grid. mode "two_point": each type uses at most two outputs from
    an n-point output grid, with its range equal to that support.
    """
    _require_binary(env)
    if n > 20 or n < 2:
        raise ValueError("oracle grids must have between 2 and 20 points per dimension")
    if mode == "directional":
        best = _oracle_directional(env, n)
    elif mode == "two_point":
        best = _oracle_two_point(env, n)
    else:
        raise ValueError(f"unknown oracle mode {mode!r}")
    _, alphas, pay, ranges = best
    menu = Menu.build(env, alphas, pay, ranges)
    return make_report(env, menu, f"oracle_{mode}", {"grid": n})


def _oracle_directional(env: Environment, n: int):
    g = np.linspace(0.0, env.c_hi, n)
    low = [_directional(env, 0.0, g[j]) for j in range(n)]
    high = [_directional(env, g[k], env.c_hi) for k in range(n)]
    low_r = np.array([_effort_hi(env, r) for r in low])
    high_r = np.array([_effort_lo(env, r) for r in high])
    th_low = {(i, j): restricted_value(env, g[i], low[j]) for j in range(n) for i in range(j + 1)}
    th_high = {(i, k): restricted_value(env, g[i], high[k]) for k in range(n) for i in range(k, n)}
    p0, p1 = env.probs
    best = None
    for i0, i1 in itertools.product(range(n), range(n)):
        if i0 > i1:
            continue
        a0, a1 = g[i0], g[i1]
        k0, k1 = env.dK(0, a0), env.dK(1, a1)
        J, K = np.meshgrid(np.arange(i0, n), np.arange(0, i1 + 1), indexing="ij")
        J, K = J.ravel(), K.ravel()
        m0, m1 = minimal_payments_binary(env, a0, a1, 0.0, low_r[J], high_r[K], env.c_hi)
        for j, k, pay0, pay1 in zip(J, K, m0, m1):
            if np.isnan(pay0):
                continue
            th0, th1 = th_low[i0, j], th_high[i1, k]
            obj = p0 * (th0 - k0 * a0 - pay0) + p1 * (th1 - k1 * a1 - pay1)
            key = (obj, -a0, -a1, -g[j], g[k])
            if best is None or key > best[0]:
                best = (key, [a0, a1], (float(pay0), float(pay1)), [low[j], high[k]])
    if best is None:
        raise PropertyViolation("oracle found no feasible grid point")
    return best[0][0], best[1], best[2], best[3]


def _effort_hi(env: Environment, rng) -> float:
    return env.c_hi if is_full(env, rng) else float(env.c(rng.hi))


def _effort_lo(env: Environment, rng) -> float:
    return 0.0 if is_full(env, rng) else float(env.c(rng.lo))


def _oracle_two_point(env: Environment, n: int):
    xg = np.linspace(env.x_lo, env.x_hi, n)
    supports = [(a, b) for a in range(n) for b in range(a, n)]
    p0, p1 = env.probs
    per_type = []
    for lo, hi in supports:
        rng = Points((xg[lo], xg[hi]))
        e_lo, e_hi = env.c(xg[lo]), env.c(xg[hi])
        efforts = np.unique(np.linspace(e_lo, e_hi, n)) if hi > lo else np.array([e_lo])
        for a in efforts:
            per_type.append((float(a), rng))
    best = None
    for (a0, r0), (a1, r1) in itertools.product(per_type, per_type):
        if a0 > a1:
            continue
        pay = minimal_payments(env, [a0, a1], [r0, r1])
        if pay is None:
            continue
        obj = (p0 * (restricted_value(env, a0, r0) - env.dK(0, a0) * a0 - pay[0])
               + p1 * (restricted_value(env, a1, r1) - env.dK(1, a1) * a1 - pay[1]))
        key = (obj, -a0, -a1)
        if best is None or key > best[0]:
            best = (key, [a0, a1], pay, [r0, r1])
    if best is None:
        raise PropertyViolation("oracle found no feasible grid point")
    return best[0][0], best[1], best[2], best[3]
