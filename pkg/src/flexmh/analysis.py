"""Regime classification, structural and welfare claims, path traces and
random instance families."""
from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .contracts import truthful_payoff
from .exceptions import AssumptionError
from .funcspace import LinearEffort, PolynomialCost, PowerCost, PiecewiseLinearEffort, \
    PowerEffort, ScaledCost
from .menus import check_feasibility, full_range_variant, is_single_full_range, powers_equal
from .model import Environment, build_environment, check_assumptions
from .solvers import (
    EQUAL_POWER,
    SCREENING,
    SolveReport,
    reduced_objective,
    solve_menu_convex_effort,
    solve_menu_equal_power,
    solve_pure_mh,
)

CLAIM_TOL = 1e-7
REGIME_TOL = 1e-9


@dataclass(frozen=True)
class Claim:
    id: str
    holds: bool
    margin: float

    @staticmethod
    def weak(cid: str, margin: float, tol: float = CLAIM_TOL) -> "Claim":
        return Claim(cid, bool(margin >= -tol), float(margin))


@dataclass(frozen=True)
class Regime:
    tag: str
    margin: float


def classify_regime(env: Environment) -> Regime:
    """EqualPower iff the low type's pure moral-hazard power does not exceed
    the high type's."""
    if env.n_types != 2:
        raise AssumptionError("regime classification is defined for two types")
    mh = [solve_pure_mh(env, t) for t in range(2)]
    margin = mh[1].contract.kappa - mh[0].contract.kappa
    tag = EQUAL_POWER if margin >= -REGIME_TOL else SCREENING
    return Regime(tag, float(margin))


def verify_structure(report: SolveReport, env: Environment) -> list[Claim]:
    menu = report.menu
    feas = check_feasibility(menu, env)
    claims = [Claim("feasible", feas.feasible, feas.min_slack)]
    full = check_feasibility(full_range_variant(menu, env), env)
    eq = powers_equal(menu)
    tag = "full_range_iff_equal_powers"
    claims.append(Claim(tag, bool(full.feasible == eq), full.min_slack))
    if env.n_types == 2:
        s0, s1 = menu.contracts
        claims.append(Claim.weak("efforts_ordered", s1.alpha - s0.alpha))
        implied = s0.m <= CLAIM_TOL or s1.m > 0
        claims.append(Claim("payment_implication", bool(implied), float(s1.m)))
        claims.append(Claim.weak("powers_ordered", s0.kappa - s1.kappa))
        claims.append(Claim.weak("payoffs_ordered",
                                 truthful_payoff(s1, env) - truthful_payoff(s0, env)))
    else:
        m = np.asarray(menu.payments)
        claims.append(Claim.weak("payments_ordered", float(np.min(-np.diff(m)))))
    return claims


# ---------------------------------------------------------------------------
# welfare


@dataclass(frozen=True)
class TypeWelfare:
    alpha_mh: float
    alpha_fb: float
    alpha: float
    distortion: float
    surplus: float
    surplus_mh: float
    agent_payoff: float
    agent_payoff_mh: float
    profit_share: float


@dataclass(frozen=True)
class WelfareReport:
    types: tuple[TypeWelfare, ...]
    condition: bool  # low type's pure moral-hazard power <= high type's
    claims: tuple[Claim, ...]

    @property
    def all_hold(self) -> bool:
        return all(c.holds for c in self.claims)


def welfare_report(env: Environment, report: SolveReport) -> WelfareReport:
    rows = []
    for t, (s, mu) in enumerate(zip(report.menu.contracts, report.menu.distributions)):
        a, a_mh, a_fb = s.alpha, report.alpha_mh[t], report.alpha_fb[t]
        k_mh = env.dK(t, a_mh)
        rows.append(TypeWelfare(
            alpha_mh=a_mh, alpha_fb=a_fb, alpha=a, distortion=a - a_mh,
            surplus=float(env.Theta(a) - env.K(t, a)),
            surplus_mh=float(env.Theta(a_mh) - env.K(t, a_mh)),
            agent_payoff=truthful_payoff(s, env),
            agent_payoff_mh=float(k_mh * a_mh - env.K(t, a_mh)),
            profit_share=float(env.probs[t] * (mu.mean_output - s.kappa * a - s.m)),
        ))
    if env.n_types != 2:
        return WelfareReport(tuple(rows), False, ())
    w0, w1 = rows
    cond = env.dK(0, w0.alpha_mh) <= env.dK(1, w1.alpha_mh) + REGIME_TOL
    W = Claim.weak
    claims = []
    if env.theta_is_concave():
        if cond:
            claims += [
                W("sandwich.low_mh_le_opt", w0.alpha - w0.alpha_mh),
                W("sandwich.low_opt_le_fb", w0.alpha_fb - w0.alpha),
                W("sandwich.high_opt_le_mh", w1.alpha_mh - w1.alpha),
                W("sandwich.high_mh_le_fb", w1.alpha_fb - w1.alpha_mh),
                W("surplus.low_weakly_higher", w0.surplus - w0.surplus_mh),
                W("surplus.high_weakly_lower", w1.surplus_mh - w1.surplus),
                W("payoff.low_weakly_higher", w0.agent_payoff - w0.agent_payoff_mh),
                W("payoff.high_weakly_lower", w1.agent_payoff_mh - w1.agent_payoff),
            ]
        else:
            claims += [
                W("sandwich.low_opt_le_mh", w0.alpha_mh - w0.alpha),
                W("sandwich.low_mh_le_fb", w0.alpha_fb - w0.alpha_mh),
                W("sandwich.high_mh_le_opt", w1.alpha - w1.alpha_mh),
                W("sandwich.high_opt_le_fb", w1.alpha_fb - w1.alpha),
                W("surplus.low_weakly_lower", w0.surplus_mh - w0.surplus),
                W("surplus.high_weakly_higher", w1.surplus - w1.surplus_mh),
                W("payoff.low_weakly_lower", w0.agent_payoff_mh - w0.agent_payoff),
                W("payoff.high_weakly_higher", w1.agent_payoff - w1.agent_payoff_mh),
            ]
    if is_single_full_range(report.menu, env):
        if cond:
            claims += [
                W("single.low_mh_le_opt", w0.alpha - w0.alpha_mh),
                W("single.low_opt_le_fb", w0.alpha_fb - w0.alpha),
                W("single.high_opt_le_mh", w1.alpha_mh - w1.alpha),
                W("single.high_mh_le_fb", w1.alpha_fb - w1.alpha_mh),
            ]
        else:
            claims += [
                W("single.low_opt_le_mh", w0.alpha_mh - w0.alpha),
                W("single.high_opt_ge_mh", w1.alpha - w1.alpha_mh),
            ]
    else:
        claims += [
            W("screening.low_opt_le_fb", w0.alpha_fb - w0.alpha),
            W("screening.high_opt_ge_mh", w1.alpha - w1.alpha_mh),
        ]
    return WelfareReport(tuple(rows), bool(cond), tuple(claims))


# ---------------------------------------------------------------------------
# path between the equal-power and the optimal menu


@dataclass(frozen=True)
class PathTrace:
    rows: tuple[tuple[float, float, float, float, float, float], ...]

    COLUMNS = ("lambda", "alpha0", "alpha1", "term0", "term1", "neg_m1")

    def column(self, name: str) -> np.ndarray:
        return np.array([r[self.COLUMNS.index(name)] for r in self.rows])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(self.COLUMNS) + "\n")
        for r in self.rows:
            buf.write(",".join(f"{v:.12g}" for v in r) + "\n")
        return buf.getvalue()


def screening_path_trace(env: Environment, steps: int = 101, lam_max: float = 1.0) -> PathTrace:
    """Profit terms and -m1 along the segment from the best single contract
    to the optimal screening menu (lambda = 0 and 1 respectively)."""
    if steps < 2:
        raise ValueError("a path needs at least two steps")
    if classify_regime(env).tag != SCREENING:
        raise AssumptionError("no screening path: the optimum uses equal powers")
    opt = solve_menu_convex_effort(env)
    eq = solve_menu_equal_power(env)
    start = np.array(eq.menu.alphas)
    end = np.array(opt.menu.alphas)
    rows = []
    for lam in np.linspace(0.0, lam_max, steps):
        a0, a1 = start + lam * (end - start)
        _, m1 = reduced_objective(env, a0, a1)
        t0 = float(env.Theta(a0) - env.dK(0, a0) * a0)
        t1 = float(env.Theta(a1) - env.dK(1, a1) * a1)
        rows.append((float(lam), float(a0), float(a1), t0, t1, 0.0 - float(m1)))
    return PathTrace(tuple(rows))


# ---------------------------------------------------------------------------
# random instances


COST_FAMILIES = ("scaled", "power", "mixed")


def _random_costs(rng: np.random.Generator, c_hi: float, theta_slope: float,
                  families=COST_FAMILIES):
    family = str(rng.choice(list(families)))
    if family == "scaled":
        base = PowerCost(float(rng.uniform(0.5, 2.0)), float(rng.uniform(2.0, 4.0)))
        return family, base, ScaledCost(float(rng.uniform(0.2, 0.9)), base)
    if family == "power":
        p0 = float(rng.uniform(2.0, 4.0))
        p1 = float(rng.uniform(2.0, 4.0))
        return family, PowerCost(float(rng.uniform(0.5, 2.0)), p0), \
            PowerCost(float(rng.uniform(0.5, 2.0)), p1)
    # linear-plus-cubic low type against a quadratic high type; the low
    # type's marginal cost dominates when beta1**2 < 3*a*b0
    xi = theta_slope
    a = float(rng.uniform(0.05, 0.45)) * xi
    b0 = float(rng.uniform(0.5, 3.0)) * xi / max(c_hi, 1e-9) ** 2
    beta1 = float(rng.uniform(0.1, 0.95)) * float(np.sqrt(3.0 * a * b0))
    return family, PolynomialCost((0.0, a, 0.0, b0)), PowerCost(beta1, 2.0)


def random_convex_instance(rng: np.random.Generator, grid_size: int = 1001,
                           min_margin: float = 1e-7, max_tries: int = 200,
                           families=COST_FAMILIES):
    """Seeded instance with convex effort satisfying the two-type assumptions
    and a non-tied regime; returns (environment, description)."""
    for _ in range(max_tries):
        x_hi = float(rng.uniform(0.4, 1.5))
        if rng.random() < 0.5:
            slope = float(rng.uniform(0.5, 2.0))
            effort = LinearEffort(slope)
            desc = {"effort": "linear", "slope": slope}
            xi = 1.0 / slope
        else:
            gamma = float(rng.uniform(1.0, 3.0))
            effort = PowerEffort(gamma)
            desc = {"effort": "power", "exponent": gamma}
            xi = 1.0 / max(gamma * x_hi ** (gamma - 1.0), 1e-9)
        c_hi = float(effort(x_hi))
        family, K0, K1 = _random_costs(rng, c_hi, xi, families)
        p0 = float(rng.uniform(0.2, 0.8))
        try:
            env = build_environment((0.0, x_hi), effort, [(p0, K0), (1.0 - p0, K1)], grid_size)
        except ValueError:
            continue
        rep = check_assumptions(env)
        if not (rep["A1"].holds and rep["A2"].holds):
            continue
        if abs(classify_regime(env).margin) < min_margin:
            continue
        desc.update({"costs": family, "x_hi": x_hi, "p0": p0})
        return env, desc
    raise RuntimeError("could not draw a valid instance")


def _s_shaped_effort(rng: np.random.Generator, x_hi: float) -> PiecewiseLinearEffort:
    """Concave-then-convex piecewise-linear effort (theta convex then concave)."""
    k = int(rng.integers(4, 8))
    xs = np.sort(rng.uniform(0.0, x_hi, size=k - 2))
    xs = np.concatenate(([0.0], xs, [x_hi]))
    xs = np.unique(xs)
    n = xs.size - 1
    turn = int(rng.integers(1, n)) if n > 1 else 1
    slopes = np.empty(n)
    slopes[:turn] = np.sort(rng.uniform(0.3, 2.0, size=turn))[::-1]
    slopes[turn:] = np.sort(rng.uniform(0.3, 2.0, size=n - turn))
    cs = np.concatenate(([0.0], np.cumsum(slopes * np.diff(xs))))
    return PiecewiseLinearEffort(tuple(xs), tuple(cs))


def random_general_instance(rng: np.random.Generator, grid_size: int = 1001,
                            max_tries: int = 200, families=COST_FAMILIES):
    """Seeded instance whose effort is not convex, satisfying the two-type
    assumptions including the lower bound on the high type's power."""
    for _ in range(max_tries):
        x_hi = float(rng.uniform(0.4, 1.5))
        if rng.random() < 0.5:
            gamma = float(rng.uniform(0.4, 0.9))
            effort = PowerEffort(gamma)
            desc = {"effort": "power", "exponent": gamma}
        else:
            effort = _s_shaped_effort(rng, x_hi)
            desc = {"effort": "piecewise_linear", "knots": len(effort.xs)}
        c_hi = float(effort(x_hi))
        xi = x_hi / max(c_hi, 1e-9)
        family, K0, K1 = _random_costs(rng, c_hi, xi, families)
        p0 = float(rng.uniform(0.2, 0.8))
        try:
            env = build_environment((0.0, x_hi), effort, [(p0, K0), (1.0 - p0, K1)], grid_size)
        except ValueError:
            continue
        if env.theta_is_concave():
            continue
        rep = check_assumptions(env)
        if not (rep["A1"].holds and rep["A2"].holds and rep["A3"].holds):
            continue
        desc.update({"costs": family, "x_hi": x_hi, "p0": p0})
        return env, desc
    raise RuntimeError("could not draw a valid instance")


def random_ntype_instance(rng: np.random.Generator, n: int = 3, grid_size: int = 1001,
                          max_tries: int = 200):
    """N power-cost types sharing an exponent with decreasing scale."""
    for _ in range(max_tries):
        x_hi = float(rng.uniform(0.4, 1.5))
        if rng.random() < 0.5:
            effort = LinearEffort(float(rng.uniform(0.5, 2.0)))
        else:
            effort = PowerEffort(float(rng.uniform(1.0, 3.0)))
        p = float(rng.uniform(2.0, 4.0))
        betas = np.sort(rng.uniform(0.3, 3.0, size=n))[::-1]
        if np.min(-np.diff(betas)) < 0.05:
            continue
        probs = rng.dirichlet(np.full(n, 2.0))
        if probs.min() < 0.05:
            continue
        probs = probs / probs.sum()
        probs[-1] = 1.0 - probs[:-1].sum()
        types = [(float(q), PowerCost(float(b), p)) for q, b in zip(probs, betas)]
        try:
            env = build_environment((0.0, x_hi), effort, types, grid_size)
        except ValueError:
            continue
        rep = check_assumptions(env)
        if rep["NT1"].holds and rep["NT2"].holds:
            return env, {"exponent": p, "betas": betas.tolist(), "probs": probs.tolist()}
    raise RuntimeError("could not draw a valid instance")
