"""Contracts in design-element form and the agent's best response to them."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .funcspace import CostFunction, PiecewiseLinearFn
from .model import (
    FULL,
    Environment,
    OutputDistribution,
    Range,
    distribution_attaining,
    effort_bounds,
    in_range,
    is_full,
)

EFFORT_TOL = 1e-12


@dataclass(frozen=True)
class DesignContract:
    """Pays kappa*c(x) + m on the range and nothing elsewhere.

    r_lo / r_hi are the effort images of the range's extreme points.
    """
    type_index: int
    alpha: float
    kappa: float
    m: float
    range: Range
    r_lo: float
    r_hi: float

    @property
    def is_full(self) -> bool:
        return self.range == FULL


def design_contract(env: Environment, t: int, alpha: float, m: float = 0.0,
                    rng: Range = FULL) -> DesignContract:
    alpha, m = float(alpha), float(m)
    if not 0 <= t < env.n_types:
        raise ValueError(f"unknown type {t}")
    if not np.isfinite(m) or m < 0:
        raise ValueError("constant payment must be non-negative")
    r_lo, r_hi = effort_bounds(env, rng)
    if isinstance(rng, type(FULL)) or is_full(env, rng):
        r_lo, r_hi = 0.0, env.c_hi
    tol = 1e-9 * max(1.0, env.c_hi)
    if alpha < r_lo - tol or alpha > r_hi + tol:
        raise ValueError(f"target effort {alpha} outside the range's effort interval "
                         f"[{r_lo}, {r_hi}]")
    alpha = min(max(alpha, r_lo), r_hi)
    return DesignContract(t, alpha, float(env.dK(t, alpha)), m, rng, float(r_lo), float(r_hi))


def contract_payment(s: DesignContract, env: Environment, x):
    x = np.asarray(x, dtype=float)
    c = np.asarray(env.c(x))
    inside = in_range(env, s.range, x, 1e-12)
    pay = np.where(inside, s.kappa * c + s.m, 0.0)
    return float(pay) if pay.ndim == 0 else pay


def concavified_contract(s: DesignContract, env: Environment) -> PiecewiseLinearFn:
    """Concave envelope of the contract in effort space (up to three pieces)."""
    c_hi = env.c_hi
    xs, ys = [], []
    if s.r_lo > 0:
        xs.append(0.0)
        ys.append(0.0)
    xs.append(s.r_lo)
    ys.append(s.kappa * s.r_lo + s.m)
    if s.r_hi > s.r_lo:
        xs.append(s.r_hi)
        ys.append(s.kappa * s.r_hi + s.m)
    if s.r_hi < c_hi:
        xs.append(c_hi)
        ys.append(0.0)
    if len(xs) == 1:  # only possible for a degenerate domain
        raise ValueError("degenerate contract")
    return PiecewiseLinearFn(xs, ys)


# ---------------------------------------------------------------------------
# best response


def best_response_arrays(kappa, m, r_lo, r_hi, c_hi: float, K: CostFunction):
    """Vectorised best response to concavified contracts.

    Each of the (up to) three linear pieces contributes the clamp of
    (K')^{-1}(slope) as a candidate; ties go to the middle piece.
    Returns (effort, value) arrays.
    """
    kappa, m, r_lo, r_hi = np.broadcast_arrays(*(np.asarray(v, dtype=float)
                                                 for v in (kappa, m, r_lo, r_hi)))
    top_lo = kappa * r_lo + m
    top_hi = kappa * r_hi + m

    # middle piece
    a_mid = np.clip(K.inverse_derivative(kappa, c_hi), r_lo, r_hi)
    v_mid = kappa * a_mid + m - K(a_mid)
    best_a, best_v = a_mid, v_mid

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        has_left = r_lo > 0
        s_left = np.where(has_left, top_lo / np.where(has_left, r_lo, 1.0), 0.0)
        a_left = np.clip(K.inverse_derivative(s_left, c_hi), 0.0, r_lo)
        v_left = np.where(has_left, top_lo * (a_left / np.where(has_left, r_lo, 1.0)) - K(a_left),
                          -np.inf)
        has_right = r_hi < c_hi
        span = np.where(has_right, c_hi - r_hi, 1.0)
        s_right = np.where(has_right, -top_hi / span, 0.0)
        a_right = np.clip(K.inverse_derivative(s_right, c_hi), r_hi, c_hi)
        v_right = np.where(has_right, top_hi * (c_hi - a_right) / span - K(a_right), -np.inf)

    take = v_left > best_v
    best_a = np.where(take, a_left, best_a)
    best_v = np.where(take, v_left, best_v)
    take = v_right > best_v
    best_a = np.where(take, a_right, best_a)
    best_v = np.where(take, v_right, best_v)
    return best_a, best_v


@dataclass(frozen=True)
class AgentResponse:
    effort: float
    value: float
    distribution: OutputDistribution


def truthful_payoff(s: DesignContract, env: Environment) -> float:
    return s.kappa * s.alpha - env.K(s.type_index, s.alpha) + s.m


def misreport_value(s: DesignContract, responder: int, env: Environment) -> float:
    _, v = best_response_arrays(s.kappa, s.m, s.r_lo, s.r_hi, env.c_hi, env.cost(responder))
    return float(v)


def agent_best_response(s: DesignContract, responder: int, env: Environment) -> AgentResponse:
    a, v = best_response_arrays(s.kappa, s.m, s.r_lo, s.r_hi, env.c_hi, env.cost(responder))
    a, v = float(a), float(v)
    if responder == s.type_index:
        truthful = truthful_payoff(s, env)
        # the recommended action is taken whenever weakly optimal
        if truthful >= v - 1e-12 * max(1.0, abs(v)):
            return AgentResponse(s.alpha, truthful, distribution_attaining(env, s.alpha, s.range))
    return AgentResponse(a, v, _response_distribution(s, env, a))


def _response_distribution(s: DesignContract, env: Environment, a: float) -> OutputDistribution:
    if s.r_lo <= a <= s.r_hi:
        try:
            return distribution_attaining(env, a, s.range)
        except ValueError:
            pass
    # on an outer piece: mix the range's extreme point with the boundary output
    if a < s.r_lo:
        x_edge = float(env.theta(s.r_lo))
        q = a / s.r_lo if s.r_lo > 0 else 1.0
        return OutputDistribution(((env.x_lo, 1.0 - q), (x_edge, q)))
    x_edge = float(env.theta(s.r_hi))
    span = env.c_hi - s.r_hi
    q = (a - s.r_hi) / span if span > 0 else 0.0
    return OutputDistribution(((x_edge, 1.0 - q), (env.x_hi, q)))
