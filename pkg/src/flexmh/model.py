"""Problem instances, effort-space objects and standing-assumption checks."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import ConfigError
from .funcspace import (
    CostFunction,
    PiecewiseLinearFn,
    upper_concave_envelope,
)

PROB_TOL = 1e-12
STANDARD_TOL = 1e-9
ASSUMPTION_TOL = 1e-10


# ---------------------------------------------------------------------------
# output ranges


@dataclass(frozen=True)
class FullRange:
    kind: str = field(default="full", init=False)


FULL = FullRange()


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    kind: str = field(default="interval", init=False)

    def __post_init__(self):
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)) or self.lo > self.hi:
            raise ValueError(f"invalid interval [{self.lo}, {self.hi}]")
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))


@dataclass(frozen=True)
class Points:
    points: tuple[float, ...]
    kind: str = field(default="points", init=False)

    def __post_init__(self):
        pts = tuple(sorted({float(p) for p in self.points}))
        if not pts:
            raise ValueError("empty point range")
        object.__setattr__(self, "points", pts)


Range = FullRange | Interval | Points


def singleton(x: float) -> Points:
    return Points((float(x),))


# ---------------------------------------------------------------------------
# environment


@dataclass(frozen=True)
class AgentType:
    prob: float
    cost: CostFunction


class Environment:
    """Immutable problem instance.

    c is represented by its samples on a uniform output grid (plus any kinks
    of a piecewise-linear effort); theta swaps the sample pairs and Theta is
    their upper concave envelope, so every derived object is exact relative
    to the same sample set.
    """

    def __init__(self, output_interval: Sequence[float], effort, types: Sequence[AgentType],
                 grid_size: int = 2001):
        x_lo, x_hi = float(output_interval[0]), float(output_interval[1])
        if not (0.0 <= x_lo < x_hi) or not np.isfinite(x_hi):
            raise ConfigError(f"output interval must satisfy 0 <= lo < hi, got {output_interval}")
        if int(grid_size) < 3:
            raise ConfigError("effort grid needs at least 3 points")
        types = tuple(types)
        if len(types) < 2:
            raise ConfigError("at least two agent types are required")
        probs = np.array([t.prob for t in types], dtype=float)
        if np.any(~np.isfinite(probs)) or np.any(probs <= 0) or np.any(probs >= 1):
            raise ConfigError("type probabilities must lie in (0, 1)")
        if abs(probs.sum() - 1.0) > PROB_TOL:
            raise ConfigError(f"type probabilities sum to {probs.sum()!r}, not 1")

        xs = np.linspace(x_lo, x_hi, int(grid_size))
        kinks = [k for k in effort.breakpoints() if x_lo < k < x_hi]
        if kinks:
            xs = np.union1d(xs, np.asarray(kinks, dtype=float))
        cs = np.asarray(effort(xs), dtype=float)
        if not np.all(np.isfinite(cs)):
            raise ConfigError("effort function is not finite on the output interval")
        if abs(cs[0]) > STANDARD_TOL:
            raise ConfigError(f"effort at the lowest output must be 0, got {cs[0]!r}")
        cs[0] = 0.0
        if np.any(np.diff(cs) <= 0):
            raise ConfigError("effort function must be strictly increasing on the grid")

        self.x_lo, self.x_hi = x_lo, x_hi
        self.effort = effort
        self.types = types
        self.grid_size = int(grid_size)
        self.xs = xs
        self.cs = cs
        self.c_lo = 0.0
        self.c_hi = float(cs[-1])
        self.theta = PiecewiseLinearFn(cs, xs)
        self.Theta = upper_concave_envelope(cs, xs)
        self.alpha_grid = np.linspace(0.0, self.c_hi, int(grid_size))
        self._check_costs()
        xs.setflags(write=False)
        cs.setflags(write=False)

    def _check_costs(self):
        a = self.alpha_grid
        for t, typ in enumerate(self.types):
            K = typ.cost
            k0 = float(K(0.0))
            if abs(k0) > STANDARD_TOL:
                raise ConfigError(f"cost of type {t} must vanish at zero effort, got {k0!r}")
            d1 = np.asarray(K.derivative(a), dtype=float)
            if not np.all(np.isfinite(d1)) or not np.all(np.isfinite(K(a))):
                raise ConfigError(f"cost of type {t} is not finite on the effort interval")
            if np.any(d1[1:] <= 0):
                raise ConfigError(f"cost of type {t} is not strictly increasing")
            if np.any(np.diff(d1) <= 0):
                raise ConfigError(f"cost of type {t} is not strictly convex on the grid")

    # convenience ---------------------------------------------------------

    @property
    def n_types(self) -> int:
        return len(self.types)

    @property
    def probs(self) -> tuple[float, ...]:
        return tuple(float(t.prob) for t in self.types)

    def cost(self, t: int) -> CostFunction:
        return self.types[t].cost

    def K(self, t: int, a):
        v = self.types[t].cost(a)
        return float(v) if np.ndim(v) == 0 else v

    def dK(self, t: int, a):
        v = self.types[t].cost.derivative(a)
        return float(v) if np.ndim(v) == 0 else v

    def d2K(self, t: int, a):
        v = self.types[t].cost.second_derivative(a)
        return float(v) if np.ndim(v) == 0 else v

    def inv_dK(self, t: int, k, lo: float = 0.0, hi: float | None = None):
        hi = self.c_hi if hi is None else hi
        v = np.clip(self.types[t].cost.inverse_derivative(k, self.c_hi), lo, hi)
        return float(v) if np.ndim(v) == 0 else v

    def c(self, x):
        """Effort of output x (the sampled interpolant)."""
        x = np.asarray(x, dtype=float)
        tol = 1e-12 * max(1.0, self.x_hi)
        if np.any(x < self.x_lo - tol) or np.any(x > self.x_hi + tol):
            raise ValueError("output outside the output interval")
        v = np.interp(x, self.xs, self.cs)
        return float(v) if v.ndim == 0 else v

    def theta_is_concave(self, tol: float = 1e-9) -> bool:
        gap = self.Theta(self.cs) - self.xs
        return bool(np.max(np.abs(gap)) <= tol)

    def with_effort(self, effort, grid_size: int | None = None) -> "Environment":
        return Environment((self.x_lo, self.x_hi), effort, self.types,
                           self.grid_size if grid_size is None else grid_size)

    def with_types(self, types: Sequence[AgentType]) -> "Environment":
        return Environment((self.x_lo, self.x_hi), self.effort, types, self.grid_size)

    def __repr__(self) -> str:
        return (f"Environment(output=[{self.x_lo:g}, {self.x_hi:g}], c_hi={self.c_hi:.6g}, "
                f"types={self.n_types}, grid={self.grid_size})")


def build_environment(output_interval, effort, types, grid_size: int = 2001) -> Environment:
    """Assemble an environment from an effort function and (prob, cost) pairs."""
    typed = [t if isinstance(t, AgentType) else AgentType(float(t[0]), t[1]) for t in types]
    return Environment(output_interval, effort, typed, grid_size)


# ---------------------------------------------------------------------------
# ranges in output and effort space


def output_bounds(env: Environment, rng: Range) -> tuple[float, float]:
    if isinstance(rng, FullRange):
        return env.x_lo, env.x_hi
    if isinstance(rng, Interval):
        lo, hi = rng.lo, rng.hi
    elif isinstance(rng, Points):
        lo, hi = rng.points[0], rng.points[-1]
    else:
        raise TypeError(f"unknown range {rng!r}")
    tol = 1e-12 * max(1.0, env.x_hi)
    if lo < env.x_lo - tol or hi > env.x_hi + tol:
        raise ValueError(f"range {rng!r} leaves the output interval")
    return max(lo, env.x_lo), min(hi, env.x_hi)


def effort_bounds(env: Environment, rng: Range) -> tuple[float, float]:
    lo, hi = output_bounds(env, rng)
    return env.c(lo), env.c(hi)


def is_full(env: Environment, rng: Range, tol: float = 1e-12) -> bool:
    if isinstance(rng, FullRange):
        return True
    lo, hi = output_bounds(env, rng)
    if isinstance(rng, Points):
        return False
    return lo <= env.x_lo + tol and hi >= env.x_hi - tol


def in_range(env: Environment, rng: Range, x, tol: float = 1e-9) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if isinstance(rng, FullRange):
        return (x >= env.x_lo - tol) & (x <= env.x_hi + tol)
    if isinstance(rng, Interval):
        return (x >= rng.lo - tol) & (x <= rng.hi + tol)
    pts = np.asarray(rng.points)
    return np.any(np.abs(x[..., None] - pts) <= tol, axis=-1)


def _range_samples(env: Environment, rng: Range) -> tuple[np.ndarray, np.ndarray]:
    """(effort, output) samples of theta over the range, sorted by effort."""
    if isinstance(rng, Points):
        output_bounds(env, rng)
        out = np.clip(np.asarray(rng.points, dtype=float), env.x_lo, env.x_hi)
        return np.asarray(env.c(out), dtype=float).reshape(-1), out
    lo, hi = output_bounds(env, rng)
    inner = env.xs[(env.xs > lo) & (env.xs < hi)]
    out = np.concatenate(([lo], inner, [hi])) if hi > lo else np.array([lo])
    eff = np.asarray(env.c(out), dtype=float).reshape(-1)
    keep = np.concatenate(([True], np.diff(eff) > 0))
    return eff[keep], out[keep]


def theta_restricted(env: Environment, rng: Range) -> PiecewiseLinearFn:
    """Concave envelope of theta sampled over c(range) only."""
    if isinstance(rng, FullRange) or (isinstance(rng, Interval) and is_full(env, rng, 0.0)):
        return env.Theta
    eff, out = _range_samples(env, rng)
    if eff.size < 2:
        raise ValueError("range is a single point; its envelope is degenerate")
    return upper_concave_envelope(eff, out)


def restricted_value(env: Environment, alpha: float, rng: Range) -> float:
    """Theta restricted to the range, evaluated at alpha (handles single points)."""
    eff, out = _range_samples(env, rng) if not isinstance(rng, FullRange) else (None, None)
    if eff is not None and eff.size < 2:
        if abs(alpha - eff[0]) > 1e-9 * max(1.0, env.c_hi):
            raise ValueError("effort outside a single-point range")
        return float(out[0])
    return theta_restricted(env, rng)(alpha)


# ---------------------------------------------------------------------------
# output distributions


@dataclass(frozen=True)
class OutputDistribution:
    atoms: tuple[tuple[float, float], ...]

    def __post_init__(self):
        atoms = tuple((float(x), float(q)) for x, q in self.atoms)
        if not 1 <= len(atoms) <= 2:
            raise ValueError("distributions have one or two atoms")
        if any(q < 0 or q > 1 for _, q in atoms):
            raise ValueError("atom weights must lie in [0, 1]")
        if abs(sum(q for _, q in atoms) - 1.0) > 1e-12:
            raise ValueError("atom weights must sum to 1")
        object.__setattr__(self, "atoms", atoms)

    @classmethod
    def point(cls, x: float) -> "OutputDistribution":
        return cls(((x, 1.0),))

    @property
    def mean_output(self) -> float:
        return float(sum(x * q for x, q in self.atoms))

    def mean_effort(self, env: Environment) -> float:
        return float(sum(env.c(x) * q for x, q in self.atoms))

    @property
    def support(self) -> tuple[float, ...]:
        return tuple(x for x, q in self.atoms if q > 0)


def distribution_attaining(env: Environment, alpha: float, rng: Range = FULL) -> OutputDistribution:
    """At most two atoms in the range, mean effort alpha, mean output Theta_R(alpha)."""
    alpha = float(alpha)
    if isinstance(rng, FullRange):
        env_r = env.Theta
    else:
        eff, out = _range_samples(env, rng)
        if eff.size < 2:
            if abs(alpha - eff[0]) > 1e-9 * max(1.0, env.c_hi):
                raise ValueError("effort outside a single-point range")
            return OutputDistribution.point(out[0])
        env_r = theta_restricted(env, rng)
    lo, hi = env_r.domain
    tol = 1e-12 * max(1.0, env.c_hi)
    if alpha < lo - tol or alpha > hi + tol:
        raise ValueError(f"effort {alpha} outside restricted interval [{lo}, {hi}]")
    alpha = min(max(alpha, lo), hi)
    i, a0, a1 = env_r.segment(alpha)
    y0, y1 = float(env_r.y[i]), float(env_r.y[i + 1])
    if alpha - a0 <= tol:
        return OutputDistribution.point(y0)
    if a1 - alpha <= tol:
        return OutputDistribution.point(y1)
    target = env_r(alpha)
    x_direct = float(env.theta(alpha))
    if abs(target - x_direct) <= 1e-12 * max(1.0, env.x_hi) and bool(in_range(env, rng, x_direct, 1e-12)):
        return OutputDistribution.point(x_direct)
    q = (alpha - a0) / (a1 - a0)
    return OutputDistribution(((y0, 1.0 - q), (y1, q)))


# ---------------------------------------------------------------------------
# standing assumptions


@dataclass(frozen=True)
class AssumptionCheck:
    """margin > 0 is required for strict checks, margin >= -tol otherwise."""
    holds: bool
    margin: float
    strict: bool

    @staticmethod
    def make(margin: float, strict: bool, tol: float = ASSUMPTION_TOL) -> "AssumptionCheck":
        holds = margin > 0 if strict else margin >= -tol
        return AssumptionCheck(bool(holds), float(margin), strict)


@dataclass(frozen=True)
class AssumptionReport:
    checks: dict
    required: tuple[str, ...]

    @property
    def all_required(self) -> bool:
        return all(self.checks[k].holds for k in self.required)

    def __getitem__(self, key) -> AssumptionCheck:
        return self.checks[key]

    def as_dict(self) -> dict:
        return {k: {"holds": v.holds, "margin": v.margin, "strict": v.strict}
                for k, v in self.checks.items()}


def single_peak_violations(values: np.ndarray, tol: float = ASSUMPTION_TOL) -> int:
    """Number of interior valleys in the sequence; 0 means a single strict peak."""
    d = np.diff(np.asarray(values, dtype=float))
    s = np.sign(d)
    s[np.abs(d) <= tol] = 0
    s = s[s != 0]
    if s.size == 0:
        return 1
    return int(np.count_nonzero((s[:-1] < 0) & (s[1:] > 0)))


def mh_objective(env: Environment, t: int, a):
    return env.Theta(a) - env.dK(t, a) * np.asarray(a)


def check_assumptions(env: Environment, mh_efforts: Sequence[float] | None = None) -> AssumptionReport:
    """Numerical checks of the standing assumptions on the effort grid.

    mh_efforts may pass precomputed pure moral-hazard efforts (needed for A3).
    """
    a = env.alpha_grid
    interior = a[1:]
    n = env.n_types
    checks: dict[str, AssumptionCheck] = {}

    # ordering of marginal costs between consecutive types on (0, c_hi]
    gaps = [np.min(env.dK(t, interior) - env.dK(t + 1, interior)) for t in range(n - 1)]
    order_margin = float(min(gaps))
    k_at_zero = np.array([env.dK(t, 0.0) for t in range(n)])
    spread = float(np.max(k_at_zero) - np.min(k_at_zero))
    common_margin = order_margin if spread <= STANDARD_TOL else -spread
    peak_bad = [single_peak_violations(mh_objective(env, t, a)) for t in range(n)]
    peak_margin = -float(max(peak_bad))

    if n == 2:
        checks["A1"] = AssumptionCheck.make(order_margin, strict=True)
        checks["A2"] = AssumptionCheck.make(peak_margin, strict=False)
        if mh_efforts is None:
            from .solvers import solve_pure_mh
            mh_efforts = [solve_pure_mh(env, t).alpha for t in range(n)]
        a3 = float(env.dK(1, mh_efforts[1]) - env.dK(0, 0.0))
        checks["A3"] = AssumptionCheck.make(a3, strict=False)
    checks["NT1"] = AssumptionCheck.make(min(order_margin, common_margin), strict=True)
    checks["NT2"] = AssumptionCheck.make(peak_margin, strict=False)

    slope = env.effort.affine_slope()
    if slope is not None:
        inv = 1.0 / slope
        m = min(min(inv - env.dK(t, 0.0), env.dK(t, env.c_hi) - inv) for t in range(n))
        checks["OSG1"] = AssumptionCheck.make(float(m), strict=True)

    required = ("A1", "A2") if n == 2 else ("NT1", "NT2")
    return AssumptionReport(checks, required)


class RangeEnvelopes:
    """Fast exact evaluation of Theta over [0, r] and [r, c_hi] for arbitrary r.

    The hull of (grid prefix) + (r, theta(r)) at alpha is the larger of the
    prefix hull and the best chord ending at the new endpoint. Prefix and
    suffix hulls are cached by grid index.
    """

    def __init__(self, env: Environment):
        self.env = env
        self._prefix: dict[int, PiecewiseLinearFn] = {}
        self._suffix: dict[int, PiecewiseLinearFn] = {}

    def _tol(self) -> float:
        return 1e-12 * max(1.0, self.env.c_hi)

    def prefix(self, alpha: float, r: float) -> float:
        """Theta restricted to efforts [0, r], at alpha <= r."""
        env = self.env
        cs, xs = env.cs, env.xs
        if alpha > r + self._tol() or alpha < -self._tol():
            raise ValueError("effort outside the restricted interval")
        alpha = min(max(alpha, 0.0), r)
        th_r = float(env.theta(r))
        if r - alpha <= self._tol():
            return th_r
        j = int(np.searchsorted(cs, r, side="left"))
        ju = min(int(np.searchsorted(cs, alpha, side="right")), j)
        best = -np.inf
        if ju > 0:
            slopes = (th_r - xs[:ju]) / (r - cs[:ju])
            best = th_r - (r - alpha) * float(np.min(slopes))
        if j >= 2 and alpha <= cs[j - 1]:
            hull = self._prefix.get(j)
            if hull is None:
                hull = upper_concave_envelope(cs[:j], xs[:j])
                self._prefix[j] = hull
            best = max(best, hull(alpha))
        return float(best)

    def suffix(self, alpha: float, r: float) -> float:
        """Theta restricted to efforts [r, c_hi], at alpha >= r."""
        env = self.env
        cs, xs = env.cs, env.xs
        if alpha < r - self._tol() or alpha > env.c_hi + self._tol():
            raise ValueError("effort outside the restricted interval")
        alpha = max(min(alpha, env.c_hi), r)
        th_r = float(env.theta(r))
        if alpha - r <= self._tol():
            return th_r
        n = cs.size
        j = int(np.searchsorted(cs, r, side="right"))
        jv = max(int(np.searchsorted(cs, alpha, side="left")), j)
        best = -np.inf
        if jv < n:
            slopes = (xs[jv:] - th_r) / (cs[jv:] - r)
            best = th_r + (alpha - r) * float(np.max(slopes))
        if n - j >= 2 and alpha >= cs[j]:
            hull = self._suffix.get(j)
            if hull is None:
                hull = upper_concave_envelope(cs[j:], xs[j:])
                self._suffix[j] = hull
            best = max(best, hull(alpha))
        return float(best)
