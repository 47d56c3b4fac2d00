"""Univariate building blocks: piecewise-linear geometry, envelopes, inverses,
and the effort / cost function families."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import integrate

from .exceptions import PropertyViolation

_DOMAIN_TOL = 1e-12
_HULL_TOL = 1e-13


def _as_float_array(v) -> np.ndarray:
    return np.asarray(v, dtype=float)


class PiecewiseLinearFn:
    """Continuous piecewise-linear function given by its breakpoints.

    Evaluation interpolates linearly and refuses points outside the domain
    (a relative slack of 1e-12 is clipped to the nearest endpoint).
    """

    __slots__ = ("_x", "_y")

    def __init__(self, x: Sequence[float], y: Sequence[float]):
        x = np.array(x, dtype=float)
        y = np.array(y, dtype=float)
        if x.ndim != 1 or x.shape != y.shape:
            raise ValueError("breakpoint arrays must be 1-d and of equal length")
        if x.size < 2:
            raise ValueError("a piecewise-linear function needs at least 2 breakpoints")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("breakpoints must be finite")
        if np.any(np.diff(x) <= 0):
            raise ValueError("breakpoint x values must be strictly increasing")
        x.setflags(write=False)
        y.setflags(write=False)
        self._x = x
        self._y = y

    @classmethod
    def from_points(cls, points: Sequence[tuple[float, float]]) -> "PiecewiseLinearFn":
        pts = list(points)
        return cls([p[0] for p in pts], [p[1] for p in pts])

    @property
    def x(self) -> np.ndarray:
        return self._x

    @property
    def y(self) -> np.ndarray:
        return self._y

    @property
    def breakpoints(self) -> list[tuple[float, float]]:
        return [(float(a), float(b)) for a, b in zip(self._x, self._y)]

    @property
    def domain(self) -> tuple[float, float]:
        return float(self._x[0]), float(self._x[-1])

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self._y) / np.diff(self._x)

    def _check(self, a: np.ndarray) -> np.ndarray:
        lo, hi = self.domain
        tol = _DOMAIN_TOL * max(1.0, hi - lo, abs(lo), abs(hi))
        if np.any(~np.isfinite(a)) or np.any(a < lo - tol) or np.any(a > hi + tol):
            raise ValueError(f"evaluation outside domain [{lo}, {hi}]")
        return np.clip(a, lo, hi)

    def __call__(self, a):
        arr = self._check(_as_float_array(a))
        out = np.interp(arr, self._x, self._y)
        return float(out) if np.ndim(out) == 0 else out

    def slope_at(self, a: float, side: str = "right") -> float:
        """Slope of the piece containing a (right piece at a breakpoint)."""
        a = float(self._check(np.asarray(a, dtype=float)))
        s = self.slopes
        if side == "right":
            i = int(np.searchsorted(self._x, a, side="right")) - 1
        else:
            i = int(np.searchsorted(self._x, a, side="left")) - 1
        return float(s[min(max(i, 0), s.size - 1)])

    def segment(self, a: float) -> tuple[int, float, float]:
        """Index and endpoints of the piece that contains a."""
        a = float(self._check(np.asarray(a, dtype=float)))
        i = int(np.searchsorted(self._x, a, side="right")) - 1
        i = min(max(i, 0), self._x.size - 2)
        return i, float(self._x[i]), float(self._x[i + 1])

    def __neg__(self) -> "PiecewiseLinearFn":
        return PiecewiseLinearFn(self._x, -self._y)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PiecewiseLinearFn):
            return NotImplemented
        return np.array_equal(self._x, other._x) and np.array_equal(self._y, other._y)

    def __hash__(self):
        return hash((self._x.tobytes(), self._y.tobytes()))

    def __repr__(self) -> str:
        lo, hi = self.domain
        return f"PiecewiseLinearFn(n={self._x.size}, domain=[{lo:.6g}, {hi:.6g}])"


def _validate_samples(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or x.shape != y.shape:
        raise ValueError("samples must be two 1-d arrays of equal length")
    if x.size < 2:
        raise ValueError("need at least 2 samples")
    if not np.all(np.isfinite(x)) or not np.all(np.isfinite(y)):
        raise ValueError("samples must be finite")
    if np.any(np.diff(x) <= 0):
        raise ValueError("sample x values must be strictly increasing")
    return x, y


def _split_samples(samples) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(samples, PiecewiseLinearFn):
        return samples.x, samples.y
    if isinstance(samples, tuple) and len(samples) == 2 and np.ndim(samples[0]) == 1:
        return samples[0], samples[1]
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("samples must be a sequence of (x, y) pairs")
    return arr[:, 0], arr[:, 1]


def upper_hull_indices(x: np.ndarray, y: np.ndarray) -> list[int]:
    """Monotone-chain upper hull on x-sorted samples; returns kept indices."""
    xs = x.tolist()
    ys = y.tolist()
    hull: list[int] = []
    for k in range(len(xs)):
        xk, yk = xs[k], ys[k]
        while len(hull) >= 2:
            o, a = hull[-2], hull[-1]
            dxa, dya = xs[a] - xs[o], ys[a] - ys[o]
            dxb, dyb = xk - xs[o], yk - ys[o]
            cross = dxa * dyb - dya * dxb
            # a lies on or below the chord o->k: drop it
            if cross >= -_HULL_TOL * (abs(dxa * dyb) + abs(dya * dxb)):
                hull.pop()
            else:
                break
        hull.append(k)
    return hull


def upper_concave_envelope(samples, y=None) -> PiecewiseLinearFn:
    """Smallest concave function lying above the samples."""
    if y is not None:
        x, y = _validate_samples(samples, y)
    else:
        x, y = _validate_samples(*_split_samples(samples))
    idx = upper_hull_indices(x, y)
    return PiecewiseLinearFn(x[idx], y[idx])


def lower_convex_envelope(samples, y=None) -> PiecewiseLinearFn:
    """Largest convex function lying below the samples."""
    if y is not None:
        x, y = _validate_samples(samples, y)
    else:
        x, y = _validate_samples(*_split_samples(samples))
    return -upper_concave_envelope(x, -y)


def inverse_monotone(f: Callable[[float], float], target: float,
                     bracket: tuple[float, float], max_iter: int = 400) -> float:
    """Solve f(x) = target on a bracket where f is monotone, by bisection."""
    lo, hi = float(bracket[0]), float(bracket[1])
    if not lo <= hi:
        raise ValueError("bracket must satisfy lo <= hi")
    tol = 1e-11 * max(1.0, abs(target))
    flo, fhi = float(f(lo)), float(f(hi))
    if abs(flo - target) <= tol:
        return lo
    if abs(fhi - target) <= tol:
        return hi
    increasing = fhi >= flo
    fmin, fmax = (flo, fhi) if increasing else (fhi, flo)
    if target < fmin or target > fmax:
        raise ValueError(f"target {target!r} outside [{fmin!r}, {fmax!r}] on bracket")
    a, b = lo, hi
    best, best_err = lo, abs(flo - target)
    for _ in range(max_iter):
        mid = 0.5 * (a + b)
        fm = float(f(mid))
        err = abs(fm - target)
        if err < best_err:
            best, best_err = mid, err
        if err <= tol or mid <= a or mid >= b:
            break
        if (fm < target) == increasing:
            a = mid
        else:
            b = mid
    return best


def bisect_increasing(f: Callable[[np.ndarray], np.ndarray], target, lo, hi,
                      iters: int = 80) -> np.ndarray:
    """Vectorised bisection for an increasing f; results are clipped to [lo, hi]."""
    target = _as_float_array(target)
    a = np.broadcast_to(_as_float_array(lo), target.shape).astype(float)
    b = np.broadcast_to(_as_float_array(hi), target.shape).astype(float)
    below = target <= f(a)
    above = target >= f(b)
    for _ in range(iters):
        mid = 0.5 * (a + b)
        go_right = f(mid) < target
        a = np.where(go_right, mid, a)
        b = np.where(go_right, b, mid)
    out = 0.5 * (a + b)
    out = np.where(below, np.broadcast_to(lo, target.shape), out)
    out = np.where(above, np.broadcast_to(hi, target.shape), out)
    return out


def central_difference(fn: Callable[[float], float], a: float) -> float:
    h = 1e-6 * max(1.0, abs(a))
    return (fn(a + h) - fn(a - h)) / (2.0 * h)


# ---------------------------------------------------------------------------
# effort functions c(x)


@dataclass(frozen=True)
class LinearEffort:
    slope: float
    intercept: float = 0.0

    def __post_init__(self):
        if not self.slope > 0:
            raise ValueError("linear effort needs a positive slope")

    def __call__(self, x):
        return self.slope * _as_float_array(x) + self.intercept

    @property
    def family(self) -> str:
        return "linear"

    def breakpoints(self) -> tuple[float, ...]:
        return ()

    def affine_slope(self) -> float | None:
        return self.slope


@dataclass(frozen=True)
class PowerEffort:
    exponent: float
    scale: float = 1.0

    def __post_init__(self):
        if not (self.exponent > 0 and self.scale > 0):
            raise ValueError("power effort needs exponent > 0 and scale > 0")

    def __call__(self, x):
        x = _as_float_array(x)
        return self.scale * np.power(np.maximum(x, 0.0), self.exponent)

    @property
    def family(self) -> str:
        return "power"

    def breakpoints(self) -> tuple[float, ...]:
        return ()

    def affine_slope(self) -> float | None:
        return self.scale if self.exponent == 1.0 else None


@dataclass(frozen=True)
class PiecewiseLinearEffort:
    """Strictly increasing piecewise-linear c given by (x, c) knots."""
    xs: tuple[float, ...]
    cs: tuple[float, ...]

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        cs = np.asarray(self.cs, dtype=float)
        if xs.size < 2 or xs.shape != cs.shape:
            raise ValueError("piecewise-linear effort needs >= 2 matching knots")
        if np.any(np.diff(xs) <= 0) or np.any(np.diff(cs) <= 0):
            raise ValueError("piecewise-linear effort must be strictly increasing")
        object.__setattr__(self, "xs", tuple(float(v) for v in xs))
        object.__setattr__(self, "cs", tuple(float(v) for v in cs))

    def __call__(self, x):
        x = _as_float_array(x)
        lo, hi = self.xs[0], self.xs[-1]
        tol = _DOMAIN_TOL * max(1.0, hi - lo)
        if np.any(x < lo - tol) or np.any(x > hi + tol):
            raise ValueError("effort evaluated outside its knots")
        return np.interp(x, self.xs, self.cs)

    @property
    def family(self) -> str:
        return "piecewise_linear"

    def breakpoints(self) -> tuple[float, ...]:
        return self.xs

    def affine_slope(self) -> float | None:
        s = np.diff(self.cs) / np.diff(self.xs)
        if np.allclose(s, s[0], rtol=1e-12, atol=0.0):
            return float(s[0])
        return None


EffortFunction = LinearEffort | PowerEffort | PiecewiseLinearEffort


# ---------------------------------------------------------------------------
# cost functions K(alpha)


class CostFunction:
    """Base class. Subclasses supply value, derivative and second_derivative
    (vectorised); the inverse of K' falls back to bisection."""

    def __call__(self, a):
        raise NotImplementedError

    def derivative(self, a):
        raise NotImplementedError

    def second_derivative(self, a):
        raise NotImplementedError

    def inverse_derivative(self, k, upper: float):
        """alpha in [0, upper] with K'(alpha) = k, clipped to the interval."""
        k = _as_float_array(k)
        out = bisect_increasing(self.derivative, k, 0.0, float(upper), iters=90)
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class PowerCost(CostFunction):
    """K(a) = beta * a**exponent."""
    beta: float
    exponent: float

    def __post_init__(self):
        if not (self.beta > 0 and self.exponent > 1):
            raise ValueError("power cost needs beta > 0 and exponent > 1")

    def __call__(self, a):
        a = _as_float_array(a)
        return self.beta * np.power(np.maximum(a, 0.0), self.exponent)

    def derivative(self, a):
        a = _as_float_array(a)
        return self.beta * self.exponent * np.power(np.maximum(a, 0.0), self.exponent - 1.0)

    def second_derivative(self, a):
        a = _as_float_array(a)
        p = self.exponent
        return self.beta * p * (p - 1.0) * np.power(np.maximum(a, 0.0), p - 2.0)

    def inverse_derivative(self, k, upper: float):
        k = _as_float_array(k)
        base = np.maximum(k, 0.0) / (self.beta * self.exponent)
        out = np.clip(np.power(base, 1.0 / (self.exponent - 1.0)), 0.0, float(upper))
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ScaledCost(CostFunction):
    """K(a) = eta * base(a)."""
    eta: float
    base: CostFunction

    def __post_init__(self):
        if not 0 < self.eta < 1:
            raise ValueError("scaled cost needs eta in (0, 1)")

    def __call__(self, a):
        return self.eta * self.base(a)

    def derivative(self, a):
        return self.eta * self.base.derivative(a)

    def second_derivative(self, a):
        return self.eta * self.base.second_derivative(a)

    def inverse_derivative(self, k, upper: float):
        return self.base.inverse_derivative(_as_float_array(k) / self.eta, upper)


@dataclass(frozen=True)
class PolynomialCost(CostFunction):
    """K(a) = sum_i coefficients[i] * a**i."""
    coefficients: tuple[float, ...]

    def __post_init__(self):
        co = tuple(float(v) for v in self.coefficients)
        if len(co) < 2 or not all(math.isfinite(v) for v in co):
            raise ValueError("polynomial cost needs at least two finite coefficients")
        object.__setattr__(self, "coefficients", co)
        # coefficient arrays of K, K', K'' (evaluated often inside bisection)
        base = np.array(co)
        object.__setattr__(self, "_series", (base, P.polyder(base, 1), P.polyder(base, 2)))

    def __call__(self, a):
        return P.polyval(_as_float_array(a), self._series[0])

    def derivative(self, a):
        return P.polyval(_as_float_array(a), self._series[1])

    def second_derivative(self, a):
        return P.polyval(_as_float_array(a), self._series[2])

    def inverse_derivative(self, k, upper: float):
        d = self._series[1]
        if d.size > 3 or (d.size == 3 and d[2] < 0):
            return super().inverse_derivative(k, upper)
        k = _as_float_array(k)
        c0, c1 = d[0], d[1] if d.size > 1 else 0.0
        c2 = d[2] if d.size > 2 else 0.0
        with np.errstate(invalid="ignore", divide="ignore"):
            if c2 > 0:
                # larger root of c2 a^2 + c1 a + (c0 - k), in cancellation-free form
                disc = np.sqrt(np.maximum(c1 * c1 - 4.0 * c2 * (c0 - k), 0.0))
                den = -c1 - disc if c1 > 0 else None
                if den is None:
                    out = (-c1 + disc) / (2.0 * c2)
                else:
                    out = np.where(den != 0, 2.0 * (c0 - k) / np.where(den != 0, den, 1.0), 0.0)
            else:
                out = (k - c0) / c1
        out = np.clip(out, 0.0, float(upper))
        return float(out) if out.ndim == 0 else out


class CallableCost(CostFunction):
    """User-supplied cost; missing derivatives use central differences."""

    def __init__(self, fn, derivative=None, second_derivative=None):
        self._fn = fn
        self._d1 = derivative
        self._d2 = second_derivative

    def __call__(self, a):
        return np.vectorize(self._fn, otypes=[float])(_as_float_array(a))

    def derivative(self, a):
        if self._d1 is not None:
            return np.vectorize(self._d1, otypes=[float])(_as_float_array(a))
        return np.vectorize(lambda v: central_difference(self._fn, v), otypes=[float])(
            _as_float_array(a))

    def second_derivative(self, a):
        if self._d2 is not None:
            return np.vectorize(self._d2, otypes=[float])(_as_float_array(a))
        d1 = lambda v: float(self.derivative(v))
        return np.vectorize(lambda v: central_difference(d1, v), otypes=[float])(
            _as_float_array(a))


def integral_of_inverse_derivative(K: CostFunction, kappa_lo: float, kappa_hi: float,
                                   c_hi: float, c_lo: float = 0.0) -> float:
    """Integral of (K')^{-1} over [kappa_lo, kappa_hi].

    Computed by adaptive quadrature and cross-checked against the closed form
    kappa*a - K(a) evaluated between the two endpoints.
    """
    k_min = float(K.derivative(c_lo))
    k_max = float(K.derivative(c_hi))
    tol = 1e-12 * max(1.0, abs(k_max))
    if not (k_min - tol <= kappa_lo <= kappa_hi + 0.0 and kappa_hi <= k_max + tol):
        raise ValueError(
            f"powers [{kappa_lo}, {kappa_hi}] must lie in [{k_min}, {k_max}] and be ordered")
    if kappa_hi == kappa_lo:
        return 0.0
    inv = lambda k: float(K.inverse_derivative(k, c_hi))
    quad, _ = integrate.quad(inv, kappa_lo, kappa_hi, epsabs=1e-10, epsrel=1e-12, limit=200)
    a_lo, a_hi = inv(kappa_lo), inv(kappa_hi)
    closed = (kappa_hi * a_hi - float(K(a_hi))) - (kappa_lo * a_lo - float(K(a_lo)))
    if abs(quad - closed) > 1e-8:
        raise PropertyViolation(
            f"inverse-derivative integral routes disagree: {quad!r} vs {closed!r}")
    return float(quad)
