"""Estimator-style wrapper around the menu solvers."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .config import InstanceConfig, environment_from_config
from .contracts import contract_payment
from .model import Environment


def _as_environment(env, effort_grid: int | None = None) -> Environment:
    if isinstance(env, Environment):
        return env
    if isinstance(env, dict):
        env = InstanceConfig.model_validate(env)
    if isinstance(env, InstanceConfig):
        return environment_from_config(env)
    raise TypeError(f"expected an Environment or instance description, got {type(env).__name__}")


class ContractMenuSolver(BaseEstimator):
    """Fits the optimal menu for an environment.

    predict maps rows of (reported type, realised output) to payments.
    """

    def __init__(self, mode: str = "auto", convex_grid: int = 400, general_grid: int = 40,
                 ntype_grid: int = 201, refine_tol: float = 1e-8, seed: int = 0):
        self.mode = mode
        self.convex_grid = convex_grid
        self.general_grid = general_grid
        self.ntype_grid = ntype_grid
        self.refine_tol = refine_tol
        self.seed = seed

    def _solver_config(self) -> InstanceConfig:
        # only the solver block is used; the instance fields are placeholders
        return InstanceConfig.model_validate({
            "output_interval": [0.0, 1.0],
            "effort": {"family": "linear", "params": {"slope": 1.0}},
            "types": [{"prob": 0.5, "cost": {"family": "power",
                                             "params": {"beta": 1.0, "exponent": 2.0}}}] * 2,
            "solver": {"menu_grid": {"convex": self.convex_grid, "general": self.general_grid,
                                     "ntype": self.ntype_grid},
                       "refine_tol": self.refine_tol, "seed": self.seed},
        })

    def fit(self, env, y=None):
        from .cli import solve

        env = _as_environment(env)
        rep = solve(env, self._solver_config(), self.mode)
        self.env_ = env
        self.report_ = rep
        self.menu_ = rep.menu
        self.objective_ = rep.objective
        self.regime_ = rep.regime
        self.n_types_ = env.n_types
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "menu_")
        X = check_array(X, dtype=float, ensure_min_features=2)
        if X.shape[1] != 2:
            raise ValueError("X must have two columns: type index and output")
        types = X[:, 0]
        if np.any(types != np.round(types)) or np.any(types < 0) or np.any(types >= self.n_types_):
            raise ValueError(f"type indices must be integers in [0, {self.n_types_})")
        out = np.empty(X.shape[0])
        for t in range(self.n_types_):
            sel = types == t
            if sel.any():
                out[sel] = contract_payment(self.menu_.contracts[t], self.env_, X[sel, 1])
        return out

    def score(self, X=None, y=None) -> float:
        """Expected profit of the fitted menu."""
        check_is_fitted(self, "menu_")
        return float(self.objective_)
