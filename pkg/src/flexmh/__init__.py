"""Optimal contract menus when agents have hidden types and hidden actions."""
from .analysis import (
    classify_regime,
    screening_path_trace,
    verify_structure,
    welfare_report,
)
from .config import InstanceConfig, environment_from_config, example_config, load_config
from .contracts import DesignContract, agent_best_response, design_contract
from .estimator import ContractMenuSolver
from .exceptions import AssumptionError, ConfigError, PropertyViolation
from .funcspace import (
    LinearEffort,
    PiecewiseLinearEffort,
    PiecewiseLinearFn,
    PolynomialCost,
    PowerCost,
    PowerEffort,
    ScaledCost,
    upper_concave_envelope,
)
from .menus import Menu, check_feasibility, maximal_range, minimal_payments
from .model import FULL, Environment, Interval, Points, build_environment, check_assumptions
from .solvers import (
    brute_force_oracle,
    solve_first_best,
    solve_menu_convex_effort,
    solve_menu_equal_power,
    solve_menu_general,
    solve_menu_via_convexification,
    solve_ntypes_fullrange,
    solve_pure_mh,
)

__version__ = "0.1.0"

__all__ = [
    "AssumptionError", "ConfigError", "ContractMenuSolver", "DesignContract", "Environment",
    "FULL", "InstanceConfig", "Interval", "LinearEffort", "Menu", "PiecewiseLinearEffort",
    "PiecewiseLinearFn", "Points", "PolynomialCost", "PowerCost", "PowerEffort",
    "PropertyViolation", "ScaledCost", "agent_best_response", "brute_force_oracle",
    "build_environment", "check_assumptions", "check_feasibility", "classify_regime",
    "design_contract", "environment_from_config", "example_config", "load_config",
    "maximal_range", "minimal_payments", "screening_path_trace", "solve_first_best",
    "solve_menu_convex_effort", "solve_menu_equal_power", "solve_menu_general",
    "solve_menu_via_convexification", "solve_ntypes_fullrange", "solve_pure_mh",
    "upper_concave_envelope", "verify_structure", "welfare_report",
]
