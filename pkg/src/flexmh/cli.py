"""Command-line entry point: flexmh <command> [--config PATH] ..."""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from contextlib import nullcontext
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import analysis
from .config import (
    InstanceConfig,
    canonical_json,
    environment_from_config,
    example_config,
    load_config,
    range_from_jsonable,
)
from .exceptions import AssumptionError, ConfigError, PropertyViolation
from .menus import Menu, is_single_full_range, maximal_range
from .model import Environment, check_assumptions
from .solvers import (
    SolveReport,
    benchmarks,
    solve_menu_convex_effort,
    solve_menu_equal_power,
    solve_menu_general,
    solve_menu_via_convexification,
    solve_ntypes_fullrange,
)

EXIT_OK, EXIT_CONFIG, EXIT_PROPERTY = 0, 2, 3
MODES = ("auto", "convex", "general", "equal-power", "convexified", "ntype")


def report_dict(rep: SolveReport) -> dict:
    m = rep.menu
    return {
        "method": rep.method,
        "regime": rep.regime,
        "objective": rep.objective,
        "alphas": m.alphas,
        "powers": m.powers,
        "payments": m.payments,
        "ranges": m.ranges,
        "distributions": [[list(a) for a in d.atoms] for d in m.distributions],
        "alpha_mh": rep.alpha_mh,
        "alpha_fb": rep.alpha_fb,
        "binding": rep.binding,
        "trace": rep.trace,
        "warnings": rep.warnings,
    }


def solve(env: Environment, cfg: InstanceConfig, mode: str = "auto") -> SolveReport:
    s = cfg.solver
    if mode == "auto":
        if env.n_types > 2:
            mode = "ntype"
        else:
            mode = "convex" if env.theta_is_concave() else "general"
    if mode == "convex":
        return solve_menu_convex_effort(env, s.menu_grid.convex, s.refine_tol, s.seed)
    if mode == "general":
        return solve_menu_general(env, s.menu_grid.general, s.refine_tol, s.seed)
    if mode == "equal-power":
        return solve_menu_equal_power(env)
    if mode == "convexified":
        rep = solve_menu_via_convexification(env, s.menu_grid.convex, s.refine_tol, s.seed)
        if rep is None:
            raise AssumptionError("the convexified instance screens with unequal powers; "
                                  "use --mode general")
        return rep
    if mode == "ntype":
        return solve_ntypes_fullrange(env, s.menu_grid.ntype)
    raise ConfigError(f"unknown mode {mode!r}")


def run_report(env: Environment, cfg: InstanceConfig, mode: str) -> dict:
    rep = solve(env, cfg, mode)
    welfare = analysis.welfare_report(env, rep)
    return {
        "config": cfg,
        "assumptions": check_assumptions(env).as_dict(),
        "solve": report_dict(rep),
        "single_full_range": is_single_full_range(rep.menu, env),
        "verification": analysis.verify_structure(rep, env),
        "welfare": welfare,
    }


def baseline_report(env: Environment) -> dict:
    mh, fb = benchmarks(env)
    rows = []
    for t in range(env.n_types):
        a, b = mh[t], fb[t]
        rows.append({
            "alpha_mh": a,
            "alpha_fb": b,
            "profit_mh": float(env.Theta(a) - env.dK(t, a) * a),
            "surplus_mh": float(env.Theta(a) - env.K(t, a)),
            "surplus_fb": float(env.Theta(b) - env.K(t, b)),
        })
    return {"types": rows}


def menu_from_file(path: str, env: Environment) -> Menu:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read menu {path}: {exc}") from None
    if "solve" in data:
        data = data["solve"]
    try:
        ranges = [range_from_jsonable(r) for r in data["ranges"]]
        return Menu.build(env, data["alphas"], data["payments"], ranges)
    except KeyError as exc:
        raise ConfigError(f"menu file lacks field {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"invalid menu: {exc}") from None


# ---------------------------------------------------------------------------
# reproduction of the bundled examples


def _golden(name, value, expected, tol):
    return {"name": name, "value": float(value), "expected": float(expected),
            "tol": float(tol), "pass": bool(abs(value - expected) <= tol)}


def reproduce_ef_ex1(steps: int = 101) -> dict:
    cfg = example_config("ef-ex1")
    env = environment_from_config(cfg)
    rep = solve(env, cfg, "convex")
    eq = solve_menu_equal_power(env)
    a0, a1 = rep.menu.alphas
    s0, s1 = eq.menu.alphas
    trace = analysis.screening_path_trace(env, steps)
    t0, t1 = trace.column("term0"), trace.column("term1")
    m1 = -trace.column("neg_m1")
    boundary = 2 * a0 ** 2 - (2 / 3) * a0 ** 3 - (4 / 3) * a1 ** 3
    golden = [
        _golden("alpha0_mh", rep.alpha_mh[0], 0.25, 1e-9),
        _golden("alpha1_mh", rep.alpha_mh[1], 0.40824829, 1e-7),
        _golden("alpha0_opt", a0, 0.23198047, 1e-5),
        _golden("alpha1_opt", a1, 0.42074019, 1e-5),
        _golden("alpha0_equal_power", s0, 0.19749115, 1e-5),
        _golden("alpha1_equal_power", s1, 0.44439977, 1e-5),
        _golden("m0", rep.menu.payments[0], 0.0, 1e-9),
        _golden("m1", rep.menu.payments[1], 0.0, 1e-9),
        _golden("binding_boundary", boundary, 0.0, 1e-5),
        {"name": "path_m1_max", "value": float(m1.max()) + 0.0, "expected": 0.0, "tol": 1e-7,
         "pass": bool(m1.max() <= 1e-7)},
        {"name": "path_terms_nondecreasing",
         "value": float(min(np.diff(t0).min(), np.diff(t1).min())), "expected": 0.0,
         "tol": 1e-12, "pass": bool(np.diff(t0).min() >= -1e-12 and np.diff(t1).min() >= -1e-12)},
    ]
    out = run_report(env, cfg, "convex")
    out["equal_power"] = report_dict(eq)
    out["golden"] = golden
    return out


def reproduce_osc_ex1() -> dict:
    cfg = example_config("osc-ex1")
    env = environment_from_config(cfg)
    gen = solve(env, cfg, "general")
    conv = solve_menu_via_convexification(env, cfg.solver.menu_grid.convex,
                                          cfg.solver.refine_tol, cfg.solver.seed)
    single = is_single_full_range(gen.menu, env)
    golden = [{"name": "single_full_range", "value": float(single), "expected": 1.0,
               "tol": 0.0, "pass": bool(single)}]
    if conv is None:
        golden.append({"name": "convexified_available", "value": 0.0, "expected": 1.0,
                       "tol": 0.0, "pass": False})
    else:
        golden.append(_golden("objective_gap", gen.objective - conv.objective, 0.0, 1e-7))
        gap = max(abs(a - b) for a, b in zip(gen.menu.alphas, conv.menu.alphas))
        golden.append(_golden("alpha_gap", gap, 0.0, 1e-7))
    # quadratic costs with linear envelope slope xi: common power xi / 2
    xi = float(env.Theta.slopes[0])
    golden += [_golden(f"kappa{t}", k, xi / 2, 1e-6) for t, k in enumerate(gen.menu.powers)]
    out = run_report(env, cfg, "general")
    if conv is not None:
        out["convexified"] = report_dict(conv)
    out["golden"] = golden
    return out


REPRODUCERS = {"ef-ex1": reproduce_ef_ex1, "osc-ex1": reproduce_osc_ex1}


# ---------------------------------------------------------------------------


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="flexmh",
                                description="Optimal contract menus with hidden types and actions")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_, config=True):
        sp = sub.add_parser(name, help=help_)
        if config:
            sp.add_argument("--config", required=True, help="instance description (JSON)")
        sp.add_argument("--out", help="write output here instead of stdout")
        sp.add_argument("--timing", action="store_true", help="include wall-clock timing")
        return sp

    add("check", "check the standing assumptions")
    sp = add("solve", "solve for the optimal menu")
    sp.add_argument("--mode", choices=MODES, default="auto")
    add("baseline", "pure moral-hazard and first-best benchmarks")
    sp = add("maximal-range", "maximal range extension of each contract in a menu")
    sp.add_argument("--menu", required=True, help="menu JSON (or a solve report)")
    sp = add("trace", "CSV of the path from the best single contract to the optimum")
    sp.add_argument("--steps", type=int, default=101)
    sp = add("reproduce", "reproduce a bundled example and check its golden numbers",
             config=False)
    sp.add_argument("example", choices=sorted(REPRODUCERS))
    return p


def _dispatch(args) -> int:
    start = time.perf_counter()
    if args.command == "reproduce":
        out = REPRODUCERS[args.example]()
        code = EXIT_OK if all(g["pass"] for g in out["golden"]) else EXIT_PROPERTY
        for g in out["golden"]:
            flag = "PASS" if g["pass"] else "FAIL"
            print(f"{flag} {g['name']}: {g['value']:.12g} (expected {g['expected']:.12g} "
                  f"+/- {g['tol']:.1g})", file=sys.stderr)
    else:
        cfg = load_config(args.config)
        env = environment_from_config(cfg)
        code = EXIT_OK
        if args.command == "check":
            rep = check_assumptions(env)
            out = {"assumptions": rep.as_dict(), "required": list(rep.required),
                   "all_required": rep.all_required}
            code = EXIT_OK if rep.all_required else EXIT_CONFIG
        elif args.command == "solve":
            out = run_report(env, cfg, args.mode)
            if not all(c["holds"] if isinstance(c, dict) else c.holds
                       for c in out["verification"]):
                code = EXIT_PROPERTY
        elif args.command == "baseline":
            out = baseline_report(env)
        elif args.command == "maximal-range":
            menu = menu_from_file(args.menu, env)
            out = {"ranges": [maximal_range(menu, env, t) for t in range(env.n_types)]}
        elif args.command == "trace":
            trace = analysis.screening_path_trace(env, args.steps)
            _emit(trace.to_csv(), args.out)
            return EXIT_OK
        else:  # pragma: no cover - argparse rejects unknown commands
            raise ConfigError(f"unknown command {args.command}")
    if args.timing:
        out["timing"] = {"seconds": time.perf_counter() - start}
    _emit(canonical_json(out), args.out)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    threads = os.environ.get("FLEXMH_THREADS")
    try:
        limit = threadpool_limits(int(threads)) if threads else nullcontext()
    except ValueError:
        print(f"error: FLEXMH_THREADS must be an integer, got {threads!r}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        with limit:
            return _dispatch(args)
    except (ConfigError, AssumptionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PropertyViolation as exc:
        print(f"property violation: {exc}", file=sys.stderr)
        return EXIT_PROPERTY


if __name__ == "__main__":
    sys.exit(main())
