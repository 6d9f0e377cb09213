"""Command-line entry point: ``fishergame <command> --input market.json``.

Exit codes: 0 success, 1 schema error, 2 solver failure, 3 invariant breach.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from fractions import Fraction

import numpy as np

from . import twobuyer as tb
from .allocation import is_conflict_free, payoff_report
from .deviation import check_necessary_conditions, conflict_removal, verify_ne
from .errors import (ConvergenceFailure, FisherGameError, InfeasiblePolytope, InvalidMarket,
                     InvalidProfile, InvariantViolation, PriceCollapse)
from .io import SchemaError, dumps, read_problem
from .market import StrategyProfile, solve_equilibrium
from .reproduce import render_table, reproduce_examples
from .tolerances import DEFAULT, Tolerances

COMMANDS = ("solve", "analyze", "verify-ne", "conflict-removal", "curve", "price-range",
            "reproduce-examples")

EXIT_SCHEMA, EXIT_SOLVER, EXIT_INVARIANT = 1, 2, 3


def _parse_tolerances(items):
    kw = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise SchemaError(f"--tolerance expects KEY=VAL, got {item!r}")
        key = key.strip().replace("eps_", "").replace("tau_", "")
        if key not in Tolerances.__dataclass_fields__:
            raise SchemaError(f"unknown tolerance {key!r}")
        kw[key] = int(value) if key == "max_iter" else float(value)
    try:
        return DEFAULT.override(**kw)
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc


def _profile(problem):
    return problem.profile if problem.profile is not None else problem.market.truthful()


def _solve(problem, args, tol):
    market, profile = problem.market, _profile(problem)
    outcome = solve_equilibrium(market, profile, tol)
    report = payoff_report(market, outcome, tol)
    return {"equilibrium": outcome.to_json(), "payoffs": report.to_json()}


def _analyze(problem, args, tol):
    market, profile = problem.market, _profile(problem)
    out = _solve(problem, args, tol)
    outcome = solve_equilibrium(market, profile, tol)
    out["necessary_conditions"] = list(check_necessary_conditions(market, profile, tol, outcome).as_tuple())
    if market.num_buyers == 2:
        om = tb.order_goods(market)
        curve = tb.payoff_curve(om)
        rng = random.Random(args.seed)
        # Monte Carlo: random mixtures of random profiles stay under the frontier
        samples = []
        for _ in range(20):
            rows = [[rng.randint(1, 9) for _ in range(market.num_goods)] for _ in range(2)]
            try:
                pay = _payoff_pair(market, StrategyProfile(rows), tol)
            except FisherGameError:
                continue
            samples.append(pay)
        weights = np.array([rng.random() for _ in samples])
        mixed = (weights[:, None] * np.array(samples)).sum(axis=0) / weights.sum() if samples else None
        out["two_buyer"] = {
            "order": list(om.permutation),
            "is_nesp": tb.is_nesp(om, profile, tol),
            "containing_sets": tb.containing_polyhedra(om, om.alpha_of(profile), tol)
            if profile.is_symmetric() else [],
            "correlated_sample": None if mixed is None else {
                "payoff": mixed.tolist(),
                "dominated": tb.correlated_dominance_check(curve, mixed, tol)},
        }
    return out


def _payoff_pair(market, profile, tol):
    outcome = solve_equilibrium(market, profile, tol)
    return payoff_report(market, outcome, tol).selected_payoffs


def _verify(problem, args, tol):
    return verify_ne(problem.market, _profile(problem), args.oracle_depth, tol).to_json()


def _conflict_removal(problem, args, tol):
    market, profile = problem.market, _profile(problem)
    buyer = int(problem.extra.get("buyer", 0))
    delta = float(Fraction(str(problem.extra.get("delta", "1/10"))))
    moved, trace = conflict_removal(market, profile, buyer, delta, tol)
    outcome = solve_equilibrium(market, moved, tol)
    free, _ = is_conflict_free(market, outcome, tol)
    return {
        "buyer": buyer,
        "delta": delta,
        "trace": [s.to_json() for s in trace],
        "profile": [list(r) for r in moved.rows],
        "equilibrium": outcome.to_json(),
        "payoffs": payoff_report(market, outcome, tol).to_json(),
        "conflict_free": free,
    }


def _curve(problem, args, tol):
    om = tb.order_goods(problem.market)
    curve = tb.payoff_curve(om)
    steps = args.alpha_steps
    sweep = [Fraction(k, steps) if om.exact else k / steps for k in range(steps + 1)] if steps else None
    if args.output and args.output.endswith(".csv"):
        return curve.to_csv(sweep, om)
    return curve.to_json(sweep, om)


def _price_range(problem, args, tol):
    om = tb.order_goods(problem.market)
    if "payoff" in problem.extra:
        point = [Fraction(str(v)) if om.exact else float(v) for v in problem.extra["payoff"]]
    elif problem.profile is not None:
        point = tb.nice_allocation(om, problem.profile).payoffs
    else:
        raise SchemaError("price-range needs a 'payoff' pair or a symmetric 'profile'")
    ranges = tb.price_range_at_payoff(om, point, tol)
    return {"payoff": list(point),
            "intervals": {str(j): [r.low, r.high] for j, r in ranges.items()}}


def _reproduce(args, tol):
    cells = reproduce_examples(tol, args.oracle_depth)
    return {"cells": [c.to_json() for c in cells],
            "all_pass": all(c.passed for c in cells),
            "table": render_table(cells)}


HANDLERS = {
    "solve": _solve,
    "analyze": _analyze,
    "verify-ne": _verify,
    "conflict-removal": _conflict_removal,
    "curve": _curve,
    "price-range": _price_range,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="fishergame", description=__doc__.splitlines()[0])
    ap.add_argument("command_pos", nargs="?", choices=COMMANDS, metavar="command",
                    help="one of: " + ", ".join(COMMANDS))
    ap.add_argument("--command", choices=COMMANDS, help="alternative to the positional command")
    ap.add_argument("--input", help="market JSON file")
    ap.add_argument("--output", help="write the result here instead of stdout (.csv for curve CSV)")
    ap.add_argument("--alpha-steps", type=int, default=0, help="curve: sample t(alpha) at k/N")
    ap.add_argument("--oracle-depth", type=int, default=3, help="best-response grid refinement rounds")
    ap.add_argument("--seed", type=int, default=0, help="seed for Monte Carlo sampling")
    ap.add_argument("--tolerance", action="append", metavar="KEY=VAL",
                    help="override a tolerance, e.g. eq=1e-10 (repeatable)")
    return ap


def _emit(result, path):
    text = result if isinstance(result, str) else dumps(result)
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _fail(code, kind, exc):
    sys.stderr.write(dumps({"error": kind, "message": str(exc)}))
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    command = args.command or args.command_pos
    if command is None:
        build_parser().print_usage(sys.stderr)
        return EXIT_SCHEMA
    try:
        tol = _parse_tolerances(args.tolerance)
        if command == "reproduce-examples":
            result = _reproduce(args, tol)
        else:
            if not args.input:
                raise SchemaError(f"{command} needs --input")
            problem = read_problem(args.input)
            result = HANDLERS[command](problem, args, tol)
    except (SchemaError, InvalidMarket, InvalidProfile, json.JSONDecodeError, OSError) as exc:
        return _fail(EXIT_SCHEMA, type(exc).__name__, exc)
    except (InvariantViolation, AssertionError) as exc:
        return _fail(EXIT_INVARIANT, type(exc).__name__, exc)
    except (ConvergenceFailure, PriceCollapse, InfeasiblePolytope, FisherGameError, ValueError) as exc:
        return _fail(EXIT_SOLVER, type(exc).__name__, exc)
    _emit(result, args.output)
    return 0


if __name__ == "__main__":
    sys.exit(main())
