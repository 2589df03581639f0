"""Command-line front end: ``motivic <command> SCENARIO.mot [options]``.

Exit status is 0 when every verdict passes, 1 when a check fails or a
push-forward is not integrable, and 2 on parse or validation errors.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction
from pathlib import Path

from .cells import CellFunction
from .dsl import Bundle, build_bundle, parse_scenario, print_scenario
from .errors import MotivicError, NotIntegrable, ParseError, ValidationError
from .functoriality import (
    Report, _jsonable, brute_push, check_axioms, check_commutativity, integrable, pull, pull_product, pushforward,
    valued_oracle,
)
from .verdicts import SPECIALIZATION, UNEQUAL, Verdict

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
TOL = 1e-9


def _q(text: str) -> Fraction:
    return Fraction(text)


def _csv(text: str) -> list[str]:
    return [s.strip() for s in text.split(",") if s.strip()]


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="motivic", description="Constructible motivic exponential functions.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, function=True):
        p.add_argument("--scenario", required=True, type=Path, help="scenario file (.mot)")
        p.add_argument("--json", action="store_true", help="emit JSON")
        p.add_argument("--no-timing", action="store_true", help="omit timings so reports are byte-stable")
        if function:
            p.add_argument("--function", help="function name (default: the phi role)")
        return p

    def oracle_opts(p):
        p.add_argument("--q", action="append", type=_q, help="specialization value of L (repeatable)")
        p.add_argument("--prime", action="append", type=int, help="residue characteristic (repeatable)")
        p.add_argument("--level", type=int, help="coset level for valued oracles")
        p.add_argument("--box", type=int, help="integer box radius for brute-force sums")
        return p

    common(sub.add_parser("normalize", help="print the canonical form of a scenario file"), function=False)
    common(sub.add_parser("sum", help="integrate a function over all of its coordinates"))
    push = common(sub.add_parser("push", help="push a function forward, forgetting coordinates"))
    push.add_argument("--forget", type=_csv, help="comma-separated coordinates (default: those of role X)")
    pl = common(sub.add_parser("pull", help="pull a function back along a map"))
    pl.add_argument("--map", help="map name (default: the gamma role)")
    oracle_opts(common(sub.add_parser("check-commutativity", help="run the commutation checks"), function=False))
    ax = oracle_opts(common(sub.add_parser("check-axioms", help="Fubini, additivity and projection formula")))
    ax.add_argument("--forget", type=_csv)
    ax.add_argument("--alpha", help="function for the projection formula (default: the alpha role)")
    orc = oracle_opts(common(sub.add_parser("oracle", help="compare a push-forward with brute-force sums")))
    orc.add_argument("--forget", type=_csv)
    return ap


def _function(b: Bundle, name: str | None):
    name = name or b.roles.get("phi")
    if name is None:
        if len(b.functions) != 1:
            raise ValidationError("no phi role; pass --function", "roles phi")
        name = next(iter(b.functions))
    if name not in b.functions:
        raise ValidationError(f"unknown function {name}", "function")
    return b.functions[name]


def _default_forget(b: Bundle, fn) -> list[str]:
    X = b.role("X", "spaces")
    if X is None:
        raise ValidationError("no X role; pass --forget", "roles X")
    return [v for v in fn.space.vars if v in set(X.vars)]


def _value(fn) -> str:
    return str(fn)


def _emit(args, payload: dict, text: str) -> None:
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(text)


def _not_integrable(args, exc: NotIntegrable, scenario: str) -> int:
    rep = Report(scenario, integrability={"phi": False},
                 error={"stage": exc.stage, "message": str(exc), "witness": _jsonable(exc.witness)})
    _emit(args, rep.to_json(timing=False), rep.to_text(timing=False))
    return EXIT_FAIL


def _report(args, rep: Report) -> int:
    timing = not args.no_timing
    _emit(args, rep.to_json(timing), rep.to_text(timing))
    return EXIT_OK if rep.ok else EXIT_FAIL


def run(args) -> int:
    text = args.scenario.read_text()
    if args.command == "normalize":
        sf = parse_scenario(text)
        out = print_scenario(sf)
        _emit(args, {"scenario": sf.name, "text": out}, out.rstrip("\n"))
        return EXIT_OK
    b = build_bundle(parse_scenario(text))
    try:
        if args.command == "sum":
            fn = _function(b, args.function)
            res = pushforward(fn, list(fn.space.vars))
            _emit(args, {"scenario": b.name, "value": _value(res)}, _value(res))
            return EXIT_OK
        if args.command == "push":
            fn = _function(b, args.function)
            forget = args.forget if args.forget is not None else _default_forget(b, fn)
            res = pushforward(fn, forget)
            _emit(args, {"scenario": b.name, "forget": forget, "value": _value(res)}, _value(res))
            return EXIT_OK
        if args.command == "pull":
            fn = _function(b, args.function)
            gamma = b.maps.get(args.map) if args.map else b.role("gamma", "maps")
            if gamma is None:
                raise ValidationError("no map given and no gamma role", "map")
            if set(fn.space.vars) == set(gamma.target.vars):
                res = pull(fn, gamma)
            else:
                res = pull_product(fn, gamma, fn.space.drop(gamma.target.vars, "X"))
            _emit(args, {"scenario": b.name, "value": _value(res)}, _value(res))
            return EXIT_OK
    except NotIntegrable as exc:
        return _not_integrable(args, exc, b.name)

    qs = tuple(args.q) if args.q else None
    primes = tuple(args.prime) if args.prime else None
    if args.command == "check-commutativity":
        sc = b.scenario(qs, primes, args.level, args.box)
        return _report(args, check_commutativity(sc))
    fn = _function(b, args.function)
    forget = args.forget if args.forget is not None else _default_forget(b, fn)
    qs = qs or tuple(b.oracle.get("q") or (2, 3))
    primes = primes or tuple(b.oracle.get("prime") or (3, 5, 7))
    if args.command == "check-axioms":
        alpha_name = args.alpha or b.roles.get("alpha")
        alpha = b.functions.get(alpha_name) if alpha_name else None
        rep = check_axioms(fn, forget, alpha, qs, primes)
        rep.scenario = b.name
        return _report(args, rep)
    box = args.box or b.oracle.get("box", 30)
    return _report(args, oracle_report(b.name, fn, forget, primes, box))


def oracle_report(name: str, fn, forget, primes, box: int) -> Report:
    """Symbolic push-forward against brute-force sums at L = p."""
    rep = Report(name)
    t0 = time.perf_counter()
    ok, w = integrable(fn, forget)
    rep.integrability = {"phi": ok}
    if not ok:
        rep.error = w
        return rep
    if isinstance(fn, CellFunction):
        rep.add("valued-oracle", valued_oracle(fn, primes[:2]))
        fn = fn.integrate()
        forget = [v for v in forget if v not in fn.space.val_vars and v in fn.space.vars]
    sym = pushforward(fn, forget)
    checks, worst = 0, 0.0
    verdict = None
    for p in primes:
        for ip in sym.space.int_points(2, 8):
            for rp in sym.space.res_points(p, 4):
                want = sym.evaluate(ip, rp, p).to_complex()
                got = brute_push(fn, forget, ip, rp, p, box)
                checks += 1
                delta = abs(want - got)
                worst = max(worst, delta)
                if delta > TOL and verdict is None:
                    verdict = Verdict(UNEQUAL, {"p": p, "int": ip, "res": rp, "symbolic": str(want),
                                                "brute": str(got)}, checks, delta)
    rep.add("brute-force", verdict or Verdict(SPECIALIZATION, None, checks, worst))
    rep.timing["total"] = time.perf_counter() - t0
    return rep


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return run(args)
    except ParseError as exc:
        print(f"{args.scenario}:{exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValidationError as exc:
        print(f"{args.scenario}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"motivic: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except MotivicError as exc:
        print(f"motivic: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
