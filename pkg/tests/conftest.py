from __future__ import annotations

from fractions import Fraction
from pathlib import Path

from hypothesis import settings, strategies as st

from motivic.coeff_ring import RingAElem

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"
GOLDEN = Path(__file__).resolve().parent / "golden"

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def _atom():
    """Ring atoms paired with an independent evaluator q -> Fraction."""
    ints = st.integers(-4, 4).map(lambda n: (RingAElem.integer(n), lambda q, n=n: Fraction(n)))
    powers = st.integers(-3, 3).map(lambda k: (RingAElem.L_pow(k), lambda q, k=k: Fraction(q) ** k))
    geos = st.sampled_from([-3, -2, -1, 1, 2]).map(
        lambda c: (RingAElem.geometric(c), lambda q, c=c: 1 / (1 - Fraction(q) ** c)))
    return st.one_of(ints, powers, geos)


def _combine(children):
    def add(a, b):
        return a[0] + b[0], lambda q: a[1](q) + b[1](q)

    def mul(a, b):
        return a[0] * b[0], lambda q: a[1](q) * b[1](q)

    def sub(a, b):
        return a[0] - b[0], lambda q: a[1](q) - b[1](q)

    return st.one_of(
        st.tuples(children, children).map(lambda ab: add(*ab)),
        st.tuples(children, children).map(lambda ab: mul(*ab)),
        st.tuples(children, children).map(lambda ab: sub(*ab)),
    )


ring_with_oracle = st.recursive(_atom(), _combine, max_leaves=6)
ring_elems = ring_with_oracle.map(lambda pair: pair[0])


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion."""
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            _, sep, name = getattr(rep, "nodeid", "").rpartition("::test_criterion_")
            if sep and getattr(rep, "when", "call") in ("call", "setup"):
                num, _, label = name.partition("_")
                lines.append((int(num), f"criterion {num} ({label.replace('_', ' ')}): "
                                        f"{'PASS' if outcome == 'passed' else 'FAIL'}"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(set(lines)):
            terminalreporter.write_line(line)

