"""Acceptance criteria 1-10, one test per criterion.

``conftest.pytest_terminal_summary`` prints one ``criterion N: PASS/FAIL``
line per test at the end of the run.
"""

from __future__ import annotations

import cmath
import json
import random
import time
from fractions import Fraction

from motivic.cells import (
    AffineChange, Cell, CellFunction, ball_coset_count, check_change_of_variables, integrate_cell1,
    large_ball_exp_sum, make_piece,
)
from motivic.cli import main
from motivic.coeff_ring import RingAElem, is_equal, nu_q
from motivic.constructible import ConstructibleExpFn, Space, dissociate
from motivic.dsl import load_scenario
from motivic.functoriality import check_commutativity, check_fubini
from motivic.polys import Poly
from motivic.presburger import LinTerm, PresburgerSet, cong, conj, ge, le
from motivic.presburger_constructible import PresFunction, integrability_test_Z, sum_over_Z
from motivic.residue_ring import ExpClass
from motivic.verdicts import SYMBOLIC, UNEQUAL

from conftest import SCENARIOS

n, m = LinTerm.var("n"), LinTerm.var("m")
L = RingAElem.L_pow(1)
TOL = 1e-9


# --- criterion 1 -------------------------------------------------------------------

def _random_elem(rng: random.Random, depth: int = 3):
    """A ring element with an independent evaluator q -> Fraction."""
    if depth == 0 or rng.random() < 0.3:
        kind = rng.randrange(3)
        if kind == 0:
            k = rng.randint(-4, 4)
            return RingAElem.integer(k), lambda q: Fraction(k)
        if kind == 1:
            k = rng.randint(-3, 3)
            return RingAElem.L_pow(k), lambda q: Fraction(q) ** k
        c = rng.choice([-3, -2, -1, 1, 2])
        return RingAElem.geometric(c), lambda q: 1 / (1 - Fraction(q) ** c)
    (a, fa), (b, fb) = _random_elem(rng, depth - 1), _random_elem(rng, depth - 1)
    op = rng.randrange(3)
    if op == 0:
        return a + b, lambda q: fa(q) + fb(q)
    if op == 1:
        return a * b, lambda q: fa(q) * fb(q)
    return a - b, lambda q: fa(q) - fb(q)


def test_criterion_1_coefficient_ring():
    rng = random.Random(20261015)
    qs = (Fraction(2), Fraction(3), Fraction(5, 2))
    t0 = time.perf_counter()
    for _ in range(200):
        (a, fa), (b, fb), (c, _) = (_random_elem(rng) for _ in range(3))
        assert is_equal(a + b, b + a) and is_equal(a * b, b * a)
        assert is_equal(a * (b + c), a * b + a * c)
        assert is_equal((a * b) * c, a * (b * c))
        assert is_equal(a - a, RingAElem.integer(0))
        for q in qs:
            assert nu_q(a, q) == fa(q) and nu_q(b, q) == fb(q)
            assert nu_q(a + b, q) == nu_q(a, q) + nu_q(b, q)
            assert nu_q(a * b, q) == nu_q(a, q) * nu_q(b, q)
    assert time.perf_counter() - t0 < 5


# --- criterion 2 -------------------------------------------------------------------

def test_criterion_2_geometric_summation():
    nonneg = PresburgerSet.from_formula(ge(n, 0), ("n",))
    positive = PresburgerSet.from_formula(ge(n, 1), ("n",))
    even = PresburgerSet.from_formula(conj(ge(n, 0), cong(n, 0, 2)), ("n",))
    decay = PresFunction.L_power(("n",), -n)
    cases = [
        (decay.restrict(nonneg), 1 / (1 - L.inverse()), lambda k: k >= 0, lambda k: 1),
        ((PresFunction.polynomial(("n",), Poly.var("n")) * decay).restrict(positive),
         L.inverse() * ((1 - L.inverse()) ** 2).inverse(), lambda k: k >= 1, lambda k: k),
        (decay.restrict(even), (1 - RingAElem.L_pow(-2)).inverse(), lambda k: k >= 0 and k % 2 == 0, lambda k: 1),
    ]
    for phi, closed, member, weight in cases:
        total = sum_over_Z(phi, "n").value({})
        assert is_equal(total, closed)
        for q in (2, 3):
            partial = sum(Fraction(weight(k)) * Fraction(q) ** -k for k in range(61) if member(k))
            assert abs(float(nu_q(total, q) - partial)) < 1e-12


# --- criterion 3 -------------------------------------------------------------------

def test_criterion_3_integrability():
    nonneg = PresburgerSet.from_formula(ge(n, 0), ("n",))
    grow = PresFunction.L_power(("n",), n).restrict(nonneg)
    flat = PresFunction.constant(("n",), 1).restrict(nonneg)
    quintic = (PresFunction.polynomial(("n",), Poly.var("n") ** 5) * PresFunction.L_power(("n",), -n)).restrict(nonneg)
    for phi in (grow, flat):
        ok, witness = integrability_test_Z(phi, "n")
        assert not ok and "progression" in witness
        s20, s40, s80 = (sum(phi.nu({"n": k}, 2) for k in range(K)) for K in (20, 40, 80))
        assert s40 - s20 >= 20 and s80 - s40 >= 40
    ok, witness = integrability_test_Z(quintic, "n")
    assert ok and witness is None
    closed = nu_q(sum_over_Z(quintic, "n").value({}), 2)
    partial = [sum(quintic.nu({"n": k}, 2) for k in range(K)) for K in (100, 200)]
    assert abs(float(partial[1] - partial[0])) < 1e-12
    assert abs(float(closed - partial[1])) < 1e-12


# --- criterion 4 -------------------------------------------------------------------

def test_criterion_4_ball_volumes():
    t0 = time.perf_counter()
    base = Space("B", ("a",), (), (), PresburgerSet.from_formula(ge(LinTerm.var("a"), 0), ("a",)))
    vol = integrate_cell1(Cell.ball("z", LinTerm.var("a")), base)
    for p in (2, 3, 5):
        for alpha in (0, 1, 2):
            N = alpha + 3
            ((_, pres),) = dissociate(vol)
            want = pres.nu({"a": alpha}, p)
            assert want == nu_q(RingAElem.L_pow(-alpha - 1), p)
            for ac in range(1, p):
                count = ball_coset_count(p, alpha, ac, N)
                assert count == p ** (N - alpha - 1)
                assert Fraction(count, p ** N) == want
    assert time.perf_counter() - t0 < 10


# --- criterion 5 -------------------------------------------------------------------

def test_criterion_5_character_nullity():
    for p in (3, 5, 7):
        assert abs(sum(cmath.exp(2j * cmath.pi * x / p) for x in range(p))) < TOL
    x = Poly.var("x")
    assert ConstructibleExpFn.from_class(Space("pt"), ExpClass.variety(("x",), xi=x)).is_zero()
    for ac in (1, 2):
        assert abs(large_ball_exp_sum(3, -1, ac, 4)) < TOL


# --- criterion 6 -------------------------------------------------------------------

def test_criterion_6_change_of_variables():
    space = Space("B", ("n",), (), ("z",), PresburgerSet.from_formula(ge(n, 0), ("n",)))
    t = Poly.var("t")
    fn = CellFunction(space, [make_piece(space, [Cell.ball("z", n, 1, t)])])
    changes = [AffineChange("z", 1), AffineChange("z", 2), AffineChange("z", 0, -1, 1 + t)]
    for f in changes:
        v = check_change_of_variables(f, fn, primes=(2, 3))
        assert v.ok, v.witness
        assert v.checks > 0


# --- criterion 7 -------------------------------------------------------------------

def test_criterion_7_fubini():
    quad = PresburgerSet.from_formula(conj(ge(n, 0), ge(m, 0), le(n, m + 3)), ("n", "m"))
    zz = ConstructibleExpFn.from_pres(Space("Q", ("n", "m"), (), (), quad),
                                      PresFunction.L_power(("n", "m"), -n - 2 * m, quad))
    half = PresburgerSet.from_formula(ge(n, 0), ("n",))
    x, u = Poly.var("x"), Poly.var("u")
    zr = ConstructibleExpFn.from_class(Space("R", ("n",), ("u",), (), half),
                                       ExpClass.variety(("x",), (x ** 2 - u,), (), ("u",), x * u)
                                       ) * PresFunction.L_power(("n",), -n, half)
    box = PresburgerSet.from_formula(conj(ge(n, 0), le(n, 4)), ("n",))
    cells = Space("S", ("n",), (), ("z", "w"), box)
    stacked = CellFunction(cells, [make_piece(cells, [Cell.ball("z", n), Cell.ball("w", 2)])])
    for phi, orders in ((zz, [["n", "m"], ["m", "n"]]), (zr, [["n", "u"], ["u", "n"]]),
                        (stacked, [["z", "w"], ["w", "z"]])):
        v = check_fubini(phi, orders)
        assert v.kind == SYMBOLIC, v.witness


# --- criteria 8-10 ------------------------------------------------------------------

SUITE = sorted(SCENARIOS.glob("*.mot"))
REQUIRED = {"identity", "collapse", "embed", "square_root", "ball_family", "change_of_phase"}


def test_criterion_8_commutativity_suite():
    assert REQUIRED <= {p.stem for p in SUITE}
    t0 = time.perf_counter()
    for path in SUITE:
        rep = check_commutativity(load_scenario(path.read_text()).scenario())
        assert rep.ok, rep.to_text(timing=False)
        for c in rep.checks:
            assert c.verdict.kind != UNEQUAL
            if c.name.endswith("oracle"):
                assert c.verdict.max_delta < TOL
    square_root = load_scenario((SCENARIOS / "square_root.mot").read_text()).scenario()
    assert set(square_root.primes) >= {3, 5, 7}
    assert time.perf_counter() - t0 < 120


def test_criterion_9_proof_squares():
    seen = {"extension-square": 0, "splitting-square": 0}
    for path in SUITE:
        rep = check_commutativity(load_scenario(path.read_text()).scenario())
        names = {c.name: c.verdict for c in rep.checks}
        for key in seen:
            if key in names:
                assert names[key].ok and names[f"{key}-oracle"].ok
                assert names[f"{key}-oracle"].checks > 0
                seen[key] += 1
    assert all(count >= 3 for count in seen.values()), seen


def test_criterion_10_determinism(capsys):
    def run_suite() -> list[str]:
        outs = []
        for path in SUITE:
            main(["check-commutativity", "--scenario", str(path), "--json", "--no-timing"])
            outs.append(capsys.readouterr().out)
        return outs

    first, second = run_suite(), run_suite()
    assert first == second
    assert all("timing" not in json.loads(o) for o in first)
