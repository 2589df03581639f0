from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from motivic.coeff_ring import RingAElem
from motivic.constructible import (
    ConstructibleExpFn, Space, SpaceMap, build, compare_cexp, dissociate, grade,
)
from motivic.errors import ArityMismatch, BaseMismatch, DimensionMismatch
from motivic.polys import Poly
from motivic.presburger import LinTerm, PresburgerSet, ge, le, conj
from motivic.presburger_constructible import PresFunction
from motivic.residue_ring import ExpClass
from motivic.verdicts import SPECIALIZATION, SYMBOLIC, UNEQUAL

from oracles import brute_count

PRIMES = (3, 5, 7)
x, y, u = Poly.var("x"), Poly.var("y"), Poly.var("u")
n = LinTerm.var("n")
NONNEG = PresburgerSet.from_formula(ge(n, 0), ("n",))
POINT = Space("pt")
LINE = Space("U", (), ("u",))
HALF = Space("N", ("n",), ("u",), int_domain=NONNEG)


def _unit_value(fn: ConstructibleExpFn, p: int) -> complex:
    return fn.evaluate({}, {}, p).to_complex()


class TestBuild:
    def test_free_line_becomes_L(self):
        fn = ConstructibleExpFn.from_class(POINT, ExpClass.variety(("x",)))
        assert str(fn) == "L"
        for p in PRIMES:
            assert _unit_value(fn, p) == p

    def test_punctured_line_becomes_L_minus_one(self):
        fn = ConstructibleExpFn.from_class(POINT, ExpClass.variety(("x",), (), (x,)))
        for p in PRIMES:
            assert abs(_unit_value(fn, p) - (p - 1)) < 1e-12
        assert compare_cexp(fn, ConstructibleExpFn.from_pres(
            POINT, PresFunction.constant((), RingAElem.L_pow(1) - 1))).kind == SYMBOLIC

    def test_nontrivial_character_on_line_vanishes(self):
        fn = ConstructibleExpFn.from_class(POINT, ExpClass.variety(("x",), xi=x))
        for p in PRIMES:
            assert abs(_unit_value(fn, p)) < 1e-12

    def test_multiplicities_move_to_presburger_factor(self):
        a = ExpClass.variety(("x",), (x ** 2 - u,), (), ("u",))
        fn = ConstructibleExpFn.from_class(LINE, a + a + a)
        ((_, pres),) = dissociate(fn)
        assert pres.value({}) == RingAElem.integer(3)

    def test_build_rejects_foreign_parameters(self):
        a = ExpClass.variety(("x",), (x - y,), (), ("y",))
        with pytest.raises(BaseMismatch):
            build(LINE, [(a, PresFunction.constant((), 1))])

    def test_build_is_idempotent(self):
        a = ExpClass.variety(("x", "y"), (x * y - u,), (), ("u",), x + y)
        fn = ConstructibleExpFn.from_class(LINE, a)
        assert str(fn.normalized()) == str(fn)


@st.composite
def half_functions(draw):
    """Sums of (residue class) x (L^{-kn} or indicator) on HALF, with a direct evaluator."""
    pieces = []
    for _ in range(draw(st.integers(1, 3))):
        eq = draw(st.sampled_from([None, x ** 2 - u, x * y - u, x - y * u, x ** 3 - 1]))
        neq = draw(st.sampled_from([None, x, u, x + y]))
        xi = draw(st.sampled_from([Poly(), x, x * u, y + 2 * x]))
        k = draw(st.integers(0, 2))
        c = draw(st.integers(-2, 2))
        eqs, neqs = (() if eq is None else (eq,)), (() if neq is None else (neq,))
        pieces.append((eqs, neqs, xi, k, c))
    return pieces


def _realize(pieces):
    pairs = []
    for eqs, neqs, xi, k, c in pieces:
        a = ExpClass.variety(("x", "y"), eqs, neqs, ("u",), xi)
        pres = PresFunction.L_power(("n",), LinTerm({"n": -k}), NONNEG).scale(RingAElem.integer(c))
        pairs.append((a, pres))
    return build(HALF, pairs)


def _direct(pieces, nv, uv, p) -> complex:
    total = 0j
    for eqs, neqs, xi, k, c in pieces:
        total += c * brute_count(("x", "y"), eqs, neqs, xi, {"u": uv}, p) * Fraction(p) ** (-k * nv)
    return total


class TestEvaluation:
    @given(half_functions())
    def test_matches_direct_sum(self, pieces):
        fn = _realize(pieces)
        for p in (3, 5):
            for nv in (0, 1, 3):
                for uv in range(p):
                    got = fn.evaluate({"n": nv}, {"u": uv}, p).to_complex()
                    assert abs(got - _direct(pieces, nv, uv, p)) < 1e-9

    @given(half_functions(), half_functions())
    def test_ring_operations_commute_with_evaluation(self, a, b):
        fa, fb = _realize(a), _realize(b)
        for p in (3, 5):
            for uv in range(p):
                va = fa.evaluate({"n": 1}, {"u": uv}, p)
                vb = fb.evaluate({"n": 1}, {"u": uv}, p)
                assert (fa + fb).evaluate({"n": 1}, {"u": uv}, p) == va + vb
                assert (fa * fb).evaluate({"n": 1}, {"u": uv}, p) == va * vb

    @given(half_functions())
    def test_difference_with_self_is_zero(self, pieces):
        fn = _realize(pieces)
        assert (fn - fn).is_zero()


class TestPushForward:
    @given(half_functions())
    def test_residue_push_sums_over_fibers(self, pieces):
        fn = _realize(pieces)
        pushed = fn.push_res(["u"])
        for p in (3, 5):
            for nv in (0, 2):
                want = sum(_direct(pieces, nv, uv, p) for uv in range(p))
                got = pushed.evaluate({"n": nv}, {}, p).to_complex()
                assert abs(got - want) < 1e-9

    def test_integer_sum_is_geometric(self):
        a = ExpClass.variety(("x",), (x ** 2 - u,), (), ("u",))
        pres = PresFunction.L_power(("n",), LinTerm({"n": -1}), NONNEG)
        fn = build(HALF, [(a, pres)])
        summed = fn.sum_int(["n"])
        for p in PRIMES:
            for uv in range(p):
                roots = sum(1 for t in range(p) if (t * t - uv) % p == 0)
                want = roots * p / (p - 1)
                assert abs(summed.evaluate({}, {"u": uv}, p).to_complex() - want) < 1e-9

    def test_push_respects_space_constraints(self):
        unit = Space("Ux", (), ("u",), res_neqs=(u,))
        fn = ConstructibleExpFn.one(unit)
        for p in PRIMES:
            assert abs(fn.push_res(["u"]).evaluate({}, {}, p).to_complex() - (p - 1)) < 1e-12


class TestPullback:
    @given(half_functions(), st.sampled_from([u ** 2, u + 1, 2 * u, u ** 3 - u]), st.integers(0, 2))
    def test_pullback_is_composition(self, pieces, image, shift):
        fn = _realize(pieces)
        f = SpaceMap.make(HALF, HALF, {"u": image}, {"n": n + shift})
        back = fn.pullback(f)
        for p in (3, 5):
            for uv in range(p):
                for nv in (0, 2):
                    ip, rp = f({"n": nv}, {"u": uv}, p)
                    assert back.evaluate({"n": nv}, {"u": uv}, p) == fn.evaluate(ip, rp, p)

    def test_identity_pullback(self):
        fn = _realize([((x ** 2 - u,), (), x, 1, 1)])
        assert compare_cexp(fn.pullback(SpaceMap.identity(HALF)), fn).kind == SYMBOLIC

    def test_map_must_cover_residue_coordinates(self):
        with pytest.raises(ArityMismatch):
            SpaceMap.make(POINT, LINE, {}, {})
        with pytest.raises(ArityMismatch):
            SpaceMap.make(POINT, LINE, {"u": y}, {})


class TestComparison:
    def test_equal_up_to_normal_form(self):
        # x^2 = u splits off the x = 0 point when u = 0; both sides count the same points
        a = ExpClass.variety(("x",), (x ** 2 - u,), (), ("u",))
        b = ExpClass.variety(("x",), (x ** 2 - u,), (x,), ("u",)) + ExpClass.variety(("x",), (x, u), (), ("u",))
        v = compare_cexp(ConstructibleExpFn.from_class(LINE, a), ConstructibleExpFn.from_class(LINE, b))
        assert v.ok and v.kind in (SYMBOLIC, SPECIALIZATION)

    def test_unequal_reports_witness(self):
        a = ExpClass.variety(("x",), (x ** 2 - u,), (), ("u",))
        b = ExpClass.variety(("x",), (x ** 3 - u,), (), ("u",))
        v = compare_cexp(ConstructibleExpFn.from_class(LINE, a), ConstructibleExpFn.from_class(LINE, b))
        assert v.kind == UNEQUAL
        assert {"p", "res", "lhs", "rhs"} <= set(v.witness)

    def test_spaces_must_agree(self):
        with pytest.raises(BaseMismatch):
            ConstructibleExpFn.one(LINE) + ConstructibleExpFn.one(POINT)

    def test_product_rejects_shared_coordinates(self):
        with pytest.raises(ArityMismatch):
            LINE.product(HALF)


class TestGrade:
    def test_lower_dimensional_pieces_are_dropped(self):
        big = ConstructibleExpFn.from_class(POINT, ExpClass.variety(("x", "y")))
        small = ConstructibleExpFn.from_class(POINT, ExpClass.variety(("x",)))
        g = grade([(big, 2), (small, 1)])
        assert g.dim == 2 and len(g.dropped) == 1
        assert g == grade([(big, 2)])

    def test_piece_above_declared_dimension(self):
        one = ConstructibleExpFn.one(POINT)
        with pytest.raises(DimensionMismatch):
            grade([(one, 3)], dim=2)
        with pytest.raises(DimensionMismatch):
            grade([])


def test_restriction_to_integer_subset():
    fn = _realize([((), (), Poly(), 0, 1)])
    box = PresburgerSet.from_formula(conj(ge(n, 0), le(n, 2)), ("n",))
    cut = fn.restrict_int(box)
    for p in (3, 5):
        assert cut.evaluate({"n": 2}, {"u": 0}, p).to_complex() == pytest.approx(p ** 2)
        assert cut.evaluate({"n": 3}, {"u": 0}, p).to_complex() == 0
