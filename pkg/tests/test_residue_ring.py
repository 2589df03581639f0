from __future__ import annotations

import cmath

import pytest
from hypothesis import given, strategies as st

from motivic.errors import BaseMismatch, UninstantiatedParameters
from motivic.polys import Poly
from motivic.residue_ring import (
    Cyclotomic, ExpClass, GSummand, Generator, ResVariety, canonicalize, compare_classes, count_points,
    exp_normalize, merge_decomposition, res_pullback, res_pushforward,
)
from motivic.verdicts import SYMBOLIC, UNEQUAL

from oracles import brute_count

PRIMES = (3, 5, 7)
x, y, u = Poly.var("x"), Poly.var("y"), Poly.var("u")


small_polys = st.builds(
    lambda a, b, c, d, e: x ** a * Poly.const(b) + y * Poly.const(c) + u ** d * Poly.const(e),
    st.integers(0, 3), st.integers(-2, 2), st.integers(-2, 2), st.integers(0, 2), st.integers(-2, 2),
)


class TestPointCounts:
    @given(st.lists(small_polys, max_size=2), st.lists(small_polys, max_size=1), small_polys)
    def test_count_matches_brute_force(self, eqs, neqs, xi):
        a = ExpClass.variety(("x", "y"), eqs, neqs, ("u",), xi)
        for p in (3, 5):
            for uv in range(p):
                got = count_points(a, p, {"u": uv}).to_complex()
                want = brute_count(("x", "y"), eqs, neqs, xi, {"u": uv}, p)
                assert abs(got - want) < 1e-9

    @given(st.lists(small_polys, max_size=2), st.lists(small_polys, max_size=1), small_polys)
    def test_normalization_preserves_counts(self, eqs, neqs, xi):
        a = ExpClass.variety(("x", "y"), eqs, neqs, ("u",), xi)
        b = exp_normalize(a)
        for p in PRIMES:
            for uv in range(p):
                assert count_points(a, p, {"u": uv}) == count_points(b, p, {"u": uv})

    @given(st.lists(small_polys, max_size=1), st.lists(small_polys, max_size=1))
    def test_product_counts_multiply(self, e1, e2):
        a = ExpClass.variety(("x", "y"), e1, (), ("u",))
        b = ExpClass.variety(("x", "y"), e2, (), ("u",), y)
        for p in (3, 5):
            for uv in range(p):
                lhs = count_points(a * b, p, {"u": uv})
                rhs = count_points(a, p, {"u": uv}) * count_points(b, p, {"u": uv})
                assert lhs == rhs

    def test_affine_space(self):
        for p in PRIMES:
            assert count_points(ExpClass.affine_space(3), p).as_int() == p ** 3

    def test_parameters_must_be_given(self):
        a = ExpClass.variety(("x",), (x * x - u,), (), ("u",))
        with pytest.raises(UninstantiatedParameters):
            count_points(a, 3)


class TestCharacterNullity:
    @pytest.mark.parametrize("p", PRIMES)
    def test_character_sum_vanishes(self, p):
        assert abs(sum(cmath.exp(2j * cmath.pi * k / p) for k in range(p))) < 1e-9
        assert count_points(ExpClass.variety(("x",), (), (), (), x), p).to_complex() == 0

    def test_free_line_in_phase_rewrites_to_zero(self):
        a = ExpClass.variety(("x", "y"), (y * y - u,), (), ("u",), x + u)
        assert exp_normalize(a).is_zero()

    def test_constrained_line_is_kept(self):
        a = ExpClass.variety(("x",), (x * x - u,), (), ("u",), x)
        assert not exp_normalize(a).is_zero()

    def test_order_reduction(self):
        # E(g) with ord g >= 1 is trivial; ord 0 contributes its residue to the phase
        g1 = Generator(ResVariety(("x",), (x * x - 2,)), Poly(), (GSummand("t*z", 1),))
        g0 = Generator(ResVariety(("x",), (x * x - 2,)), Poly(), (GSummand("z", 0, x),))
        a = exp_normalize(ExpClass((), {g1: 1}))
        b = exp_normalize(ExpClass((), {g0: 1}))
        assert a.identical(ExpClass.variety(("x",), (x * x - 2,)))
        assert b.identical(ExpClass.variety(("x",), (x * x - 2,), (), (), x))

    def test_affine_elimination(self):
        a = ExpClass.variety(("x", "y"), (y - x * x - u,), (), ("u",), y)
        b = ExpClass.variety(("x",), (), (), ("u",), x * x + u)
        assert exp_normalize(a).identical(exp_normalize(b))


class TestFunctoriality:
    def test_pullback_counts(self):
        a = ExpClass.variety(("x",), (x * x - u,), (), ("u",))
        v = Poly.var("v")
        b = res_pullback(a, {"u": v * v + 1}, ("v",))
        for p in PRIMES:
            for vv in range(p):
                assert count_points(b, p, {"v": vv}) == count_points(a, p, {"u": (vv * vv + 1) % p})

    def test_pushforward_sums_over_the_fiber(self):
        a = ExpClass.variety(("x",), (x * x - u,), (), ("u",), u)
        b = res_pushforward(a, ["u"], neqs=(u,))
        for p in PRIMES:
            want = Cyclotomic.of_int(p, 0)
            for uv in range(1, p):
                want = want + count_points(a, p, {"u": uv})
            assert count_points(b, p) == want

    def test_canonical_names(self):
        g1 = Generator(ResVariety(("a", "b"), (Poly.var("a") * Poly.var("b") - 1,)), Poly())
        g2 = Generator(ResVariety(("s", "r"), (Poly.var("r") * Poly.var("s") - 1,)), Poly())
        assert canonicalize(g1) == canonicalize(g2)

    def test_empty_fiber_dropped(self):
        assert ExpClass.variety(("x",), (Poly.const(1),)).is_zero()
        assert ExpClass.variety(("x",), (), (Poly.const(0),)).is_zero()

    def test_merge_decomposition(self):
        line = Generator(ResVariety(("x",)), Poly())
        zero = Generator(ResVariety(("x",), (x,)), Poly())
        punct = Generator(ResVariety(("x",), (), (x,)), Poly())
        a = ExpClass((), {zero: 1, punct: 1})
        merged = merge_decomposition(a, line, [zero, punct])
        assert merged.identical(ExpClass.affine_space(1))

    def test_base_mismatch(self):
        with pytest.raises(BaseMismatch):
            ExpClass.one(("u",)) + ExpClass.one(("v",))


class TestCompare:
    def test_symbolic(self):
        a = ExpClass.variety(("x",), (x - u,), (), ("u",))
        assert compare_classes(a, ExpClass.one(("u",))).kind == SYMBOLIC

    def test_unequal(self):
        a = ExpClass.variety(("x",), (x * x - u,), (), ("u",))
        assert compare_classes(a, ExpClass.one(("u",))).kind == UNEQUAL

    def test_phase_printing(self):
        assert str(ExpClass.phase(Poly.const(1))) == "e(1)"
        assert str(ExpClass.one()) == "[]"
