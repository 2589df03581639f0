from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from motivic.coeff_ring import RingAElem, is_equal, nu_q
from motivic.errors import NotIntegrable, PointOutsideDomain
from motivic.polys import Poly
from motivic.presburger import DefinableMap, LinTerm, PresburgerSet, cong, conj, ge, le
from motivic.presburger_constructible import (
    PresFunction, PresTerm, faulhaber, integrability_test_Z, sum_over_Z,
)
from motivic.presburger.formula import TOP

VARS = ("n", "m")
n, m = LinTerm.var("n"), LinTerm.var("m")
QUADRANT = PresburgerSet.from_formula(conj(ge(n, 0), ge(m, 0)), VARS)
TRUNC = 160


def _support():
    atoms = st.sampled_from([
        ge(n, 0), ge(m, 0), ge(m, n), le(m, n + 2), cong(m, 0, 2), cong(n + m, 1, 3), ge(n, 3),
    ])
    return st.lists(atoms, min_size=0, max_size=3).map(
        lambda fs: PresburgerSet.from_formula(conj(ge(m, 0), ge(n, 0), *fs), VARS))


@st.composite
def convergent_functions(draw):
    """Functions on the first quadrant decaying in m (so summable over m)."""
    terms = []
    for _ in range(draw(st.integers(1, 3))):
        coeff = draw(st.sampled_from([RingAElem.integer(1), RingAElem.integer(-2), RingAElem.L_pow(-1),
                                      RingAElem.geometric(-1)]))
        poly = draw(st.sampled_from([Poly.const(1), Poly.var("m"), Poly.var("m") ** 2, Poly.var("n") * Poly.var("m")]))
        beta = LinTerm({"n": draw(st.integers(-1, 0)), "m": draw(st.integers(-2, -1))}, draw(st.integers(-1, 1)))
        s = draw(_support())
        for cell in s.pieces:
            terms.append(PresTerm(coeff, poly, beta, cell))
    return PresFunction(VARS, QUADRANT, terms)


def truncated_sum(phi: PresFunction, n_val: int, q) -> Fraction:
    return sum((phi.nu({"n": n_val, "m": k}, q) for k in range(0, TRUNC)), Fraction(0))


class TestSummation:
    @given(convergent_functions())
    def test_sum_matches_truncated_series(self, phi):
        total = phi.sum_over("m")
        for n_val in range(0, 4):
            for q in (2, 3):
                got = total.nu({"n": n_val}, q)
                assert abs(got - truncated_sum(phi, n_val, q)) < Fraction(1, 10 ** 20)

    @given(convergent_functions())
    def test_sum_is_linear(self, phi):
        psi = phi * 3 + phi
        assert is_equal(psi.sum_over("m").value({"n": 1}), phi.sum_over("m").value({"n": 1}) * 4)

    @pytest.mark.parametrize("p", range(7))
    def test_faulhaber(self, p):
        F = faulhaber(p)
        for K in range(0, 12):
            assert F.evaluate({"K": K}) == sum(Fraction(k) ** p for k in range(K + 1))

    def test_finite_window(self):
        s = PresburgerSet.from_formula(conj(ge(m, n), le(m, n + 4)), VARS)
        phi = PresFunction.polynomial(VARS, Poly.var("m") ** 2).restrict(s)
        total = phi.sum_over("m")
        for n_val in range(-3, 4):
            assert total.nu({"n": n_val}, 2) == sum(k * k for k in range(n_val, n_val + 5))

    def test_two_variable_order_independence(self):
        phi = PresFunction.L_power(VARS, -n - m * 2).restrict(QUADRANT)
        a = phi.sum_over(["n", "m"])
        b = phi.sum_over(["m", "n"])
        assert is_equal(a.value(()), b.value(()))
        want = RingAElem.geometric(-1) * RingAElem.geometric(-2)
        assert is_equal(a.value(()), want)


class TestIntegrability:
    @pytest.mark.parametrize("phi", [
        PresFunction.L_power(("n",), n),
        PresFunction.constant(("n",), 1),
    ])
    def test_divergent_rejected_with_progression(self, phi):
        phi = phi.restrict(PresburgerSet.from_formula(ge(n, 0), ("n",)))
        ok, witness = integrability_test_Z(phi, "n")
        assert not ok
        assert "progression" in witness

    def test_polynomial_times_decay_accepted(self):
        phi = (PresFunction.polynomial(("n",), Poly.var("n") ** 5)
               * PresFunction.L_power(("n",), -n)).restrict(PresburgerSet.from_formula(ge(n, 0), ("n",)))
        ok, witness = integrability_test_Z(phi, "n")
        assert ok and witness is None

    def test_two_sided_decay_required(self):
        phi = PresFunction.L_power(("n",), -n)
        with pytest.raises(NotIntegrable):
            sum_over_Z(phi, "n")

    def test_partial_sums_diverge_at_q2(self):
        phi = PresFunction.L_power(("n",), n).restrict(PresburgerSet.from_formula(ge(n, 0), ("n",)))
        partial = [sum(phi.nu({"n": k}, 2) for k in range(K)) for K in (10, 20, 40)]
        assert partial[0] < partial[1] < partial[2] and partial[2] > 10 ** 11


class TestPointwise:
    @given(convergent_functions(), convergent_functions())
    def test_arithmetic_is_pointwise(self, phi, psi):
        for pt in [(0, 0), (1, 3), (4, 2)]:
            for q in (2, Fraction(5, 2)):
                assert (phi + psi).nu(pt, q) == phi.nu(pt, q) + psi.nu(pt, q)
                assert (phi * psi).nu(pt, q) == phi.nu(pt, q) * psi.nu(pt, q)

    @given(convergent_functions())
    def test_exact_value_specializes(self, phi):
        for pt in [(0, 0), (2, 1), (3, 5)]:
            assert nu_q(phi.value(pt), 3) == phi.nu(pt, 3)

    @given(convergent_functions())
    def test_pullback_is_composition(self, phi):
        w = LinTerm.var("w")
        mp = DefinableMap.affine(("w", "u"), VARS, {"n": w + 1, "m": LinTerm.var("u") * 2})
        pulled = phi.pullback(mp)
        for wv, uv in [(0, 0), (1, 2), (2, 1)]:
            assert pulled.nu({"w": wv, "u": uv}, 2) == phi.nu({"n": wv + 1, "m": 2 * uv}, 2)

    def test_outside_domain(self):
        phi = PresFunction.constant(VARS, 1, QUADRANT)
        with pytest.raises(PointOutsideDomain):
            phi.nu((-1, 0), 2)

    def test_collect_merges_tiled_supports(self):
        even = PresFunction.indicator(("n",), PresburgerSet.from_formula(cong(n, 0, 2), ("n",)))
        odd = PresFunction.indicator(("n",), PresburgerSet.from_formula(cong(n, 1, 2), ("n",)))
        total = (even + odd).collect()
        assert len(total.terms) == 1 and total.terms[0].support == TOP
