from __future__ import annotations

import cmath
from fractions import Fraction

from hypothesis import given, strategies as st

from motivic import padic

PRIMES = st.sampled_from([2, 3, 5, 7])
nonzero = st.builds(Fraction, st.integers(-500, 500).filter(bool), st.integers(1, 500))
rationals = st.builds(Fraction, st.integers(-500, 500), st.integers(1, 500))


class TestValuation:
    @given(nonzero, PRIMES)
    def test_unit_part_is_prime_to_p(self, x, p):
        u = x / Fraction(p) ** padic.vp(x, p)
        assert u.numerator % p and u.denominator % p

    @given(nonzero, nonzero, PRIMES)
    def test_valuation_is_additive(self, a, b, p):
        assert padic.vp(a * b, p) == padic.vp(a, p) + padic.vp(b, p)

    @given(nonzero, nonzero, PRIMES)
    def test_angular_component_is_multiplicative(self, a, b, p):
        assert padic.ac(a * b, p) == padic.ac(a, p) * padic.ac(b, p) % p

    @given(nonzero, PRIMES)
    def test_angular_component_is_a_nonzero_residue(self, x, p):
        assert 1 <= padic.ac(x, p) < p


class TestCharacter:
    @given(rationals, PRIMES)
    def test_fractional_part(self, x, p):
        f = padic.frac_p(x, p)
        assert 0 <= f < 1
        assert (x - f).denominator % p

    @given(rationals, rationals, PRIMES)
    def test_additive(self, a, b, p):
        assert abs(padic.E(a + b, p) - padic.E(a, p) * padic.E(b, p)) < 1e-9

    @given(st.integers(-50, 50), PRIMES)
    def test_trivial_on_maximal_ideal(self, k, p):
        assert abs(padic.E(p * k, p) - 1) < 1e-12

    @given(st.integers(-50, 50), PRIMES)
    def test_restriction_to_integers(self, k, p):
        assert abs(padic.E(k, p) - cmath.exp(2j * cmath.pi * (k % p) / p)) < 1e-9

    def test_character_sum_vanishes(self):
        for p in (3, 5, 7):
            assert abs(sum(padic.residue_char(x, p) for x in range(p))) < 1e-9


def test_coset_enumeration_size():
    for p in (2, 3):
        for M, N in ((0, 2), (1, 2), (2, 1)):
            reps = list(padic.cosets(p, N, M))
            assert len(reps) == p ** (M + N)
            # distinct modulo p^N
            assert len({r % p ** N if r.denominator == 1 else r for r in reps}) == len(reps)


def test_coset_ord_ac_detects_small_cosets():
    assert padic.coset_ord_ac(Fraction(9), Fraction(0), 3, 2) is None
    assert padic.coset_ord_ac(Fraction(6), Fraction(0), 3, 2) == (1, 2)
