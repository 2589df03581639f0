from __future__ import annotations

from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from motivic.cells import Cell, CellFunction, make_piece
from motivic.constructible import ConstructibleExpFn, Space, compare_cexp
from motivic.dsl import load_scenario
from motivic.errors import IntegrabilityViolation, NotASubset
from motivic.functoriality import (
    check_additivity, check_axioms, check_commutativity, check_fubini, check_projection_formula, i_shriek,
    integrable, pull, pull_product, pushforward, restrict,
)
from motivic.polys import Poly
from motivic.presburger import LinTerm, PresburgerSet, ge, le, conj
from motivic.presburger_constructible import PresFunction
from motivic.residue_ring import ExpClass
from motivic.verdicts import UNEQUAL

from conftest import SCENARIOS

ALL = sorted(SCENARIOS.glob("*.mot"))
n, m = LinTerm.var("n"), LinTerm.var("m")
x, u = Poly.var("x"), Poly.var("u")
QUAD = PresburgerSet.from_formula(conj(ge(n, 0), ge(m, 0)), ("n", "m"))


class TestScenarios:
    @pytest.mark.parametrize("path", ALL, ids=lambda p: p.stem)
    def test_commutes(self, path: Path):
        rep = check_commutativity(load_scenario(path.read_text()).scenario())
        assert rep.ok, rep.to_text(timing=False)
        assert all(c.verdict.kind != UNEQUAL for c in rep.checks)

    @pytest.mark.parametrize("stem, names", [
        ("identity", {"pullback-square", "pullback-square-oracle"}),
        ("embed", {"image-restricted"}),
        ("change_of_phase", {"phase-substitution", "valued-oracle"}),
        ("sum_map", {"graph-factorization"}),
        ("extension_int", {"extension-square", "extension-square-oracle", "splitting-square",
                           "splitting-square-oracle"}),
        ("composition_res", {"splitting-square", "splitting-square-oracle"}),
    ])
    def test_expected_checks_run(self, stem, names):
        rep = check_commutativity(load_scenario((SCENARIOS / f"{stem}.mot").read_text()).scenario())
        assert names <= {c.name for c in rep.checks}

    def test_false_surjectivity_claim_is_caught(self):
        text = (SCENARIOS / "embed.mot").read_text().replace("phi=phi", "phi=phi surjective")
        with pytest.raises(IntegrabilityViolation):
            check_commutativity(load_scenario(text).scenario())

    def test_mismatched_map_is_detected(self):
        text = """
scenario shifted
space W = int(w) where [w >= 0]
space Wp = int(v) where [v >= 0]
space X = int(n) where [n >= 0]
map g : W -> Wp = { v := w + 1 }
map h : W -> Wp = { v := w + 2 }
function phi on Wp * X = L^(-n - v)
roles W=W Wp=Wp X=X gamma=g phi=phi
"""
        b = load_scenario(text)
        X = b.spaces["X"]
        lhs = pushforward(pull_product(b.functions["phi"], b.maps["g"], X), X.vars)
        pushed = pushforward(b.functions["phi"], X.vars)
        assert compare_cexp(lhs, pull(pushed, b.maps["g"])).ok
        v = compare_cexp(lhs, pull(pushed, b.maps["h"]))
        assert v.kind == UNEQUAL and v.witness


class TestExtension:
    space_big = Space("A", ("n",), ("u",), (), PresburgerSet.from_formula(ge(n, 0), ("n",)))
    space_small = Space("A", ("n",), ("u",), (), PresburgerSet.from_formula(ge(n, 2), ("n",)), res_neqs=(u,))

    def _phi(self):
        a = ExpClass.variety(("x",), (x ** 2 - u,), (), ("u",))
        pres = PresFunction.L_power(("n",), -n, self.space_small.int_domain)
        return ConstructibleExpFn.from_class(self.space_small, a) * pres

    def test_extension_then_restriction(self):
        phi = self._phi()
        big = i_shriek(phi, self.space_big)
        assert compare_cexp(restrict(big, self.space_small), phi).ok
        for p in (3, 5):
            assert big.evaluate({"n": 1}, {"u": 1}, p).as_int() == 0
            assert big.evaluate({"n": 3}, {"u": 0}, p).as_int() == 0
            assert big.evaluate({"n": 3}, {"u": 1}, p) == phi.evaluate({"n": 3}, {"u": 1}, p)

    def test_not_a_subset(self):
        with pytest.raises(NotASubset):
            i_shriek(ConstructibleExpFn.one(self.space_big), self.space_small)


class TestFubini:
    def test_integer_square(self):
        pres = PresFunction.L_power(("n", "m"), -n - 2 * m, QUAD) + PresFunction.polynomial(
            ("n", "m"), Poly.var("n"), QUAD) * PresFunction.L_power(("n", "m"), -n - m, QUAD)
        phi = ConstructibleExpFn.from_pres(Space("Q", ("n", "m"), (), (), QUAD), pres)
        assert check_fubini(phi, [["n", "m"], ["m", "n"]]).ok

    def test_integer_times_residue(self):
        space = Space("Q", ("n",), ("u",), (), PresburgerSet.from_formula(ge(n, 0), ("n",)))
        a = ExpClass.variety(("x",), (x ** 3 - u,), (), ("u",), x)
        phi = ConstructibleExpFn.from_class(space, a) * PresFunction.L_power(("n",), -n, space.int_domain)
        assert check_fubini(phi, [["n", "u"], ["u", "n"]]).ok

    def test_stacked_cells(self):
        space = Space("S", ("n",), (), ("z", "w"), PresburgerSet.from_formula(conj(ge(n, 0), le(n, 3)), ("n",)))
        fn = CellFunction(space, [make_piece(space, [Cell.ball("z", n), Cell.ball("w", 1)])])
        assert check_fubini(fn, [["z", "w"], ["w", "z"]]).ok

    @given(st.integers(0, 3), st.integers(1, 3))
    def test_axioms_report(self, shift, k):
        pres = PresFunction.L_power(("n", "m"), LinTerm({"n": -k, "m": -1}, shift), QUAD)
        phi = ConstructibleExpFn.from_pres(Space("Q", ("n", "m"), (), (), QUAD), pres)
        assert check_axioms(phi, ["n", "m"]).ok


class TestAdditivityAndProjection:
    space = Space("Q", ("n",), ("u",), (), PresburgerSet.from_formula(ge(n, 0), ("n",)))

    def test_additivity(self):
        low = PresburgerSet.from_formula(le(n, 4), ("n",)).intersect(self.space.int_domain)
        high = self.space.int_domain.difference(low)
        base = PresFunction.L_power(("n",), -n, self.space.int_domain)
        parts = [ConstructibleExpFn.from_pres(self.space, base.restrict(s)) for s in (low, high)]
        assert check_additivity(parts, ["n", "u"]).ok

    def test_projection_formula(self):
        beta = ConstructibleExpFn.from_pres(self.space, PresFunction.L_power(("n",), -n, self.space.int_domain))
        beta = beta * ExpClass.variety(("x",), (x ** 2 - u,), (), ("u",))
        target = Space("U", (), ("u",))
        alpha = ConstructibleExpFn.from_class(target, ExpClass.phase(u, ("u",)))
        rep = check_projection_formula(beta, alpha, ["n"])
        assert rep.ok and rep.checks


class TestIntegrability:
    def test_divergent_function_is_flagged(self):
        space = Space("Q", ("n",), (), (), PresburgerSet.from_formula(ge(n, 0), ("n",)))
        phi = ConstructibleExpFn.from_pres(space, PresFunction.L_power(("n",), n, space.int_domain))
        ok, witness = integrable(phi, ["n"])
        assert not ok and witness

    def test_pushforward_of_point_is_identity(self):
        space = Space("P")
        one = ConstructibleExpFn.one(space)
        assert compare_cexp(pushforward(one, []), one).ok
