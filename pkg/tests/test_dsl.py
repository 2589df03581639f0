from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from motivic.coeff_ring import RingAElem, is_equal
from motivic.dsl import (
    Bin, BoolF, Bracket, Cmp, ExistsF, FunctionDecl, Name, Neg, NotF, Num, Phase, Pow, TruthF,
    load_scenario, parse_ring, parse_scenario, print_expr, print_scenario,
)
from motivic.errors import ParseError, ValidationError
from motivic.functoriality import pushforward
from motivic.polys import Poly

from conftest import SCENARIOS
from oracles import brute_count

ALL = sorted(SCENARIOS.glob("*.mot"))

names = st.sampled_from(["a", "b", "n", "m", "x", "L", "t"]).map(Name)
nums = st.integers(0, 50).map(Num)


def _exprs(children):
    return st.one_of(
        children.map(Neg),
        st.tuples(st.sampled_from("+-*/"), children, children).map(lambda a: Bin(*a)),
        st.tuples(children, st.one_of(nums, names, nums.map(Neg))).map(lambda a: Pow(*a)),
        children.map(Phase),
    )


exprs = st.recursive(st.one_of(nums, names), _exprs, max_leaves=8)


def _formulas(children):
    return st.one_of(
        children.map(NotF),
        st.tuples(st.sampled_from(["and", "or"]), st.lists(children, min_size=2, max_size=3).map(tuple))
        .map(lambda a: BoolF(*a)),
        st.tuples(st.sampled_from(["n", "m"]), children).map(lambda a: ExistsF(*a)),
    )


atoms = st.one_of(
    st.tuples(st.sampled_from(["<=", ">=", "<", ">", "=", "!="]), exprs, exprs).map(lambda a: Cmp(*a)),
    st.tuples(exprs, exprs, st.integers(2, 7)).map(lambda a: Cmp("=_", a[0], a[1], a[2])),
    st.booleans().map(TruthF),
)
formulas = st.recursive(atoms, _formulas, max_leaves=5)


def _body(text: str):
    (stmt,) = parse_scenario(f"scenario s\nfunction f on X = {text}\n").stmts
    assert isinstance(stmt, FunctionDecl)
    return stmt.body


class TestRoundTrip:
    @given(exprs)
    def test_expressions(self, e):
        assert _body(print_expr(e)) == e

    @given(formulas)
    def test_formulas(self, f):
        assert _body(print_expr(Bracket(f))) == Bracket(f)

    @pytest.mark.parametrize("path", ALL, ids=lambda p: p.stem)
    def test_scenario_files(self, path):
        tree = parse_scenario(path.read_text())
        printed = print_scenario(tree)
        assert parse_scenario(printed) == tree
        assert print_scenario(parse_scenario(printed)) == printed

    def test_comments_and_continuation_lines(self):
        text = "scenario s  # trailing\nspace X = int(n)\nfunction f on X = cells {\n  piece (cell1 z center 0\n order n ac 1)\n}\n"
        with pytest.raises(ValidationError):
            # z is not a valued coordinate of X; the parse itself succeeds
            load_scenario(text)
        assert len(parse_scenario(text).stmts) == 2


class TestDiagnostics:
    def test_minimal_scenario(self):
        b = load_scenario("scenario m\nspace P = point\nmap id : P -> P = {}\nfunction phi on P = 1\n"
                          "roles W=P Wp=P X=P gamma=id phi=phi\n")
        assert b.name == "m" and set(b.functions) == {"phi"}

    def test_misspelled_keyword(self):
        with pytest.raises(ParseError) as info:
            parse_scenario("scenario s\nspace X = int(n)\nfucntion f on X = 1\n")
        err = info.value
        assert (err.line, err.column) == (3, 1)
        assert "function" in err.expected

    def test_error_position_inside_expression(self):
        with pytest.raises(ParseError) as info:
            parse_scenario("scenario s\nfunction f on X = L^(-n +)\n")
        assert info.value.line == 2 and info.value.column == 26

    def test_arity_inconsistent_map(self):
        with pytest.raises(ValidationError) as info:
            load_scenario("scenario s\nspace X = int(n)\nspace Y = int(a, b)\nmap g : X -> Y = { a := n }\n")
        assert info.value.clause == "map g"

    def test_unknown_keys(self):
        with pytest.raises(ParseError):
            parse_scenario("scenario s\noracle prmie=3\n")
        with pytest.raises(ParseError):
            parse_scenario("scenario s\nroles Z=X\n")

    def test_unknown_pipeline(self):
        text = (SCENARIOS / "geo.mot").read_text().replace("phi=phi", "phi=phi pipeline=fast")
        with pytest.raises(ValidationError) as info:
            load_scenario(text).scenario()
        assert info.value.clause == "roles pipeline"

    def test_undeclared_space(self):
        with pytest.raises(ValidationError):
            load_scenario("scenario s\nfunction f on X = 1\n")


class TestEvaluation:
    def test_geometric_series(self):
        b = load_scenario((SCENARIOS / "geo.mot").read_text())
        phi = b.functions["phi"]
        total = pushforward(phi, list(phi.space.vars))
        assert str(total) == "1/(1-L^-1)"

    def test_class_literal_counts(self):
        b = load_scenario("scenario s\nspace U = res(u)\nfunction f on U = exp (x*u) class [x, y : x^2 = u + y^3]\n")
        fn = b.functions["f"]
        x, y, u = Poly.var("x"), Poly.var("y"), Poly.var("u")
        for p in (3, 5):
            for uv in range(p):
                want = brute_count(("x", "y"), (x ** 2 - u - y ** 3,), (), x * u, {"u": uv}, p)
                assert abs(fn.evaluate({}, {"u": uv}, p).to_complex() - want) < 1e-9

    def test_indicator_and_powers(self):
        b = load_scenario("scenario s\nspace X = int(n) where [n >= 0]\n"
                          "function f on X = [n =_2 0] * L^(-n) + n * [n >= 3]\n")
        fn = b.functions["f"]
        for k in range(6):
            want = (3.0 ** -k if k % 2 == 0 else 0) + (k if k >= 3 else 0)
            assert fn.evaluate({"n": k}, {}, 3).to_complex() == pytest.approx(want)

    def test_parse_ring(self):
        assert is_equal(parse_ring("1/(1-L^-1)"), RingAElem.geometric(-1))
        assert is_equal(parse_ring("L^2 - 1"), RingAElem.L_pow(2) - 1)
