"""Scenario files: lexer, parser, printer and evaluation into engine objects.

A scenario file is a sequence of newline-terminated statements::

    scenario geo
    space X = int(n) where [n >= 0]
    function phi on X = L^(-n)
    roles X=X phi=phi
    oracle q=2 q=3 prime=5 box=40

Newlines inside brackets are ignored, so ``cells { ... }`` blocks may span
lines.  ``print_scenario(parse_scenario(text))`` re-parses to the same tree.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from .cells import Cell, CellFunction, Presentation, make_piece
from .coeff_ring import RingAElem
from .constructible import ConstructibleExpFn, Space, SpaceMap
from .errors import MotivicError, ParseError, ValidationError
from .functoriality import Scenario
from .polys import Poly
from .presburger import (
    FALSE, TRUE, Exists, LinTerm, Not, PresburgerSet, cong, conj, disj, eq, ge, le,
)
from .presburger_constructible import PresFunction
from .residue_ring import ExpClass

ROLE_KEYS = ("W", "Wp", "X", "Y", "W2", "gamma", "gamma2", "f", "phi", "phi2", "phi_small", "ambient",
             "alpha", "pipeline")
ROLE_FLAGS = ("surjective",)
PIPELINES = ("direct", "phase")
ORACLE_KEYS = ("q", "prime", "level", "box", "wbox")
STATEMENTS = ("scenario", "space", "map", "function", "roles", "oracle")


# --- tokens -----------------------------------------------------------------------------

@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<nl>\n)
  | (?P<num>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<op>:=|->|<=|>=|!=|=_|[=<>+\-*/^()\[\]{},;:.|])
""", re.VERBOSE)

_OPEN, _CLOSE = "([{", ")]}"


def tokenize(text: str) -> list[Token]:
    out: list[Token] = []
    line, col, pos, depth = 1, 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        s = m.group()
        if kind == "nl":
            if depth == 0 and out and out[-1].kind != "nl":
                out.append(Token("nl", "\n", line, col))
            line, col = line + 1, 1
        elif kind not in ("ws", "comment"):
            if s in _OPEN:
                depth += 1
            elif s in _CLOSE:
                depth = max(0, depth - 1)
            out.append(Token(kind, s, line, col))
        if kind != "nl":
            col += len(s)
        pos = m.end()
    if out and out[-1].kind != "nl":
        out.append(Token("nl", "\n", line, col))
    out.append(Token("eof", "", line, col))
    return out


# --- syntax tree -----------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: int


@dataclass(frozen=True)
class Name:
    id: str


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class Bin:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Pow:
    base: object
    exp: object


@dataclass(frozen=True)
class Phase:
    """``e(poly)``: residue character of a polynomial."""

    arg: object


@dataclass(frozen=True)
class Bracket:
    formula: object


@dataclass(frozen=True)
class ClassLit:
    bound: tuple | None
    conds: tuple
    xi: object = None


@dataclass(frozen=True)
class Cmp:
    op: str
    left: object
    right: object
    modulus: int | None = None


@dataclass(frozen=True)
class BoolF:
    op: str
    args: tuple


@dataclass(frozen=True)
class NotF:
    arg: object


@dataclass(frozen=True)
class ExistsF:
    var: str
    body: object


@dataclass(frozen=True)
class TruthF:
    value: bool


@dataclass(frozen=True)
class SpaceDecl:
    name: str
    ints: tuple = ()
    ress: tuple = ()
    vals: tuple = ()
    where: object = None
    nonzero: tuple = ()
    zero: tuple = ()


@dataclass(frozen=True)
class MapDecl:
    name: str
    source: str
    target: str
    assigns: tuple


@dataclass(frozen=True)
class CellSpec:
    kind: str
    var: str
    center: object
    order: object = None
    ac: object = None
    jac: object = None
    present: tuple | None = None


@dataclass(frozen=True)
class PieceSpec:
    cells: tuple
    weight: object = None
    phase: object = None


@dataclass(frozen=True)
class FunctionDecl:
    name: str
    spaces: tuple
    body: object


@dataclass(frozen=True)
class KeyValues:
    kind: str
    items: tuple


@dataclass(frozen=True)
class ScenarioFile:
    name: str
    stmts: tuple


# --- parser ------------------------------------------------------------------------------

_CMP_OPS = ("<=", ">=", "<", ">", "=", "!=", "=_")


class Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    # helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, msg: str, expected=()):
        t = self.tok
        raise ParseError(f"{msg}, found {t.text!r}" if t.kind != "eof" else f"{msg}, found end of input",
                         t.line, t.col, expected)

    def at(self, *texts: str) -> bool:
        return self.tok.kind in ("op", "ident") and self.tok.text in texts

    def accept(self, *texts: str) -> Token | None:
        if self.at(*texts):
            t = self.tok
            self.i += 1
            return t
        return None

    def expect(self, *texts: str) -> Token:
        t = self.accept(*texts)
        if t is None:
            self.error("unexpected token", texts)
        return t

    def ident(self, what: str = "identifier") -> str:
        if self.tok.kind != "ident":
            self.error(f"expected {what}", (what,))
        t = self.tok
        self.i += 1
        return t.text

    def number(self) -> int:
        if self.tok.kind != "num":
            self.error("expected a number", ("number",))
        t = self.tok
        self.i += 1
        return int(t.text)

    def end_stmt(self):
        if self.tok.kind != "nl":
            self.error("expected end of statement", ("newline",))
        self.i += 1

    # file
    def parse_file(self) -> ScenarioFile:
        while self.tok.kind == "nl":
            self.i += 1
        self.expect("scenario")
        name = self.ident("scenario name")
        self.end_stmt()
        stmts = []
        while self.tok.kind != "eof":
            if self.tok.kind == "nl":
                self.i += 1
                continue
            stmts.append(self.statement())
        return ScenarioFile(name, tuple(stmts))

    def statement(self):
        if self.accept("space"):
            out = self.space_decl()
        elif self.accept("map"):
            out = self.map_decl()
        elif self.accept("function"):
            out = self.function_decl()
        elif self.accept("roles"):
            out = self.key_values("roles", ROLE_KEYS, ROLE_FLAGS)
        elif self.accept("oracle"):
            out = self.key_values("oracle", ORACLE_KEYS, ())
        else:
            self.error("unknown statement", STATEMENTS[1:])
        self.end_stmt()
        return out

    def space_decl(self) -> SpaceDecl:
        name = self.ident("space name")
        self.expect("=")
        if self.accept("point"):
            return SpaceDecl(name)
        parts = {"int": (), "res": (), "val": ()}
        where, nonzero, zero = None, (), ()
        seen = False
        while True:
            if self.at("int", "res", "val"):
                key = self.tok.text
                self.i += 1
                self.expect("(")
                parts[key] = self.ident_list()
                self.expect(")")
            elif self.accept("where"):
                self.expect("[")
                where = self.formula()
                self.expect("]")
            elif self.at("nonzero", "zero"):
                key = self.tok.text
                self.i += 1
                self.expect("(")
                items = [self.expr()]
                while self.accept(","):
                    items.append(self.expr())
                self.expect(")")
                if key == "zero":
                    zero = tuple(items)
                else:
                    nonzero = tuple(items)
            else:
                if not seen:
                    self.error("empty space declaration", ("point", "int", "res", "val"))
                break
            seen = True
        return SpaceDecl(name, parts["int"], parts["res"], parts["val"], where, nonzero, zero)

    def ident_list(self) -> tuple:
        if self.at(")"):
            return ()
        out = [self.ident()]
        while self.accept(","):
            out.append(self.ident())
        return tuple(out)

    def map_decl(self) -> MapDecl:
        name = self.ident("map name")
        self.expect(":")
        src = self.ident("source space")
        self.expect("->")
        tgt = self.ident("target space")
        self.expect("=")
        self.expect("{")
        assigns = []
        if not self.at("}"):
            while True:
                v = self.ident("coordinate")
                self.expect(":=")
                assigns.append((v, self.expr()))
                if not self.accept(","):
                    break
        self.expect("}")
        return MapDecl(name, src, tgt, tuple(assigns))

    def function_decl(self) -> FunctionDecl:
        name = self.ident("function name")
        self.expect("on")
        spaces = [self.ident("space name")]
        while self.accept("*"):
            spaces.append(self.ident("space name"))
        self.expect("=")
        if self.accept("cells"):
            self.expect("{")
            pieces = [self.piece()]
            while self.accept(";"):
                pieces.append(self.piece())
            self.expect("}")
            body = tuple(pieces)
        else:
            body = self.expr()
        return FunctionDecl(name, tuple(spaces), body)

    def piece(self) -> PieceSpec:
        self.expect("piece")
        self.expect("(")
        cells = [self.cell()]
        while self.accept(","):
            cells.append(self.cell())
        self.expect(")")
        weight = phase = None
        if self.accept("weight"):
            weight = self.expr()
        if self.accept("phase"):
            phase = self.expr()
        return PieceSpec(tuple(cells), weight, phase)

    def cell(self) -> CellSpec:
        kind = self.expect("cell1", "cell0").text
        var = self.ident("valued coordinate")
        self.expect("center")
        center = self.expr()
        if kind == "cell0":
            jac = self.expr() if self.accept("jac") else None
            return CellSpec("zero", var, center, jac=jac)
        self.expect("order")
        order = self.expr()
        self.expect("ac")
        ac = self.expr()
        present = None
        if self.accept("present"):
            present = (self.ident("integer coordinate"), self.ident("residue coordinate"))
        return CellSpec("one", var, center, order, ac, None, present)

    def key_values(self, kind: str, keys, flags) -> KeyValues:
        items = []
        while self.tok.kind == "ident":
            key = self.tok.text
            if key in flags:
                self.i += 1
                items.append((key, True))
                continue
            if key not in keys:
                self.error(f"unknown {kind} key", tuple(keys) + tuple(flags))
            self.i += 1
            self.expect("=")
            if self.tok.kind == "num":
                n = self.number()
                if self.accept("/"):
                    items.append((key, Fraction(n, self.number())))
                else:
                    items.append((key, n))
            else:
                items.append((key, self.ident("value")))
        return KeyValues(kind, tuple(items))

    # expressions
    def expr(self):
        left = self.term()
        while self.at("+", "-"):
            op = self.tok.text
            self.i += 1
            left = Bin(op, left, self.term())
        return left

    def term(self):
        left = self.unary()
        while self.at("*", "/"):
            op = self.tok.text
            self.i += 1
            left = Bin(op, left, self.unary())
        return left

    def unary(self):
        if self.accept("-"):
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.accept("^"):
            return Pow(base, self.exponent())
        return base

    def exponent(self):
        if self.accept("-"):
            return Neg(self.exponent())
        return self.atom()

    def atom(self):
        t = self.tok
        if t.kind == "num":
            self.i += 1
            return Num(int(t.text))
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        if self.accept("["):
            f = self.formula()
            self.expect("]")
            return Bracket(f)
        if self.at("class", "exp"):
            return self.class_lit()
        if t.kind == "ident":
            if t.text == "e" and self.toks[self.i + 1].text == "(":
                self.i += 2
                e = self.expr()
                self.expect(")")
                return Phase(e)
            self.i += 1
            return Name(t.text)
        self.error("expected an expression", ("number", "identifier", "(", "[", "class", "exp"))

    def class_lit(self) -> ClassLit:
        xi = None
        if self.accept("exp"):
            self.expect("(")
            xi = self.expr()
            self.expect(")")
        self.expect("class")
        self.expect("[")
        bound = None
        save = self.i
        if self.tok.kind == "ident":
            names = [self.ident()]
            while self.accept(","):
                names.append(self.ident())
            if self.accept(":"):
                bound = tuple(names)
            else:
                self.i = save
        conds = []
        if not self.at("]"):
            conds.append(self.comparison())
            while self.accept("and"):
                conds.append(self.comparison())
        self.expect("]")
        return ClassLit(bound, tuple(conds), xi)

    # formulas
    def formula(self):
        args = [self.conjunction()]
        while self.accept("or"):
            args.append(self.conjunction())
        return args[0] if len(args) == 1 else BoolF("or", tuple(args))

    def conjunction(self):
        args = [self.fatom()]
        while self.accept("and"):
            args.append(self.fatom())
        return args[0] if len(args) == 1 else BoolF("and", tuple(args))

    def fatom(self):
        if self.accept("not"):
            return NotF(self.fatom())
        if self.accept("exists"):
            v = self.ident("bound variable")
            self.expect(".")
            return ExistsF(v, self.fatom())
        if self.accept("true"):
            return TruthF(True)
        if self.accept("false"):
            return TruthF(False)
        if self.at("("):
            save = self.i
            try:
                self.i += 1
                f = self.formula()
                self.expect(")")
                if not self.at(*_CMP_OPS, "+", "-", "*", "/", "^"):
                    return f
            except ParseError:
                pass
            self.i = save
        return self.comparison()

    def comparison(self) -> Cmp:
        left = self.expr()
        if not self.at(*_CMP_OPS):
            self.error("expected a comparison", _CMP_OPS)
        op = self.tok.text
        self.i += 1
        mod = self.number() if op == "=_" else None
        return Cmp(op, left, self.expr(), mod)


def parse_scenario(text: str) -> ScenarioFile:
    return Parser(text).parse_file()


# --- printer -------------------------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _prec(e) -> int:
    if isinstance(e, Bin):
        return _PREC[e.op]
    if isinstance(e, Neg):
        return 3
    if isinstance(e, Pow):
        return 4
    return 5


def print_expr(e, ctx: int = 0) -> str:
    if isinstance(e, Num):
        s = str(e.value)
    elif isinstance(e, Name):
        s = e.id
    elif isinstance(e, Neg):
        s = "-" + print_expr(e.arg, 3)
    elif isinstance(e, Bin):
        p = _PREC[e.op]
        s = f"{print_expr(e.left, p)} {e.op} {print_expr(e.right, p + 1)}"
    elif isinstance(e, Pow):
        s = f"{print_expr(e.base, 5)}^{_print_exp(e.exp)}"
    elif isinstance(e, Phase):
        s = f"e({print_expr(e.arg)})"
    elif isinstance(e, Bracket):
        s = f"[{print_formula(e.formula)}]"
    elif isinstance(e, ClassLit):
        head = f"exp ({print_expr(e.xi)}) " if e.xi is not None else ""
        bound = f"{', '.join(e.bound)} : " if e.bound is not None else ""
        s = f"{head}class [{bound}{' and '.join(print_formula(c) for c in e.conds)}]"
        if e.bound is not None and not e.conds:
            s = f"{head}class [{', '.join(e.bound)} :]"
    else:
        raise TypeError(f"not an expression node: {e!r}")
    return f"({s})" if _prec(e) < ctx else s


def _print_exp(e) -> str:
    if isinstance(e, (Num, Name)):
        return print_expr(e)
    if isinstance(e, Neg) and isinstance(e.arg, (Num, Name, Neg)):
        return "-" + _print_exp(e.arg)
    return f"({print_expr(e)})"


def print_formula(f, ctx: int = 0) -> str:
    if isinstance(f, Cmp):
        op = f"=_{f.modulus}" if f.op == "=_" else f.op
        return f"{print_expr(f.left)} {op} {print_expr(f.right)}"
    if isinstance(f, TruthF):
        return "true" if f.value else "false"
    if isinstance(f, NotF):
        return f"not {print_formula(f.arg, 3)}"
    if isinstance(f, ExistsF):
        return f"exists {f.var} . {print_formula(f.body, 3)}"
    if isinstance(f, BoolF):
        p = 1 if f.op == "or" else 2
        s = f" {f.op} ".join(print_formula(a, p + 1) for a in f.args)
        return f"({s})" if p < ctx else s
    raise TypeError(f"not a formula node: {f!r}")


def _print_cell(c: CellSpec) -> str:
    if c.kind == "zero":
        s = f"cell0 {c.var} center {print_expr(c.center)}"
        return s + (f" jac {print_expr(c.jac)}" if c.jac is not None else "")
    s = f"cell1 {c.var} center {print_expr(c.center)} order {print_expr(c.order)} ac {print_expr(c.ac)}"
    return s + (f" present {c.present[0]} {c.present[1]}" if c.present else "")


def _print_value(v) -> str:
    if v is True:
        return ""
    return str(v)


def print_stmt(s) -> str:
    if isinstance(s, SpaceDecl):
        parts = []
        for key, vs in (("int", s.ints), ("res", s.ress), ("val", s.vals)):
            if vs:
                parts.append(f"{key}({', '.join(vs)})")
        if s.where is not None:
            parts.append(f"where [{print_formula(s.where)}]")
        if s.nonzero:
            parts.append(f"nonzero({', '.join(print_expr(e) for e in s.nonzero)})")
        if s.zero:
            parts.append(f"zero({', '.join(print_expr(e) for e in s.zero)})")
        return f"space {s.name} = {' '.join(parts) if parts else 'point'}"
    if isinstance(s, MapDecl):
        body = ", ".join(f"{v} := {print_expr(e)}" for v, e in s.assigns)
        return f"map {s.name} : {s.source} -> {s.target} = {{{' ' + body + ' ' if body else ''}}}"
    if isinstance(s, FunctionDecl):
        head = f"function {s.name} on {' * '.join(s.spaces)} = "
        if isinstance(s.body, tuple):
            pieces = []
            for pc in s.body:
                t = f"piece ({', '.join(_print_cell(c) for c in pc.cells)})"
                if pc.weight is not None:
                    t += f" weight {print_expr(pc.weight)}"
                if pc.phase is not None:
                    t += f" phase {print_expr(pc.phase)}"
                pieces.append(t)
            return head + "cells { " + " ; ".join(pieces) + " }"
        return head + print_expr(s.body)
    if isinstance(s, KeyValues):
        items = [k if v is True else f"{k}={_print_value(v)}" for k, v in s.items]
        return " ".join([s.kind] + items)
    raise TypeError(f"not a statement: {s!r}")


def print_scenario(sf: ScenarioFile) -> str:
    return "\n".join([f"scenario {sf.name}"] + [print_stmt(s) for s in sf.stmts]) + "\n"


# --- evaluation ----------------------------------------------------------------------------

@dataclass
class Bundle:
    """Everything a scenario file defines, evaluated."""

    ast: ScenarioFile
    spaces: dict = field(default_factory=dict)
    maps: dict = field(default_factory=dict)
    functions: dict = field(default_factory=dict)
    roles: dict = field(default_factory=dict)
    oracle: dict = field(default_factory=dict)

    @property
    def name(self) -> str:
        return self.ast.name

    def role(self, key: str, kind: str = "functions"):
        name = self.roles.get(key)
        if name is None:
            return None
        table = getattr(self, kind)
        if name not in table:
            raise ValidationError(f"{key}={name} is not a declared {kind[:-1]}", f"roles {key}")
        return table[name]

    def scenario(self, qs=None, primes=None, level=None, box=None):
        missing = [k for k in ("W", "Wp", "X", "gamma", "phi") if k not in self.roles]
        if missing:
            raise ValidationError(f"missing roles {missing}", "roles")
        pipeline = self.roles.get("pipeline", "direct")
        if pipeline not in PIPELINES:
            raise ValidationError(f"unknown pipeline {pipeline}; expected one of {list(PIPELINES)}", "roles pipeline")
        o = self.oracle
        return Scenario(
            self.name, self.role("W", "spaces"), self.role("Wp", "spaces"), self.role("X", "spaces"),
            self.role("gamma", "maps"), self.role("phi"), bool(self.roles.get("surjective")),
            self.role("Y", "spaces"), self.role("f", "maps"), self.role("ambient", "spaces"),
            self.role("phi_small"), self.role("gamma2", "maps"), self.role("W2", "spaces"), self.role("phi2"),
            pipeline,
            tuple(qs or o.get("q") or (2, 3)), tuple(primes or o.get("prime") or (3, 5, 7)),
            level or o.get("level", 4), box or o.get("box", 30), o.get("wbox", 2))


def load_scenario(text: str) -> Bundle:
    return build_bundle(parse_scenario(text))


def build_bundle(sf: ScenarioFile) -> Bundle:
    b = Bundle(sf)
    for s in sf.stmts:
        if isinstance(s, SpaceDecl):
            if s.name in b.spaces:
                raise ValidationError(f"space {s.name} declared twice", f"space {s.name}")
            b.spaces[s.name] = _space(s)
        elif isinstance(s, MapDecl):
            b.maps[s.name] = _map(s, b)
        elif isinstance(s, FunctionDecl):
            b.functions[s.name] = _function(s, b)
        elif s.kind == "roles":
            for k, v in s.items:
                b.roles[k] = v
        else:
            for k, v in s.items:
                if k in ("q", "prime"):
                    b.oracle.setdefault(k, []).append(v)
                else:
                    b.oracle[k] = v
    return b


def _names(e) -> set:
    if isinstance(e, Name):
        return {e.id}
    if isinstance(e, (Num,)) or e is None:
        return set()
    if isinstance(e, (Neg, Phase)):
        return _names(e.arg)
    if isinstance(e, Bin):
        return _names(e.left) | _names(e.right)
    if isinstance(e, Pow):
        return _names(e.base) | _names(e.exp)
    if isinstance(e, Cmp):
        return _names(e.left) | _names(e.right)
    if isinstance(e, BoolF):
        return set().union(*(_names(a) for a in e.args))
    if isinstance(e, NotF):
        return _names(e.arg)
    if isinstance(e, ExistsF):
        return _names(e.body) - {e.var}
    if isinstance(e, Bracket):
        return _names(e.formula)
    if isinstance(e, ClassLit):
        out = set().union(*(_names(c) for c in e.conds)) if e.conds else set()
        return (out | _names(e.xi)) - set(e.bound or ())
    return set()


def to_poly(e) -> Poly:
    if isinstance(e, Num):
        return Poly.const(e.value)
    if isinstance(e, Name):
        return Poly.var(e.id)
    if isinstance(e, Neg):
        return -to_poly(e.arg)
    if isinstance(e, Bin):
        a, b = to_poly(e.left), to_poly(e.right)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if not b.is_constant() or b.is_zero():
            raise ValidationError(f"division by {b} in a polynomial", "expression")
        return a.scale(1 / b.constant_value())
    if isinstance(e, Pow):
        n = _int_value(e.exp)
        base = to_poly(e.base)
        if n < 0 and len(base.terms) != 1:
            raise ValidationError(f"negative power of {base}", "expression")
        return base ** n
    raise ValidationError(f"{print_expr(e)} is not a polynomial", "expression")


def _int_value(e) -> int:
    p = to_poly(e)
    if not p.is_constant() or p.constant_value().denominator != 1:
        raise ValidationError(f"{print_expr(e)} is not an integer constant", "expression")
    return int(p.constant_value())


def to_lin(e) -> LinTerm:
    p = to_poly(e)
    if p.total_degree() > 1 or any(k < 0 for m in p.terms for _, k in m):
        raise ValidationError(f"{print_expr(e)} is not affine", "expression")
    coeffs = {m[0][0]: c for m, c in p.terms.items() if m}
    return LinTerm(coeffs, p.terms.get((), 0))


def to_presburger(f):
    if isinstance(f, TruthF):
        return TRUE if f.value else FALSE
    if isinstance(f, NotF):
        return Not(to_presburger(f.arg))
    if isinstance(f, ExistsF):
        return Exists(f.var, to_presburger(f.body))
    if isinstance(f, BoolF):
        parts = [to_presburger(a) for a in f.args]
        return conj(*parts) if f.op == "and" else disj(*parts)
    a, b = to_lin(f.left), to_lin(f.right)
    if f.op == "<=":
        return le(a, b)
    if f.op == "<":
        return le(a, b - 1)
    if f.op == ">=":
        return ge(a, b)
    if f.op == ">":
        return ge(a, b + 1)
    if f.op == "=":
        return eq(a, b)
    if f.op == "!=":
        return Not(eq(a, b))
    return cong(a - b, 0, f.modulus)


def _space(s: SpaceDecl) -> Space:
    clause = f"space {s.name}"
    dom = None
    try:
        if s.where is not None:
            extra = _names(s.where) - set(s.ints)
            if extra:
                raise ValidationError(f"domain uses {sorted(extra)}, not integer coordinates", clause)
            dom = PresburgerSet.from_formula(to_presburger(s.where), s.ints)
        for e in s.nonzero + s.zero:
            extra = _names(e) - set(s.ress)
            if extra:
                raise ValidationError(f"residue constraint uses {sorted(extra)}", clause)
        return Space(s.name, s.ints, s.ress, s.vals, dom, tuple(to_poly(e) for e in s.zero),
                     tuple(to_poly(e) for e in s.nonzero))
    except ValidationError:
        raise
    except MotivicError as exc:
        raise ValidationError(str(exc), clause) from exc


def _get_space(b: Bundle, name: str, clause: str) -> Space:
    if name not in b.spaces:
        raise ValidationError(f"unknown space {name}", clause)
    return b.spaces[name]


def _map(s: MapDecl, b: Bundle) -> SpaceMap:
    clause = f"map {s.name}"
    src, tgt = _get_space(b, s.source, clause), _get_space(b, s.target, clause)
    given = [v for v, _ in s.assigns]
    if sorted(given) != sorted(set(tgt.int_vars) | set(tgt.res_vars)) or len(set(given)) != len(given):
        raise ValidationError(f"assignments {given} do not match the coordinates of {tgt.name} "
                              f"{list(tgt.int_vars) + list(tgt.res_vars)}", clause)
    res_map, int_map = {}, {}
    for v, e in s.assigns:
        if v in tgt.int_vars:
            extra = _names(e) - set(src.int_vars)
            if extra:
                raise ValidationError(f"image of {v} uses {sorted(extra)}, not integer coordinates of {src.name}", clause)
            int_map[v] = to_lin(e)
        else:
            extra = _names(e) - set(src.res_vars)
            if extra:
                raise ValidationError(f"image of {v} uses {sorted(extra)}, not residue coordinates of {src.name}", clause)
            res_map[v] = to_poly(e)
    try:
        return SpaceMap.make(_nonvalued(src), _nonvalued(tgt), res_map, int_map)
    except MotivicError as exc:
        raise ValidationError(str(exc), clause) from exc


def _nonvalued(s: Space) -> Space:
    return Space(s.name, s.int_vars, s.res_vars, (), s.int_domain, s.res_eqs, s.res_neqs)


def _function(s: FunctionDecl, b: Bundle):
    clause = f"function {s.name}"
    space = _get_space(b, s.spaces[0], clause)
    for name in s.spaces[1:]:
        space = space.product(_get_space(b, name, clause), f"{space.name}x{name}")
    try:
        if isinstance(s.body, tuple):
            pieces = [_piece(pc, space, clause) for pc in s.body]
            return CellFunction(space, pieces)
        if space.val_vars:
            raise ValidationError("functions on spaces with valued coordinates need a cells block", clause)
        return to_function(s.body, space, clause)
    except (ValidationError, ParseError):
        raise
    except MotivicError as exc:
        raise ValidationError(str(exc), clause) from exc


def _piece(pc: PieceSpec, space: Space, clause: str):
    cells = []
    for c in pc.cells:
        center = to_poly(c.center)
        if c.kind == "zero":
            cells.append(Cell.graph(c.var, center, to_lin(c.jac) if c.jac is not None else None))
            continue
        pres = Presentation(int_coord=c.present[0], res_coord=c.present[1]) if c.present else None
        cells.append(Cell.ball(c.var, to_lin(c.order), to_poly(c.ac), center, pres))
    base = make_piece(space, cells).psi.space
    psi = to_function(pc.weight, base, clause) if pc.weight is not None else None
    phase = to_poly(pc.phase) if pc.phase is not None else None
    return make_piece(space, cells, psi, phase)


def to_function(e, space: Space, clause: str = "expression") -> ConstructibleExpFn:
    """Evaluate an expression to a constructible function on a space without valued coordinates."""
    ring = _try_ring(e)
    if ring is not None:
        return ConstructibleExpFn.one(space) * ring
    if isinstance(e, Num):
        return ConstructibleExpFn.one(space) * e.value
    if isinstance(e, Name):
        if e.id in space.int_vars:
            return ConstructibleExpFn.from_pres(space, PresFunction.polynomial(space.int_vars, Poly.var(e.id),
                                                                               space.int_domain))
        raise ValidationError(f"{e.id} is not an integer coordinate of {space.name}", clause)
    if isinstance(e, Neg):
        return -to_function(e.arg, space, clause)
    if isinstance(e, Bin):
        a = to_function(e.left, space, clause)
        if e.op == "/":
            d = _try_ring(e.right)
            if d is None:
                raise ValidationError(f"can only divide by elements of the coefficient ring, not {print_expr(e.right)}",
                                      clause)
            return a * d.inverse()
        c = to_function(e.right, space, clause)
        return a + c if e.op == "+" else a - c if e.op == "-" else a * c
    if isinstance(e, Pow):
        if isinstance(e.base, Name) and e.base.id == "L":
            beta = to_lin(e.exp)
            extra = beta.variables() - set(space.int_vars)
            if extra:
                raise ValidationError(f"exponent uses {sorted(extra)}, not integer coordinates", clause)
            return ConstructibleExpFn.from_pres(space, PresFunction.L_power(space.int_vars, beta, space.int_domain))
        n = _int_value(e.exp)
        if n < 0:
            raise ValidationError("negative powers are only allowed for L", clause)
        out = ConstructibleExpFn.one(space)
        base = to_function(e.base, space, clause)
        for _ in range(n):
            out = out * base
        return out
    if isinstance(e, Bracket):
        return _indicator(e.formula, space, clause)
    if isinstance(e, Phase):
        p = to_poly(e.arg)
        extra = p.variables() - set(space.res_vars)
        if extra:
            raise ValidationError(f"residue character uses {sorted(extra)}", clause)
        return ConstructibleExpFn.from_class(space, ExpClass.phase(p, space.res_vars))
    if isinstance(e, ClassLit):
        return ConstructibleExpFn.from_class(space, _class(e, space, clause))
    raise ValidationError(f"cannot evaluate {e!r}", clause)


def _try_ring(e) -> RingAElem | None:
    if isinstance(e, Num):
        return RingAElem.integer(e.value)
    if isinstance(e, Name):
        return RingAElem.L_pow(1) if e.id == "L" else None
    if isinstance(e, Neg):
        a = _try_ring(e.arg)
        return None if a is None else -a
    if isinstance(e, Bin):
        a, b = _try_ring(e.left), _try_ring(e.right)
        if a is None or b is None:
            return None
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        return a / b
    if isinstance(e, Pow):
        a = _try_ring(e.base)
        if a is None or _names(e.exp):
            return None
        return a ** _int_value(e.exp)
    return None


def _indicator(f, space: Space, clause: str) -> ConstructibleExpFn:
    names = _names(f)
    if names <= set(space.int_vars):
        s = PresburgerSet.from_formula(to_presburger(f), space.int_vars)
        return ConstructibleExpFn.from_pres(space, PresFunction.indicator(space.int_vars, s, space.int_domain))
    if names <= set(space.res_vars):
        eqs, neqs = _res_conds(_conjuncts(f), clause)
        return ConstructibleExpFn.from_class(space, ExpClass.variety((), eqs, neqs, space.res_vars))
    items = _conjuncts(f)
    ints = [a for a in items if _names(a) <= set(space.int_vars)]
    ress = [a for a in items if a not in ints]
    if len(ints) + len(ress) != len(items) or any(not _names(a) <= set(space.res_vars) for a in ress):
        raise ValidationError("mixed integer/residue conditions must be a conjunction of single-sort atoms", clause)
    left = _indicator(BoolF("and", tuple(ints)) if len(ints) > 1 else ints[0], space, clause)
    right = _indicator(BoolF("and", tuple(ress)) if len(ress) > 1 else ress[0], space, clause)
    return left * right


def _conjuncts(f) -> list:
    if isinstance(f, BoolF) and f.op == "and":
        return [x for a in f.args for x in _conjuncts(a)]
    return [f]


def _res_conds(conds, clause: str):
    eqs, neqs = [], []
    for c in conds:
        if not isinstance(c, Cmp) or c.op not in ("=", "!="):
            raise ValidationError("residue conditions are equations or inequations", clause)
        p = to_poly(c.left) - to_poly(c.right)
        (eqs if c.op == "=" else neqs).append(p)
    return tuple(eqs), tuple(neqs)


def _class(e: ClassLit, space: Space, clause: str) -> ExpClass:
    names = set().union(*(_names(c) for c in e.conds)) if e.conds else set()
    if e.xi is not None:
        names |= _names(e.xi)
    bound = e.bound if e.bound is not None else tuple(sorted(names - set(space.res_vars)))
    clash = set(bound) & set(space.vars)
    if clash:
        raise ValidationError(f"bound variables {sorted(clash)} shadow coordinates", clause)
    extra = names - set(bound) - set(space.res_vars)
    if extra:
        raise ValidationError(f"class uses {sorted(extra)}, not residue coordinates", clause)
    eqs, neqs = _res_conds(e.conds, clause)
    xi = to_poly(e.xi) if e.xi is not None else None
    return ExpClass.variety(bound, eqs, neqs, space.res_vars, xi)


def parse_ring(text: str) -> RingAElem:
    """Coefficient-ring literal such as ``1/(1-L^-2)``."""
    p = Parser(text)
    e = p.expr()
    if p.tok.kind not in ("nl", "eof"):
        p.error("trailing input", ("end of input",))
    r = _try_ring(e)
    if r is None:
        raise ValidationError(f"{text!r} is not an element of the coefficient ring", "expression")
    return r
