"""Presburger formulas, normalized atoms and conjunctive cells.

Formulas are built from three atom shapes (``t <= 0``, ``t = 0`` and
``t = 0 mod n``) and the usual connectives.  Before any decision work an
atom is normalized: coefficients become coprime integers, an equality
becomes two inequalities, and constant atoms collapse to true/false.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from itertools import product
from math import gcd, lcm
from typing import Iterable, Mapping, Union

from .terms import LinTerm


# --- formula tree ---------------------------------------------------------------

@dataclass(frozen=True)
class Le:
    term: LinTerm


@dataclass(frozen=True)
class Eq:
    term: LinTerm


@dataclass(frozen=True)
class Cong:
    term: LinTerm
    modulus: int

    def __post_init__(self):
        if self.modulus < 1:
            raise ValueError("congruence modulus must be positive")


@dataclass(frozen=True)
class Const:
    value: bool


@dataclass(frozen=True)
class And:
    args: tuple


@dataclass(frozen=True)
class Or:
    args: tuple


@dataclass(frozen=True)
class Not:
    arg: object


@dataclass(frozen=True)
class Exists:
    var: str
    body: object


@dataclass(frozen=True)
class Forall:
    var: str
    body: object


TRUE = Const(True)
FALSE = Const(False)
Formula = Union[Le, Eq, Cong, Const, And, Or, Not, Exists, Forall]


def conj(*fs) -> Formula:
    args = []
    for f in fs:
        if f == TRUE:
            continue
        if f == FALSE:
            return FALSE
        args.extend(f.args if isinstance(f, And) else [f])
    if not args:
        return TRUE
    return args[0] if len(args) == 1 else And(tuple(args))


def disj(*fs) -> Formula:
    args = []
    for f in fs:
        if f == FALSE:
            continue
        if f == TRUE:
            return TRUE
        args.extend(f.args if isinstance(f, Or) else [f])
    if not args:
        return FALSE
    return args[0] if len(args) == 1 else Or(tuple(args))


def ge(a, b=0) -> Le:
    """``a >= b``."""
    return Le(LinTerm.coerce(b) - a)


def le(a, b=0) -> Le:
    """``a <= b``."""
    return Le(LinTerm.coerce(a) - b)


def eq(a, b=0) -> Eq:
    return Eq(LinTerm.coerce(a) - b)


def cong(a, r, n) -> Cong:
    """``a = r mod n``."""
    return Cong(LinTerm.coerce(a) - r, n)


def free_vars(f) -> frozenset[str]:
    if isinstance(f, (Le, Eq, Cong)):
        return f.term.variables()
    if isinstance(f, Const):
        return frozenset()
    if isinstance(f, (And, Or)):
        return frozenset().union(*(free_vars(a) for a in f.args))
    if isinstance(f, Not):
        return free_vars(f.arg)
    if isinstance(f, (Exists, Forall)):
        return free_vars(f.body) - {f.var}
    raise TypeError(f"not a formula: {f!r}")


def has_quantifier(f) -> bool:
    if isinstance(f, (Exists, Forall)):
        return True
    if isinstance(f, (And, Or)):
        return any(has_quantifier(a) for a in f.args)
    if isinstance(f, Not):
        return has_quantifier(f.arg)
    return False


def holds(f, env: Mapping[str, int], box: int = 60) -> bool:
    """Evaluate a formula at an integer point; quantifiers range over ``[-box, box]``."""
    if isinstance(f, Le):
        return f.term.evaluate(env) <= 0
    if isinstance(f, Eq):
        return f.term.evaluate(env) == 0
    if isinstance(f, Cong):
        v = f.term.evaluate(env)
        return v.denominator == 1 and v.numerator % f.modulus == 0
    if isinstance(f, Const):
        return f.value
    if isinstance(f, And):
        return all(holds(a, env, box) for a in f.args)
    if isinstance(f, Or):
        return any(holds(a, env, box) for a in f.args)
    if isinstance(f, Not):
        return not holds(f.arg, env, box)
    if isinstance(f, Exists):
        return any(holds(f.body, {**env, f.var: k}, box) for k in range(-box, box + 1))
    if isinstance(f, Forall):
        return all(holds(f.body, {**env, f.var: k}, box) for k in range(-box, box + 1))
    raise TypeError(f"not a formula: {f!r}")


def substitute_formula(f, mapping: Mapping[str, LinTerm]):
    if isinstance(f, Le):
        return Le(f.term.subs(mapping))
    if isinstance(f, Eq):
        return Eq(f.term.subs(mapping))
    if isinstance(f, Cong):
        return Cong(f.term.subs(mapping), f.modulus)
    if isinstance(f, Const):
        return f
    if isinstance(f, And):
        return And(tuple(substitute_formula(a, mapping) for a in f.args))
    if isinstance(f, Or):
        return Or(tuple(substitute_formula(a, mapping) for a in f.args))
    if isinstance(f, Not):
        return Not(substitute_formula(f.arg, mapping))
    if isinstance(f, (Exists, Forall)):
        inner = {k: v for k, v in mapping.items() if k != f.var}
        clash = any(f.var in t.variables() for t in inner.values())
        var, body = f.var, f.body
        if clash:
            fresh = _fresh(var, free_vars(body) | set(inner) | {w for t in inner.values() for w in t.variables()})
            body = substitute_formula(body, {var: LinTerm.var(fresh)})
            var = fresh
        return type(f)(var, substitute_formula(body, inner))
    raise TypeError(f"not a formula: {f!r}")


def _fresh(base: str, taken) -> str:
    i = 1
    while f"{base}_{i}" in taken:
        i += 1
    return f"{base}_{i}"


# --- normalized atoms -----------------------------------------------------------

def _integerize(t: LinTerm) -> tuple[dict[str, int], int, int]:
    d = t.denominator()
    return ({v: int(c * d) for v, c in t.coeffs}, int(t.const * d), d)


@dataclass(frozen=True, order=True)
class Atom:
    """Normalized atom: ``kind`` is ``'le'`` (term <= 0) or ``'cong'`` (term = 0 mod n)."""

    kind: str
    coeffs: tuple
    const: int
    modulus: int = 0

    @property
    def term(self) -> LinTerm:
        return LinTerm(self.coeffs, self.const)

    def coeff(self, v: str) -> int:
        for w, c in self.coeffs:
            if w == v:
                return c
        return 0

    def variables(self) -> frozenset[str]:
        return frozenset(v for v, _ in self.coeffs)

    def holds(self, env: Mapping[str, int]) -> bool:
        val = self.const + sum(c * env[v] for v, c in self.coeffs)
        if self.kind == "le":
            return val <= 0
        return val % self.modulus == 0

    def to_formula(self):
        if self.kind == "le":
            return Le(self.term)
        return Cong(self.term, self.modulus)

    def __str__(self):
        return format_formula(self.to_formula())


def make_le(t: LinTerm) -> Atom | bool:
    coeffs, const, _ = _integerize(t)
    if not coeffs:
        return const <= 0
    g = reduce(gcd, (abs(c) for c in coeffs.values()))
    if g > 1:
        coeffs = {v: c // g for v, c in coeffs.items()}
        # g*t' + const <= 0  <=>  t' <= floor(-const/g)
        const = -((-const) // g)
    return Atom("le", tuple(sorted(coeffs.items())), const)


def make_cong(t: LinTerm, n: int) -> Atom | bool:
    coeffs, const, d = _integerize(t)
    n *= d
    coeffs = {v: c % n for v, c in coeffs.items() if c % n}
    const %= n
    if not coeffs:
        return const == 0
    g = reduce(gcd, coeffs.values(), n)
    if const % g:
        return False
    if g > 1:
        coeffs = {v: c // g for v, c in coeffs.items()}
        const //= g
        n //= g
    if n == 1:
        return True
    return Atom("cong", tuple(sorted(coeffs.items())), const, n)


def negate_atom(a: Atom) -> list[Atom]:
    """Disjuncts of the negation (each a normalized atom)."""
    if a.kind == "le":
        out = make_le(-a.term + 1)
        return [out] if isinstance(out, Atom) else ([] if out is False else [_TRUE_ATOM])
    res = []
    for r in range(1, a.modulus):
        b = make_cong(a.term - r, a.modulus)
        if isinstance(b, Atom):
            res.append(b)
        elif b is True:
            return [_TRUE_ATOM]
    return res


_TRUE_ATOM = Atom("le", (), -1)


# --- cells (conjunctions of atoms) ---------------------------------------------

class Cell:
    """A satisfiability-agnostic conjunction of normalized atoms.

    Construction tightens inequalities sharing a linear part and detects the
    obvious contradiction ``t <= a`` with ``t >= b > a``.  Use
    :func:`make_cell`, which returns ``None`` for such trivially empty cells.
    """

    __slots__ = ("atoms", "_hash")

    def __init__(self, atoms: Iterable[Atom] = ()):
        self.atoms = tuple(sorted(set(atoms)))
        self._hash = hash(self.atoms)

    def __eq__(self, other):
        return isinstance(other, Cell) and self.atoms == other.atoms

    def __hash__(self):
        return self._hash

    def __lt__(self, other):
        return self.atoms < other.atoms

    def variables(self) -> frozenset[str]:
        return frozenset().union(*(a.variables() for a in self.atoms))

    def holds(self, env: Mapping[str, int]) -> bool:
        return all(a.holds(env) for a in self.atoms)

    def is_top(self) -> bool:
        return not self.atoms

    def to_formula(self):
        parts = []
        done = set()
        for a in self.atoms:
            if a in done:
                continue
            if a.kind == "le":
                twin = Atom("le", tuple((v, -c) for v, c in a.coeffs), -a.const)
                if twin in self.atoms and twin not in done:
                    done.add(twin)
                    t = a.term if a.coeffs[0][1] > 0 else twin.term
                    parts.append(Eq(t))
                    continue
            parts.append(a.to_formula())
        return conj(*parts)

    def __str__(self):
        return format_formula(self.to_formula())

    def __repr__(self):
        return f"Cell({self})"


TOP = Cell()


def make_cell(atoms: Iterable[Atom | bool]) -> Cell | None:
    bounds: dict[tuple, int] = {}
    congs: set[Atom] = set()
    for a in atoms:
        if a is True:
            continue
        if a is False:
            return None
        if a == _TRUE_ATOM:
            continue
        if a.kind == "le":
            key = a.coeffs
            if key not in bounds or a.const > bounds[key]:
                bounds[key] = a.const
        else:
            congs.add(a)
    for key, c in bounds.items():
        neg = tuple((v, -k) for v, k in key)
        if neg in bounds and c + bounds[neg] > 0:
            # t + c <= 0 and -t + c' <= 0 force c' <= t <= -c
            return None
    out = [Atom("le", k, c) for k, c in bounds.items()]
    out.extend(congs)
    # a pinned variable (v = value) is substituted into every other atom
    for key, c in bounds.items():
        if len(key) == 1 and key[0][1] == 1 and bounds.get(((key[0][0], -1),)) == -c:
            v, value = key[0][0], -c
            pinned = {Atom("le", key, c), Atom("le", ((v, -1),), -c)}
            if any(v in a.variables() for a in out if a not in pinned):
                rest = []
                for a in out:
                    if a in pinned or v not in a.variables():
                        rest.append(a)
                        continue
                    t = a.term.subs({v: LinTerm.constant(value)})
                    rest.append(make_le(t) if a.kind == "le" else make_cong(t, a.modulus))
                return make_cell(rest)
    return Cell(out)


def cell_and(a: Cell, b: Cell) -> Cell | None:
    return make_cell(a.atoms + b.atoms)


def cell_substitute(c: Cell, mapping: Mapping[str, LinTerm]) -> Cell | None:
    atoms = []
    for a in c.atoms:
        t = a.term.subs(mapping)
        atoms.append(make_le(t) if a.kind == "le" else make_cong(t, a.modulus))
    return make_cell(atoms)


def atom_of(f) -> list[Atom | bool]:
    """Normalized conjunction for an atomic formula."""
    if isinstance(f, Le):
        return [make_le(f.term)]
    if isinstance(f, Eq):
        return [make_le(f.term), make_le(-f.term)]
    if isinstance(f, Cong):
        return [make_cong(f.term, f.modulus)]
    raise TypeError(f)


# --- normal forms ---------------------------------------------------------------

def nnf(f, negate: bool = False):
    """Push negations to atoms; quantifiers must already be gone."""
    if isinstance(f, Const):
        return Const(f.value != negate)
    if isinstance(f, (Le, Eq, Cong)):
        if not negate:
            return f
        if isinstance(f, Le):
            return Le(-f.term + 1)
        if isinstance(f, Eq):
            return disj(Le(f.term + 1), Le(-f.term + 1))
        return disj(*(Cong(f.term - r, f.modulus) for r in range(1, f.modulus)))
    if isinstance(f, Not):
        return nnf(f.arg, not negate)
    if isinstance(f, And):
        parts = [nnf(a, negate) for a in f.args]
        return disj(*parts) if negate else conj(*parts)
    if isinstance(f, Or):
        parts = [nnf(a, negate) for a in f.args]
        return conj(*parts) if negate else disj(*parts)
    raise ValueError("nnf expects a quantifier-free formula")


def dnf_cells(f) -> list[Cell]:
    """Disjunctive normal form as a list of (not necessarily disjoint) cells."""
    f = nnf(f)
    return _dnf(f)


def _dnf(f) -> list[Cell]:
    if isinstance(f, Const):
        return [TOP] if f.value else []
    if isinstance(f, (Le, Eq, Cong)):
        c = make_cell(atom_of(f))
        return [c] if c is not None else []
    if isinstance(f, Or):
        out: list[Cell] = []
        for a in f.args:
            out.extend(_dnf(a))
        return _dedupe(out)
    if isinstance(f, And):
        acc = [TOP]
        for a in f.args:
            sub = _dnf(a)
            nxt = []
            for x, y in product(acc, sub):
                c = cell_and(x, y)
                if c is not None:
                    nxt.append(c)
            acc = _dedupe(nxt)
            if not acc:
                return []
        return acc
    raise TypeError(f"unexpected node {f!r}")


def _dedupe(cells: list[Cell]) -> list[Cell]:
    seen, out = set(), []
    for c in cells:
        if c not in seen:
            seen.add(c)
            out.append(c)
    return out


def cells_to_formula(cells: Iterable[Cell]):
    return disj(*(c.to_formula() for c in cells))


def negate_cell(c: Cell) -> list[Cell]:
    """Pairwise disjoint cells covering the complement of ``c``."""
    out = []
    prefix: list[Atom] = []
    for a in c.atoms:
        for na in negate_atom(a):
            cell = make_cell(prefix + [na])
            if cell is not None:
                out.append(cell)
        prefix.append(a)
    return out


# --- printing -------------------------------------------------------------------

def _split_const(t: LinTerm) -> tuple[LinTerm, Fraction]:
    return LinTerm(t.coeffs, 0), -t.const


def format_formula(f, top: bool = True) -> str:
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, (Le, Eq, Cong)):
        lhs, rhs = _split_const(f.term)
        if lhs.is_constant():
            lhs, rhs = f.term, Fraction(0)
        if isinstance(f, Le):
            if lhs.coeffs and lhs.coeffs[0][1] < 0:
                return f"{-lhs} >= {-rhs}"
            return f"{lhs} <= {rhs}"
        if isinstance(f, Eq):
            if lhs.coeffs and lhs.coeffs[0][1] < 0:
                lhs, rhs = -lhs, -rhs
            return f"{lhs} = {rhs}"
        if rhs.denominator == 1:
            rhs = rhs % f.modulus
        return f"{lhs} =_{f.modulus} {rhs}"
    if isinstance(f, Not):
        return f"not {format_formula(f.arg, False)}"
    if isinstance(f, (And, Or)):
        op = " and " if isinstance(f, And) else " or "
        body = op.join(format_formula(a, False) for a in f.args)
        return body if top else f"({body})"
    if isinstance(f, (Exists, Forall)):
        q = "exists" if isinstance(f, Exists) else "forall"
        body = f"{q} {f.var}. {format_formula(f.body, True)}"
        return body if top else f"({body})"
    raise TypeError(f)


def modulus_lcm(cells: Iterable[Cell]) -> int:
    return lcm(1, *(a.modulus for c in cells for a in c.atoms if a.kind == "cong"))
