"""Constructible exponential functions: residue classes tensored with Presburger functions.

A function on a space is stored as ``sum_G G (x) phi_G`` where G runs over
canonical generators of the residue Grothendieck ring (parameters: the
space's residue variables) and ``phi_G`` is a Presburger constructible
function of the space's integer variables.  :func:`build` applies the two
tensor identifications in one direction only: a free affine line in a
fiber becomes the Presburger constant L, and integer multiplicities move
into the Presburger factor.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Mapping, Sequence

from .coeff_ring import RingAElem
from .errors import ArityMismatch, BaseMismatch, DimensionMismatch
from .polys import Poly
from .presburger import DefinableMap, LinTerm, PresburgerSet
from .presburger.formula import cell_and
from .presburger_constructible import PresFunction, compare_pres, sample_points
from .residue_ring import (
    Cyclotomic, ExpClass, Generator, ResVariety, canonicalize, count_generator, exp_normalize,
    fiber_product, res_pullback, res_pushforward,
)
from .verdicts import SPECIALIZATION, SYMBOLIC, UNEQUAL, Verdict

_UNIT = Generator(ResVariety(), Poly())


@dataclass(frozen=True)
class Space:
    """A definable set with integer, residue and valued-field coordinates.

    The integer part is a Presburger set; the residue part is cut out by
    polynomial equations/inequations.  Valued coordinates only appear in
    cell data (see :mod:`motivic.cells`).
    """

    name: str = "S"
    int_vars: tuple = ()
    res_vars: tuple = ()
    val_vars: tuple = ()
    int_domain: PresburgerSet | None = None
    res_eqs: tuple = ()
    res_neqs: tuple = ()

    def __post_init__(self):
        if self.int_domain is None:
            object.__setattr__(self, "int_domain", PresburgerSet.universe(self.int_vars))
        if self.int_domain.vars != tuple(self.int_vars):
            raise ArityMismatch(f"integer domain over {self.int_domain.vars}, space over {self.int_vars}")
        names = list(self.int_vars) + list(self.res_vars) + list(self.val_vars)
        if len(set(names)) != len(names):
            raise ArityMismatch(f"repeated coordinate names in space {self.name}")
        for p in self.res_eqs + self.res_neqs:
            if not p.variables() <= set(self.res_vars):
                raise ArityMismatch(f"residue constraint {p} uses variables outside {self.res_vars}")

    @property
    def vars(self) -> tuple:
        return tuple(self.int_vars) + tuple(self.res_vars) + tuple(self.val_vars)

    def product(self, other: "Space", name: str | None = None) -> "Space":
        clash = set(self.vars) & set(other.vars)
        if clash:
            raise ArityMismatch(f"spaces share coordinates {sorted(clash)}")
        ivars = tuple(self.int_vars) + tuple(other.int_vars)
        dom = PresburgerSet(ivars, [], disjoint=True)
        cells = []
        for a, b in product(self.int_domain.pieces, other.int_domain.pieces):
            c = cell_and(a, b)
            if c is not None:
                cells.append(c)
        dom = PresburgerSet(ivars, cells, disjoint=True)
        return Space(name or f"{self.name}x{other.name}", ivars,
                     tuple(self.res_vars) + tuple(other.res_vars),
                     tuple(self.val_vars) + tuple(other.val_vars), dom,
                     self.res_eqs + other.res_eqs, self.res_neqs + other.res_neqs)

    def drop(self, vars: Iterable[str], name: str | None = None) -> "Space":
        """Coordinate projection forgetting ``vars``."""
        vars = set(vars)
        ivars = tuple(v for v in self.int_vars if v not in vars)
        rvars = tuple(v for v in self.res_vars if v not in vars)
        dom = self.int_domain.project(ivars) if set(self.int_vars) & vars else self.int_domain
        keep_eq = tuple(p for p in self.res_eqs if not p.variables() & vars)
        keep_neq = tuple(p for p in self.res_neqs if not p.variables() & vars)
        return Space(name or self.name, ivars, rvars, tuple(v for v in self.val_vars if v not in vars),
                     dom, keep_eq, keep_neq)

    def res_points(self, p: int, limit: int = 400) -> list[dict[str, int]]:
        out = []
        for pt in product(range(p), repeat=len(self.res_vars)):
            env = dict(zip(self.res_vars, pt))
            if any(q.eval_mod(env, p) for q in self.res_eqs):
                continue
            if any(q.eval_mod(env, p) == 0 for q in self.res_neqs):
                continue
            out.append(env)
            if len(out) >= limit:
                break
        return out

    def int_points(self, box: int, limit: int = 200) -> list[dict[str, int]]:
        return [e for e in sample_points(self.int_vars, box, limit * 4) if self.int_domain.contains(e)][:limit]

    def same_as(self, other: "Space") -> bool:
        return (tuple(self.int_vars) == tuple(other.int_vars) and tuple(self.res_vars) == tuple(other.res_vars)
                and self.int_domain.equals(other.int_domain)
                and set(self.res_eqs) == set(other.res_eqs) and set(self.res_neqs) == set(other.res_neqs))

    def __str__(self):
        parts = []
        if self.int_vars:
            parts.append(f"int({', '.join(self.int_vars)})")
        if self.res_vars:
            parts.append(f"res({', '.join(self.res_vars)})")
        if self.val_vars:
            parts.append(f"val({', '.join(self.val_vars)})")
        return f"{self.name} : {' '.join(parts) if parts else 'point'}"


def _used(gen: Generator, skip=None) -> set:
    v = gen.variety
    used = set(gen.xi.variables())
    for q in v.eqs + v.neqs:
        if q is not skip:
            used |= q.variables()
    for s in gen.g:
        if s.residue is not None:
            used |= s.residue.variables()
    return used


def _punctured_line(gen: Generator):
    """A bound variable whose only constraint is ``+-b + c != 0``: the factor L - 1."""
    v = gen.variety
    for q in v.neqs:
        for b in v.bound:
            if b in _used(gen, skip=q) or q.degree(b) != 1:
                continue
            slope = q.linear_coefficient(b)
            if slope is None or not slope.is_constant() or abs(slope.constant_value()) != 1:
                continue
            kept = tuple(x for x in v.bound if x != b)
            neqs = tuple(x for x in v.neqs if x is not q)
            return canonicalize(Generator(ResVariety(kept, v.eqs, neqs), gen.xi, gen.g))
    return None


def _strip_free_lines(gen: Generator) -> tuple[Generator, int, int]:
    """Split off free lines (factor L) and punctured lines (factor L - 1)."""
    lines = punctured = 0
    while gen is not None:
        v = gen.variety
        used = _used(gen)
        free = [b for b in v.bound if b not in used]
        if free:
            kept = tuple(b for b in v.bound if b in used)
            gen = canonicalize(Generator(ResVariety(kept, v.eqs, v.neqs), gen.xi, gen.g))
            lines += len(free)
            continue
        nxt = _punctured_line(gen)
        if nxt is None:
            break
        gen = nxt
        punctured += 1
    return gen, lines, punctured


class ConstructibleExpFn:
    __slots__ = ("space", "terms")

    def __init__(self, space: Space, terms: Mapping[Generator, PresFunction] | None = None):
        self.space = space
        self.terms = dict(terms or {})

    # constructors -------------------------------------------------------
    @classmethod
    def from_pres(cls, space: Space, pres: PresFunction) -> "ConstructibleExpFn":
        return build(space, [(ExpClass.one(space.res_vars), pres)])

    @classmethod
    def from_class(cls, space: Space, a: ExpClass) -> "ConstructibleExpFn":
        return build(space, [(a, cls._one_pres(space))])

    @classmethod
    def one(cls, space: Space) -> "ConstructibleExpFn":
        return cls.from_pres(space, cls._one_pres(space))

    @classmethod
    def zero(cls, space: Space) -> "ConstructibleExpFn":
        return cls(space, {})

    @staticmethod
    def _one_pres(space: Space) -> PresFunction:
        return PresFunction.constant(space.int_vars, 1, space.int_domain)

    # arithmetic ---------------------------------------------------------
    def pairs(self) -> list[tuple[ExpClass, PresFunction]]:
        return [(ExpClass(self.space.res_vars, {g: 1}), f) for g, f in self.terms.items()]

    def _check(self, other: "ConstructibleExpFn"):
        if self.space is not other.space and not self.space.same_as(other.space):
            raise BaseMismatch(f"functions on {self.space.name} and {other.space.name}")

    def __add__(self, other: "ConstructibleExpFn") -> "ConstructibleExpFn":
        self._check(other)
        return build(self.space, self.pairs() + other.pairs())

    def __neg__(self):
        return ConstructibleExpFn(self.space, {g: -f for g, f in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other) -> "ConstructibleExpFn":
        if isinstance(other, PresFunction):
            other = ConstructibleExpFn.from_pres(self.space, other)
        elif isinstance(other, (int, RingAElem)):
            return ConstructibleExpFn(self.space, {g: f.scale(RingAElem.coerce(other)) for g, f in self.terms.items()})
        elif isinstance(other, ExpClass):
            other = ConstructibleExpFn.from_class(self.space, other)
        self._check(other)
        pairs = []
        for (g1, f1), (g2, f2) in product(self.terms.items(), other.terms.items()):
            pairs.append((ExpClass(self.space.res_vars, {fiber_product(g1, g2): 1}), f1 * f2))
        return build(self.space, pairs)

    __rmul__ = __mul__

    def is_zero(self) -> bool:
        return not self.terms

    # functoriality pieces -------------------------------------------------
    def pullback(self, f: "SpaceMap") -> "ConstructibleExpFn":
        if not f.target.same_as(self.space) and f.target.vars != self.space.vars:
            raise BaseMismatch(f"map into {f.target.name}, function on {self.space.name}")
        pairs = []
        for g, pres in self.terms.items():
            cls = res_pullback(ExpClass(self.space.res_vars, {g: 1}), f.res_map, f.source.res_vars)
            pairs.append((cls, pres.pullback(f.int_map, f.source.int_domain)))
        return build(f.source, pairs)

    def push_res(self, vars: Sequence[str], target: Space | None = None) -> "ConstructibleExpFn":
        """Push forward along the projection forgetting residue coordinates."""
        vars = list(vars)
        eqs = tuple(p for p in self.space.res_eqs if p.variables() & set(vars))
        neqs = tuple(p for p in self.space.res_neqs if p.variables() & set(vars))
        new_space = target or self.space.drop(vars)
        pairs = []
        for g, pres in self.terms.items():
            cls = res_pushforward(ExpClass(self.space.res_vars, {g: 1}), vars, eqs, neqs)
            pairs.append((cls, pres))
        if not self.terms:
            return ConstructibleExpFn(new_space, {})
        return build(new_space, pairs)

    def sum_int(self, vars: Sequence[str], target: Space | None = None) -> "ConstructibleExpFn":
        """Push forward along the projection forgetting integer coordinates."""
        new_space = target or self.space.drop(vars)
        out = {}
        for g, pres in self.terms.items():
            out[g] = pres.sum_over(list(vars))
        return build(new_space, [(ExpClass(new_space.res_vars, {g: 1}), PresFunction(new_space.int_vars, new_space.int_domain, f.terms))
                                 for g, f in out.items()])

    def restrict_int(self, s: PresburgerSet) -> "ConstructibleExpFn":
        return ConstructibleExpFn(self.space, {g: f.restrict(s) for g, f in self.terms.items()}).normalized()

    def normalized(self) -> "ConstructibleExpFn":
        return build(self.space, self.pairs())

    # evaluation ---------------------------------------------------------
    def evaluate(self, int_point: Mapping[str, int], res_point: Mapping[str, int], p: int) -> Cyclotomic:
        """Exact value in Q(zeta_p) with L specialized to p."""
        total = Cyclotomic.of_int(p, 0)
        for g, pres in self.terms.items():
            val = pres.nu(int_point, p)
            if val:
                total = total + count_generator(g, p, res_point) * val
        return total

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for g, f in self.terms.items():
            ptext = str(f)
            if g == _UNIT:
                parts.append(ptext if len(f.terms) == 1 else f"({ptext})")
            elif ptext == "1":
                parts.append(str(g))
            else:
                parts.append(f"{g} * ({ptext})")
        return " + ".join(parts)

    def __repr__(self):
        return f"ConstructibleExpFn({self})"


def build(space: Space, pairs: Iterable[tuple[ExpClass, PresFunction]]) -> ConstructibleExpFn:
    """Canonical tensor form: lines become L, multiplicities become Presburger scalars."""
    acc: dict[Generator, list[PresFunction]] = {}
    for cls, pres in pairs:
        if set(cls.params) - set(space.res_vars):
            raise BaseMismatch(f"class over {cls.params} on space {space.name}")
        if tuple(pres.vars) != tuple(space.int_vars):
            raise BaseMismatch(f"Presburger factor over {pres.vars}, space integer variables {space.int_vars}")
        pres = PresFunction(space.int_vars, space.int_domain, pres.terms)
        norm = exp_normalize(ExpClass(space.res_vars, cls.gens))
        for g, m in norm.gens.items():
            g2, lines, punctured = _strip_free_lines(g)
            if g2 is None:
                continue
            scale = RingAElem.L_pow(lines, m) * (RingAElem.L_pow(1) - 1) ** punctured
            acc.setdefault(g2, []).append(pres.scale(scale))
    terms = {}
    for g in sorted(acc, key=str):
        fs = acc[g]
        total = fs[0]
        for f in fs[1:]:
            total = total + f
        total = total.collect()
        if total.terms:
            terms[g] = total
    return ConstructibleExpFn(space, terms)


def cexp_arith(op: str, phi: ConstructibleExpFn, psi: ConstructibleExpFn) -> ConstructibleExpFn:
    if op == "add":
        return phi + psi
    if op == "mul":
        return phi * psi
    raise ValueError(f"unknown operation {op!r}")


@dataclass(frozen=True)
class SpaceMap:
    """Morphism between spaces: polynomial residue part, piecewise-affine integer part."""

    source: Space
    target: Space
    res_map: Mapping[str, Poly]
    int_map: DefinableMap

    @classmethod
    def make(cls, source: Space, target: Space, res_map=None, int_map: Mapping[str, LinTerm] | DefinableMap | None = None):
        res_map = {k: Poly.coerce(v) for k, v in (res_map or {}).items()}
        missing = set(target.res_vars) - set(res_map)
        if missing:
            raise ArityMismatch(f"no image for residue coordinates {sorted(missing)}")
        for k, v in res_map.items():
            if not v.variables() <= set(source.res_vars):
                raise ArityMismatch(f"residue image of {k} uses {sorted(v.variables() - set(source.res_vars))}")
        if not isinstance(int_map, DefinableMap):
            int_map = DefinableMap.affine(source.int_vars, target.int_vars, dict(int_map or {}))
        if int_map.source != tuple(source.int_vars) or int_map.target != tuple(target.int_vars):
            raise ArityMismatch("integer part of the map has the wrong arity")
        return cls(source, target, res_map, int_map)

    @classmethod
    def identity(cls, space: Space) -> "SpaceMap":
        return cls.make(space, space, {v: Poly.var(v) for v in space.res_vars},
                        {v: LinTerm.var(v) for v in space.int_vars})

    def product_with_identity(self, other: Space) -> "SpaceMap":
        """``self x Id_other`` from ``source x other`` to ``target x other``."""
        src = self.source.product(other)
        tgt = self.target.product(other)
        res = dict(self.res_map)
        res.update({v: Poly.var(v) for v in other.res_vars})
        im = self.int_map.product(DefinableMap.identity(other.int_vars))
        return SpaceMap(src, tgt, res, im)

    def __call__(self, int_point: Mapping[str, int], res_point: Mapping[str, int], p: int):
        ip = dict(zip(self.target.int_vars, self.int_map(int_point))) if self.target.int_vars else {}
        rp = {k: v.eval_mod(res_point, p) for k, v in self.res_map.items()}
        return ip, rp


def cexp_pullback(phi: ConstructibleExpFn, f: SpaceMap) -> ConstructibleExpFn:
    return phi.pullback(f)


def dissociate(phi: ConstructibleExpFn) -> list[tuple[ExpClass, PresFunction]]:
    """Pure tensors ``a_i (x) b_i`` summing to ``phi``: residue classes times Presburger functions."""
    return [(ExpClass(phi.space.res_vars, {g: 1}), f) for g, f in phi.terms.items()]


# --- comparison -------------------------------------------------------------------

def compare_cexp(phi: ConstructibleExpFn, psi: ConstructibleExpFn, qs=(2, 3), primes=(3, 5, 7),
                 box: int = 4, res_limit: int = 60, int_limit: int = 60) -> Verdict:
    phi._check(psi)
    diff = phi - psi
    if diff.is_zero():
        return Verdict(SYMBOLIC)
    space = phi.space
    pure = all(g == _UNIT for g in list(phi.terms) + list(psi.terms)) and not space.res_vars
    if pure:
        zero = PresFunction.zero(space.int_vars, space.int_domain)
        return compare_pres(phi.terms.get(_UNIT, zero), psi.terms.get(_UNIT, zero), qs, box)
    checks, worst = 0, 0.0
    for p in primes:
        for rp in space.res_points(p, res_limit):
            for ip in space.int_points(box, int_limit):
                a, b = phi.evaluate(ip, rp, p), psi.evaluate(ip, rp, p)
                checks += 1
                delta = abs(a.to_complex() - b.to_complex())
                worst = max(worst, delta)
                if a != b:
                    return Verdict(UNEQUAL, {"p": p, "int": ip, "res": rp, "lhs": str(a), "rhs": str(b)},
                                   checks, delta)
    return Verdict(SPECIALIZATION, None, checks, worst)


# --- graded classes ---------------------------------------------------------------

@dataclass
class GradedClass:
    """Class of a function modulo functions supported in declared lower dimension."""

    dim: int
    fn: ConstructibleExpFn
    dropped: list = field(default_factory=list)

    def __eq__(self, other):
        return isinstance(other, GradedClass) and self.dim == other.dim and compare_cexp(self.fn, other.fn).ok

    def __str__(self):
        return f"[{self.fn}]_{self.dim}"


def grade(pieces: Sequence[tuple[ConstructibleExpFn, int]], dim: int | None = None) -> GradedClass:
    """Keep the pieces of top declared dimension; lower-dimensional pieces are null."""
    if not pieces:
        raise DimensionMismatch("grading needs at least one piece to fix the ambient space")
    top = max(d for _, d in pieces) if dim is None else dim
    if any(d > top for _, d in pieces):
        raise DimensionMismatch(f"piece of dimension {max(d for _, d in pieces)} above the grade {top}")
    kept = [f for f, d in pieces if d == top]
    dropped = [f for f, d in pieces if d < top]
    space = pieces[0][0].space
    total = ConstructibleExpFn.zero(space)
    for f in kept:
        total = total + f
    return GradedClass(top, total, dropped)
