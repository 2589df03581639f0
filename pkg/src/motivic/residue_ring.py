"""Grothendieck classes of residue-field families with exponential twists.

A generator ``e^xi E(g) [Y -> Z]`` stores the fiber variety Y (bound residue
variables cut out by polynomial equations and inequations, possibly involving
the base's residue parameters), the residue phase ``xi`` and the valued-field
phase ``g`` as a list of symbolic summands.  Classes are integer combinations
of canonicalized generators.

Rewrites implemented: fiber products, reduction of summands of order >= 0
into the residue phase, nullity of a free line carried by the phase, and
elimination of bound variables fixed by unit-coefficient linear equations.
Counting over F_p specializes a class to an exact element of Z[zeta_p].
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations, product
from math import lcm
from typing import Iterable, Mapping, Sequence

from .errors import ArityMismatch, BaseMismatch, CountTooLarge, UninstantiatedParameters
from .polys import Poly
from .verdicts import SPECIALIZATION, SYMBOLIC, UNEQUAL, Verdict

COUNT_CAP = 10 ** 7


@dataclass(frozen=True, order=True)
class GSummand:
    """One summand of a valued-field phase: ``expr`` with optional order bound and reduction."""

    expr: str
    order: int | None = None
    residue: Poly | None = field(default=None, compare=False)

    def __str__(self):
        extra = [] if self.order is None else [f"ord>={self.order}"]
        if self.residue is not None:
            extra.append(f"res={self.residue}")
        return self.expr + (f"{{{', '.join(extra)}}}" if extra else "")


def _primitive(p: Poly) -> Poly:
    """Scale to integer coefficients with positive leading term.

    The integer content is kept: dividing by it would change the zero set
    modulo primes dividing the content.
    """
    if p.is_zero():
        return p
    den = lcm(*(c.denominator for c in p.terms.values()))
    q = p.scale(den)
    lead = q._key()[0][1]
    return -q if lead < 0 else q


@dataclass(frozen=True)
class ResVariety:
    """Fiber ``{b : eqs(z, b) = 0, neqs(z, b) != 0}`` over base parameters z."""

    bound: tuple = ()
    eqs: tuple = ()
    neqs: tuple = ()

    def variables(self) -> frozenset[str]:
        out: set[str] = set()
        for p in self.eqs + self.neqs:
            out |= p.variables()
        return frozenset(out)

    def params(self) -> frozenset[str]:
        return self.variables() - set(self.bound)

    def __str__(self):
        conds = [f"{p} = 0" for p in self.eqs] + [f"{p} != 0" for p in self.neqs]
        head = ", ".join(self.bound) if self.bound else ""
        return f"[{head}{' : ' if head and conds else ''}{', '.join(conds)}]"


@dataclass(frozen=True)
class Generator:
    variety: ResVariety
    xi: Poly
    g: tuple = ()  # of GSummand

    def params(self) -> frozenset[str]:
        out = set(self.variety.params()) | (self.xi.variables() - set(self.variety.bound))
        for s in self.g:
            if s.residue is not None:
                out |= s.residue.variables() - set(self.variety.bound)
        return frozenset(out)

    def key(self) -> str:
        return str(self)

    def __str__(self):
        parts = []
        if not self.xi.is_zero():
            parts.append(f"e({self.xi})")
        if self.g:
            parts.append(f"E({' + '.join(str(s) for s in self.g)})")
        v = self.variety
        if v.bound or v.eqs or v.neqs or not parts:
            parts.append(str(v))
        return "*".join(parts)


def _rename_generator(gen: Generator, ren: Mapping[str, str]) -> Generator:
    sub = {k: Poly.var(v) for k, v in ren.items()}
    v = gen.variety
    return Generator(
        ResVariety(tuple(ren.get(b, b) for b in v.bound),
                   tuple(p.subs(sub) for p in v.eqs), tuple(p.subs(sub) for p in v.neqs)),
        gen.xi.subs(sub),
        tuple(GSummand(s.expr, s.order, None if s.residue is None else s.residue.subs(sub)) for s in gen.g),
    )


def _tidy(gen: Generator) -> Generator | None:
    """Normalize equations; None if the fiber is visibly empty."""
    eqs, neqs = set(), set()
    for p in gen.variety.eqs:
        if p.is_zero():
            continue
        p = _primitive(p)
        if p.is_constant() and abs(p.constant_value()) == 1:
            return None
        eqs.add(p)
    for p in gen.variety.neqs:
        if p.is_zero():
            return None
        p = _primitive(p)
        # a unit constant never vanishes; other constants vanish at primes dividing them
        if p.is_constant() and abs(p.constant_value()) == 1:
            continue
        neqs.add(p)
    if eqs & neqs:
        return None
    return Generator(ResVariety(gen.variety.bound, tuple(sorted(eqs, key=str)), tuple(sorted(neqs, key=str))),
                     gen.xi, tuple(sorted(gen.g)))


def canonicalize(gen: Generator) -> Generator | None:
    """Rename bound variables to ``_b0, _b1, ...`` choosing the least printed form."""
    gen = _tidy(gen)
    if gen is None:
        return None
    bound = gen.variety.bound
    if not bound:
        return gen
    names = [f"_b{i}" for i in range(len(bound))]
    tmp = {b: f"__t{i}" for i, b in enumerate(bound)}
    gen = _rename_generator(gen, tmp)
    tb = list(tmp.values())
    candidates = permutations(range(len(tb))) if len(tb) <= 5 else [tuple(range(len(tb)))]
    best = None
    for perm in candidates:
        ren = {tb[perm[i]]: names[i] for i in range(len(tb))}
        cand = _tidy(_rename_generator(gen, ren))
        cand = Generator(ResVariety(tuple(names), cand.variety.eqs, cand.variety.neqs), cand.xi, cand.g)
        if best is None or str(cand) < str(best):
            best = cand
    return best


class ExpClass:
    """Integer combination of generators over a base with residue parameters."""

    __slots__ = ("params", "gens")

    def __init__(self, params: Sequence[str] = (), gens: Mapping[Generator, int] | Iterable = ()):
        self.params = tuple(params)
        acc: dict[Generator, int] = {}
        items = gens.items() if isinstance(gens, Mapping) else gens
        for g, m in items:
            if not m:
                continue
            cg = canonicalize(g)
            if cg is None:
                continue
            extra = cg.params() - set(self.params)
            if extra:
                raise ArityMismatch(f"generator mentions {sorted(extra)} outside base parameters {self.params}")
            acc[cg] = acc.get(cg, 0) + m
        self.gens = {g: m for g, m in sorted(acc.items(), key=lambda kv: str(kv[0])) if m}

    # constructors -------------------------------------------------------
    @classmethod
    def one(cls, params: Sequence[str] = ()) -> "ExpClass":
        return cls(params, {Generator(ResVariety(), Poly()): 1})

    @classmethod
    def zero(cls, params: Sequence[str] = ()) -> "ExpClass":
        return cls(params, {})

    @classmethod
    def affine_space(cls, n: int, params: Sequence[str] = ()) -> "ExpClass":
        return cls(params, {Generator(ResVariety(tuple(f"a{i}" for i in range(n))), Poly()): 1})

    @classmethod
    def variety(cls, bound: Sequence[str], eqs=(), neqs=(), params: Sequence[str] = (),
                xi: Poly | None = None, g=()) -> "ExpClass":
        gen = Generator(ResVariety(tuple(bound), tuple(eqs), tuple(neqs)), xi if xi is not None else Poly(), tuple(g))
        return cls(params, {gen: 1})

    @classmethod
    def phase(cls, xi: Poly, params: Sequence[str] = ()) -> "ExpClass":
        """``e^xi`` times the unit."""
        return cls(params, {Generator(ResVariety(), xi): 1})

    # queries ------------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.gens

    def is_one(self) -> bool:
        return self.gens == ExpClass.one(self.params).gens

    def integer_value(self) -> int | None:
        """If the class is a multiple of the unit, that multiple."""
        if not self.gens:
            return 0
        if len(self.gens) == 1:
            (g, m), = self.gens.items()
            if not g.variety.bound and not g.variety.eqs and not g.variety.neqs and g.xi.is_zero() and not g.g:
                return m
        return None

    def identical(self, other: "ExpClass") -> bool:
        return self.gens == other.gens

    def __eq__(self, other):
        return isinstance(other, ExpClass) and self.params == other.params and self.gens == other.gens

    def __hash__(self):
        return hash((self.params, tuple(self.gens.items())))

    # arithmetic ---------------------------------------------------------
    def _check(self, other):
        if set(self.params) != set(other.params):
            raise BaseMismatch(f"classes over {self.params} and {other.params}")

    def __add__(self, other: "ExpClass") -> "ExpClass":
        self._check(other)
        acc = dict(self.gens)
        for g, m in other.gens.items():
            acc[g] = acc.get(g, 0) + m
        return ExpClass(self.params, acc)

    def __neg__(self):
        return ExpClass(self.params, {g: -m for g, m in self.gens.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, k: int) -> "ExpClass":
        return ExpClass(self.params, {g: m * k for g, m in self.gens.items()})

    def __mul__(self, other) -> "ExpClass":
        if isinstance(other, int):
            return self.scale(other)
        self._check(other)
        acc: dict[Generator, int] = {}
        for (g1, m1), (g2, m2) in product(self.gens.items(), other.gens.items()):
            g = fiber_product(g1, g2)
            acc[g] = acc.get(g, 0) + m1 * m2
        return ExpClass(self.params, acc)

    __rmul__ = __mul__

    def __str__(self):
        if not self.gens:
            return "0"
        parts = []
        for g, m in self.gens.items():
            parts.append(str(g) if m == 1 else f"{m}*{g}")
        return " + ".join(parts)

    def __repr__(self):
        return f"ExpClass({self})"


def fiber_product(a: Generator, b: Generator) -> Generator:
    """Product generator: disjoint bound variables, summed phases."""
    ra = {x: f"__l{i}" for i, x in enumerate(a.variety.bound)}
    rb = {x: f"__r{i}" for i, x in enumerate(b.variety.bound)}
    a2, b2 = _rename_generator(a, ra), _rename_generator(b, rb)
    return Generator(
        ResVariety(a2.variety.bound + b2.variety.bound,
                   a2.variety.eqs + b2.variety.eqs, a2.variety.neqs + b2.variety.neqs),
        a2.xi + b2.xi, a2.g + b2.g)


def res_product(a: ExpClass, b: ExpClass) -> ExpClass:
    return a * b


# --- rewrites ----------------------------------------------------------------------

def _reduce_orders(gen: Generator) -> Generator:
    """Drop valued phases in the maximal ideal; fold order-0 ones into the residue phase."""
    keep, xi = [], gen.xi
    for s in gen.g:
        if s.order is not None and s.order >= 1:
            continue
        if s.order is not None and s.order >= 0 and s.residue is not None:
            xi = xi + s.residue
            continue
        keep.append(s)
    return Generator(gen.variety, xi, tuple(keep))


def _apply_affine_elimination(gen: Generator) -> Generator:
    changed = True
    while changed:
        changed = False
        v = gen.variety
        for i, p in enumerate(v.eqs):
            for b in v.bound:
                a = p.linear_coefficient(b)
                if a is None or not a.is_constant() or abs(a.constant_value()) != 1:
                    continue
                rest = p - Poly.var(b).scale(a.constant_value())
                value = rest.scale(-1 / a.constant_value())
                sub = {b: value}
                eqs = tuple(q.subs(sub) for j, q in enumerate(v.eqs) if j != i)
                neqs = tuple(q.subs(sub) for q in v.neqs)
                g = tuple(GSummand(s.expr, s.order, None if s.residue is None else s.residue.subs(sub)) for s in gen.g)
                gen = Generator(ResVariety(tuple(x for x in v.bound if x != b), eqs, neqs), gen.xi.subs(sub), g)
                changed = True
                break
            if changed:
                break
    return gen


def _has_free_character_line(gen: Generator) -> bool:
    """A bound variable free in the variety entering the phase as +-b sums the character to zero."""
    v = gen.variety
    constrained = v.variables()
    for b in v.bound:
        if b in constrained:
            continue
        if any(s.residue is not None and b in s.residue.variables() for s in gen.g):
            continue
        a = gen.xi.linear_coefficient(b)
        if a is not None and a.is_constant() and abs(a.constant_value()) == 1:
            return True
    return False


def exp_normalize(a: ExpClass) -> ExpClass:
    """Apply order reduction, affine elimination and line nullity until stable."""
    acc: dict[Generator, int] = {}
    for g, m in a.gens.items():
        g2 = _apply_affine_elimination(_reduce_orders(g))
        cg = canonicalize(g2)
        if cg is None or _has_free_character_line(cg):
            continue
        acc[cg] = acc.get(cg, 0) + m
    return ExpClass(a.params, acc)


def merge_decomposition(a: ExpClass, whole: Generator, parts: Sequence[Generator]) -> ExpClass:
    """Replace ``sum(parts)`` by ``whole`` when every part occurs with equal multiplicity.

    The caller certifies that ``parts`` is a disjoint decomposition of ``whole``.
    """
    parts = [canonicalize(p) for p in parts]
    mults = {a.gens.get(p, 0) for p in parts}
    if len(mults) != 1 or 0 in mults:
        return a
    m = mults.pop()
    acc = {g: k for g, k in a.gens.items() if g not in parts}
    cw = canonicalize(whole)
    acc[cw] = acc.get(cw, 0) + m
    return ExpClass(a.params, acc)


# --- pull-back and push-forward ----------------------------------------------------

def res_pullback(a: ExpClass, mapping: Mapping[str, Poly], new_params: Sequence[str]) -> ExpClass:
    """Pull back along a polynomial map sending each old parameter to a polynomial in the new ones."""
    missing = set(a.params) - set(mapping)
    if missing:
        raise ArityMismatch(f"no image given for parameters {sorted(missing)}")
    acc: dict[Generator, int] = {}
    for g, m in a.gens.items():
        ren = {b: f"__p{i}" for i, b in enumerate(g.variety.bound)}
        g2 = _rename_generator(g, ren)
        sub = {k: Poly.coerce(v) for k, v in mapping.items()}
        v = g2.variety
        g3 = Generator(ResVariety(v.bound, tuple(p.subs(sub) for p in v.eqs), tuple(p.subs(sub) for p in v.neqs)),
                       g2.xi.subs(sub),
                       tuple(GSummand(s.expr, s.order, None if s.residue is None else s.residue.subs(sub)) for s in g2.g))
        acc[g3] = acc.get(g3, 0) + m
    return ExpClass(new_params, acc)


def res_pushforward(a: ExpClass, forget: Sequence[str], eqs=(), neqs=()) -> ExpClass:
    """Push forward along the projection forgetting the residue parameters ``forget``.

    ``eqs``/``neqs`` describe the source set inside the product with the forgotten
    line(s); they are added to every generator's fiber.
    """
    forget = list(forget)
    unknown = set(forget) - set(a.params)
    if unknown:
        raise ArityMismatch(f"cannot forget {sorted(unknown)}: not parameters of the class")
    new_params = tuple(p for p in a.params if p not in forget)
    acc: dict[Generator, int] = {}
    for g, m in a.gens.items():
        ren = {b: f"__q{i}" for i, b in enumerate(g.variety.bound)}
        g2 = _rename_generator(g, ren)
        v = g2.variety
        g3 = Generator(ResVariety(v.bound + tuple(forget), v.eqs + tuple(eqs), v.neqs + tuple(neqs)), g2.xi, g2.g)
        acc[g3] = acc.get(g3, 0) + m
    return ExpClass(new_params, acc)


# --- counting over finite fields --------------------------------------------------

@dataclass(frozen=True)
class Cyclotomic:
    """Exact element sum c_r zeta_p^r of Z[zeta_p], canonical with c_{p-1} = 0."""

    p: int
    coeffs: tuple

    @classmethod
    def from_counts(cls, p: int, counts: Sequence[int]) -> "Cyclotomic":
        counts = list(counts) + [0] * (p - len(counts))
        top = counts[p - 1]
        return cls(p, tuple(c - top for c in counts))

    @classmethod
    def of_int(cls, p: int, n: int) -> "Cyclotomic":
        return cls.from_counts(p, [n])

    def __add__(self, other: "Cyclotomic") -> "Cyclotomic":
        return Cyclotomic.from_counts(self.p, [a + b for a, b in zip(self.coeffs, other.coeffs)])

    def __sub__(self, other):
        return Cyclotomic.from_counts(self.p, [a - b for a, b in zip(self.coeffs, other.coeffs)])

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return Cyclotomic.from_counts(self.p, [a * other for a in self.coeffs])
        out = [0] * self.p
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    out[(i + j) % self.p] += a * b
        return Cyclotomic.from_counts(self.p, out)

    __rmul__ = __mul__

    def is_integer(self) -> bool:
        return not any(self.coeffs[1:])

    def as_int(self) -> int:
        if not self.is_integer():
            raise ValueError(f"{self} is not a rational integer")
        return self.coeffs[0]

    def to_complex(self) -> complex:
        return sum((c * cmath.exp(2j * cmath.pi * r / self.p) for r, c in enumerate(self.coeffs) if c), 0j)

    def __str__(self):
        if self.is_integer():
            return str(self.coeffs[0])
        terms = [f"{c}*z^{r}" if r else str(c) for r, c in enumerate(self.coeffs) if c]
        return " + ".join(terms) + f" (z = exp(2 pi i/{self.p}))"


def count_generator(gen: Generator, p: int, env: Mapping[str, int]) -> Cyclotomic:
    missing = gen.params() - set(env)
    if missing:
        raise UninstantiatedParameters(f"parameters {sorted(missing)} need values")
    if any(s.residue is None or s.order is None or s.order < 0 for s in gen.g):
        raise UninstantiatedParameters(f"valued-field phase {gen.g} has no residue reduction")
    v = gen.variety
    n = len(v.bound)
    if p ** n > COUNT_CAP:
        raise CountTooLarge(f"{p}^{n} points exceed the cap {COUNT_CAP}")
    xi = gen.xi
    for s in gen.g:
        if s.order == 0:
            xi = xi + s.residue
    counts = [0] * p
    base = {k: env[k] % p for k in gen.params()}
    for pt in product(range(p), repeat=n):
        e = dict(base)
        e.update(zip(v.bound, pt))
        if any(q.eval_mod(e, p) for q in v.eqs):
            continue
        if any(q.eval_mod(e, p) == 0 for q in v.neqs):
            continue
        counts[xi.eval_mod(e, p)] += 1
    return Cyclotomic.from_counts(p, counts)


def count_points(a: ExpClass, p: int, env: Mapping[str, int] | None = None) -> Cyclotomic:
    """Sum over F_p-points of psi(xi), psi(x) = exp(2 pi i x / p), weighted by multiplicities."""
    env = dict(env or {})
    missing = set(a.params) - set(env)
    used = set().union(*(g.params() for g in a.gens)) if a.gens else set()
    if missing & used:
        raise UninstantiatedParameters(f"parameters {sorted(missing & used)} need values")
    total = Cyclotomic.of_int(p, 0)
    for g, m in a.gens.items():
        total = total + count_generator(g, p, env) * m
    return total


def compare_classes(a: ExpClass, b: ExpClass, primes=(3, 5, 7), max_points: int = 200) -> Verdict:
    """Symbolic comparison after rewrites; otherwise point counts over the parameters."""
    if set(a.params) != set(b.params):
        raise BaseMismatch(f"classes over {a.params} and {b.params}")
    na, nb = exp_normalize(a), exp_normalize(b)
    if na.identical(nb):
        return Verdict(SYMBOLIC)
    params = sorted(a.params)
    checks = 0
    worst = 0.0
    for p in primes:
        pts = list(product(range(p), repeat=len(params)))[:max_points]
        for pt in pts:
            env = dict(zip(params, pt))
            ca, cb = count_points(a, p, env), count_points(b, p, env)
            checks += 1
            delta = abs(ca.to_complex() - cb.to_complex())
            if ca != cb:
                return Verdict(UNEQUAL, {"p": p, "params": env, "lhs": str(ca), "rhs": str(cb)}, checks, delta)
    return Verdict(SPECIALIZATION, None, checks, worst)
