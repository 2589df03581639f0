"""Presburger constructible functions: finite sums ``a * P * L^beta * 1_C``.

``a`` lies in the coefficient ring, ``P`` is a polynomial in the integer
variables (the product of the definable factors, expanded on the cell C),
``beta`` is affine on C and C is a Presburger cell.  Summation over an
integer variable decomposes each fiber into progressions and uses closed
forms of ``sum k^p x^k``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product
from math import comb, gcd, lcm
from typing import Iterable, Mapping, Sequence

from .coeff_ring import ONE, RingAElem, nu_q, power_series_sum
from .errors import (
    AmbientMismatch, ArityMismatch, DegreeCapExceeded, NotIntegrable, PointOutsideDomain, QOutOfRange,
)
from .polys import Poly
from .presburger import (
    TOP, Cell, DefinableMap, LinTerm, PresburgerSet, is_satisfiable, progression_decomposition,
)
from .presburger.formula import cell_and, cell_substitute
from .presburger.sets import cell_difference, simplify_cells
from .verdicts import SPECIALIZATION, SYMBOLIC, UNEQUAL, Verdict

DEGREE_CAP = 8
SMALL_COUNT = 16
_K = "__k"


@dataclass(frozen=True)
class PresTerm:
    coeff: RingAElem
    poly: Poly
    beta: LinTerm
    support: Cell

    def value(self, env: Mapping[str, int]) -> tuple[RingAElem, Fraction]:
        return self.coeff, self.poly.evaluate(env)

    def nu(self, env: Mapping[str, int], q) -> Fraction:
        b = self.beta.evaluate(env)
        if b.denominator != 1:
            raise ValueError(f"exponent {b} at {env} is not an integer")
        return nu_q(self.coeff, q) * self.poly.evaluate(env) * Fraction(q) ** int(b)

    def sort_key(self):
        return (str(self.support), str(self.beta), str(self.poly), str(self.coeff))

    def __str__(self):
        parts = []
        sign = ""
        poly = self.poly
        if poly.is_constant() and poly.constant_value() < 0:
            sign, poly = "-", -poly
        if not self.coeff.identical(ONE):
            text = str(self.coeff)
            parts.append(f"({text})" if " " in text else text)
        if poly != Poly.const(1):
            parts.append(f"({poly})" if " " in str(poly) else str(poly))
        if self.beta != LinTerm.constant(0):
            parts.append(f"L^({self.beta})")
        if not self.support.is_top():
            parts.append(f"[{self.support}]")
        return sign + ("*".join(parts) if parts else "1")


class PresFunction:
    """Element of the ring of Presburger constructible functions on a set."""

    __slots__ = ("vars", "domain", "terms")

    def __init__(self, vars: Sequence[str], domain: PresburgerSet | None = None,
                 terms: Iterable[PresTerm] = ()):
        self.vars = tuple(vars)
        self.domain = domain if domain is not None else PresburgerSet.universe(self.vars)
        if self.domain.vars != self.vars:
            raise ArityMismatch(f"domain over {self.domain.vars}, function over {self.vars}")
        out = []
        for t in terms:
            if t.coeff.is_zero() or t.poly.is_zero():
                continue
            extra = (t.support.variables() | t.beta.variables() | t.poly.variables()) - set(self.vars)
            if extra:
                raise ArityMismatch(f"term uses {sorted(extra)} outside {self.vars}")
            out.append(t)
        self.terms = tuple(out)

    # constructors -------------------------------------------------------
    @classmethod
    def constant(cls, vars, a=1, domain: PresburgerSet | None = None) -> "PresFunction":
        a = RingAElem.coerce(a)
        return cls(vars, domain, [PresTerm(a, Poly.const(1), LinTerm.constant(0), TOP)])

    @classmethod
    def indicator(cls, vars, s: PresburgerSet | Cell, domain: PresburgerSet | None = None):
        cells = s.pieces if isinstance(s, PresburgerSet) else (s,)
        return cls(vars, domain, [PresTerm(ONE, Poly.const(1), LinTerm.constant(0), c) for c in cells])

    @classmethod
    def L_power(cls, vars, beta: LinTerm, domain: PresburgerSet | None = None):
        return cls(vars, domain, [PresTerm(ONE, Poly.const(1), LinTerm.coerce(beta), TOP)])

    @classmethod
    def polynomial(cls, vars, poly: Poly, domain: PresburgerSet | None = None):
        return cls(vars, domain, [PresTerm(ONE, poly, LinTerm.constant(0), TOP)])

    @classmethod
    def zero(cls, vars, domain: PresburgerSet | None = None):
        return cls(vars, domain, [])

    def with_terms(self, terms) -> "PresFunction":
        return PresFunction(self.vars, self.domain, terms)

    # arithmetic ---------------------------------------------------------
    def _check(self, other: "PresFunction"):
        if self.vars != other.vars:
            raise AmbientMismatch(f"functions over {self.vars} and {other.vars}")
        if self.domain is not other.domain and not self.domain.equals(other.domain):
            raise AmbientMismatch("functions on different domains")

    def __add__(self, other: "PresFunction") -> "PresFunction":
        self._check(other)
        return self.with_terms(self.terms + other.terms).collect()

    def __neg__(self) -> "PresFunction":
        return self.with_terms(PresTerm(-t.coeff, t.poly, t.beta, t.support) for t in self.terms)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other) -> "PresFunction":
        if isinstance(other, (int, RingAElem)):
            return self.scale(RingAElem.coerce(other))
        self._check(other)
        out = []
        for a, b in product(self.terms, other.terms):
            c = cell_and(a.support, b.support)
            if c is None or not is_satisfiable(c):
                continue
            out.append(PresTerm(a.coeff * b.coeff, a.poly * b.poly, a.beta + b.beta, c))
        return self.with_terms(out).collect()

    __rmul__ = __mul__

    def scale(self, a: RingAElem) -> "PresFunction":
        return self.with_terms(PresTerm(t.coeff * a, t.poly, t.beta, t.support) for t in self.terms)

    def restrict(self, s: PresburgerSet) -> "PresFunction":
        """Multiply by the indicator of ``s`` (domain unchanged)."""
        return self * PresFunction.indicator(self.vars, s, self.domain)

    # evaluation ---------------------------------------------------------
    def _env(self, point) -> dict[str, int]:
        if isinstance(point, Mapping):
            return {v: point[v] for v in self.vars}
        point = tuple(point)
        if len(point) != len(self.vars):
            raise ArityMismatch(f"point of arity {len(point)} for a function of arity {len(self.vars)}")
        return dict(zip(self.vars, point))

    def value(self, point) -> RingAElem:
        """Exact value in the coefficient ring."""
        env = self._env(point)
        if not self.domain.contains(env):
            raise PointOutsideDomain(f"{env} is outside the domain")
        pairs = []
        for t in self.terms:
            if t.support.holds(env):
                b = t.beta.evaluate(env)
                pairs.append((t.coeff * RingAElem.L_pow(int(b)), t.poly.evaluate(env)))
        den = lcm(1, *(r.denominator for _, r in pairs))
        total = RingAElem()
        for a, r in pairs:
            total = total + a * int(r * den)
        return total.div_int(den) if den > 1 else total

    def nu(self, point, q) -> Fraction:
        env = self._env(point)
        if not self.domain.contains(env):
            raise PointOutsideDomain(f"{env} is outside the domain")
        return sum((t.nu(env, q) for t in self.terms if t.support.holds(env)), Fraction(0))

    # normalization ------------------------------------------------------
    def collect(self) -> "PresFunction":
        """Refine supports to disjoint cells and merge terms sharing cell and exponent."""
        terms = [_absorb_constant(t) for t in self.terms]
        pieces = _venn([t.support for t in terms])
        out: list[PresTerm] = []
        for cell, idx in pieces:
            groups: dict[LinTerm, list[PresTerm]] = {}
            for i in idx:
                groups.setdefault(terms[i].beta, []).append(terms[i])
            for beta, ts in groups.items():
                out.extend(_merge_terms(ts, beta, cell))
        # terms identical up to support: merge the supports when they tile a simpler cell
        by_body: dict[tuple, list[Cell]] = {}
        bodies: dict[tuple, PresTerm] = {}
        for t in out:
            key = (t.coeff.shift, t.coeff.num, t.coeff.den, t.poly, t.beta)
            by_body.setdefault(key, []).append(t.support)
            bodies[key] = t
        final = []
        for key, cells in by_body.items():
            t = bodies[key]
            for c in (simplify_cells(cells) if len(cells) > 1 else cells):
                final.append(PresTerm(t.coeff, t.poly, t.beta, c))
        final.sort(key=PresTerm.sort_key)
        return self.with_terms(final)

    def is_zero_symbolic(self) -> bool:
        return not self.collect().terms

    # pull-back ----------------------------------------------------------
    def pullback(self, m: DefinableMap, domain: PresburgerSet | None = None) -> "PresFunction":
        """Composition with a piecewise-affine map into this function's variables."""
        if m.target != self.vars:
            raise ArityMismatch(f"map target {m.target} differs from {self.vars}")
        new_domain = m.preimage(self.domain)
        if domain is not None:
            new_domain = domain.intersect(new_domain) if domain.vars == new_domain.vars else new_domain
        out = []
        for mc, vals in m.pieces:
            polys = {k: v.to_poly() for k, v in vals.items()}
            for t in self.terms:
                sub = cell_substitute(t.support, vals)
                if sub is None:
                    continue
                c = cell_and(mc, sub)
                if c is None or not is_satisfiable(c):
                    continue
                out.append(PresTerm(t.coeff, t.poly.subs(polys), t.beta.subs(vals), c))
        return PresFunction(m.source, new_domain, out).collect()

    def extend_vars(self, vars: Sequence[str], domain: PresburgerSet | None = None) -> "PresFunction":
        """Pull back along the coordinate projection onto a larger variable list."""
        dom = domain if domain is not None else PresburgerSet(vars, self.domain.pieces, disjoint=True)
        return PresFunction(vars, dom, self.terms)

    def rename(self, mapping: Mapping[str, str]) -> "PresFunction":
        vals = {v: LinTerm.var(mapping.get(v, v)) for v in self.vars}
        m = DefinableMap.affine([mapping.get(v, v) for v in self.vars], self.vars, vals)
        return self.pullback(m)

    # summation ----------------------------------------------------------
    def sum_over(self, var: str | Sequence[str] | None = None) -> "PresFunction":
        """Sum over one or several integer variables (last listed is summed first)."""
        if var is None:
            var = self.vars[-1]
        if not isinstance(var, str):
            out = self
            for v in reversed(list(var)):
                out = out.sum_over(v)
            return out
        return _sum_one(self, var)

    def __str__(self):
        if not self.terms:
            return "0"
        out = str(self.terms[0])
        for t in self.terms[1:]:
            text = str(t)
            out += f" - {text[1:]}" if text.startswith("-") else f" + {text}"
        return out

    def __repr__(self):
        return f"PresFunction({', '.join(self.vars)} | {self})"


def _venn(cells: list[Cell]) -> list[tuple[Cell, list[int]]]:
    pieces: list[tuple[Cell, list[int]]] = []
    for i, c in enumerate(cells):
        nxt = []
        rest = [c]
        for p, idx in pieces:
            both = cell_and(p, c)
            if both is not None and is_satisfiable(both):
                nxt.append((both, idx + [i]))
                nxt.extend((d, idx) for d in cell_difference(p, c))
                rest = [r for q in rest for r in cell_difference(q, p)]
            else:
                nxt.append((p, idx))
        nxt.extend((r, [i]) for r in rest if is_satisfiable(r))
        pieces = nxt
    return pieces


def _absorb_constant(t: PresTerm) -> PresTerm:
    """Move the integer part of the exponent's constant into the coefficient."""
    k = t.beta.const.numerator // t.beta.const.denominator
    if k == 0:
        return t
    return PresTerm(t.coeff * RingAElem.L_pow(k), t.poly, t.beta - k, t.support)


def _merge_terms(ts: list[PresTerm], beta: LinTerm, cell: Cell) -> list[PresTerm]:
    den = lcm(1, *(c.denominator for t in ts for c in t.poly.terms.values()))
    acc: dict = {}
    for t in ts:
        for mono, c in t.poly.terms.items():
            acc[mono] = acc.get(mono, RingAElem()) + t.coeff * int(c * den)
    out = []
    for mono, a in acc.items():
        if a.is_zero():
            continue
        g = gcd(a.content(), den)
        if a.num and a.num[-1] < 0:
            g = -g
        out.append(PresTerm(a.div_int(g), Poly({mono: Fraction(g, den)}), beta, cell))
    return out


@lru_cache(maxsize=None)
def faulhaber(p: int) -> Poly:
    """Polynomial F in ``K`` with F(K) = sum_{k=0}^{K} k^p for K >= 0."""
    vals = [sum(k ** p for k in range(n + 1)) for n in range(p + 2)]
    diffs = []
    row = vals
    while row:
        diffs.append(row[0])
        row = [b - a for a, b in zip(row, row[1:])]
    K = Poly.var("K")
    out = Poly()
    binom = Poly.const(1)
    for j, d in enumerate(diffs):
        out = out + binom.scale(d)
        binom = binom * (K - j).scale(Fraction(1, j + 1))
    return out


def progression_terms(t: PresTerm, x: str, prog) -> list[PresTerm]:
    """Sum of one term over one progression in ``x``; raises NotIntegrable."""
    start_poly = prog.start.to_poly()
    shifted = t.poly.subs({x: start_poly + Poly.var(_K).scale(prog.step)})
    by_power = shifted.coefficients_in(_K)
    top = max(by_power, default=0)
    if top > DEGREE_CAP:
        raise DegreeCapExceeded(f"polynomial degree {top} in the summed variable exceeds {DEGREE_CAP}")
    beta0 = t.beta.subs({x: prog.start})
    slope = t.beta.coeff(x) * prog.step
    if slope.denominator != 1:
        raise ValueError(f"non-integral exponent slope {slope}")
    c = int(slope)
    out: list[PresTerm] = []
    cell = prog.params
    if prog.count is None:
        if c >= 0:
            raise NotIntegrable(
                f"exponent has slope {c} >= 0 along an unbounded progression",
                witness={"progression": str(prog), "term": str(t), "slope": c})
        for pw, cp in by_power.items():
            out.append(PresTerm(t.coeff * power_series_sum(pw, c), cp, beta0, cell))
        return out
    K = prog.count
    if K.is_constant() and K.const <= SMALL_COUNT:
        for k in range(int(K.const) + 1):
            for pw, cp in by_power.items():
                out.append(PresTerm(t.coeff, cp.scale(k ** pw), beta0 + c * k, cell))
        return out
    Kp = K.to_poly()
    if c == 0:
        for pw, cp in by_power.items():
            out.append(PresTerm(t.coeff, cp * faulhaber(pw).subs({"K": Kp}), beta0, cell))
        return out
    # sum_{k=0}^{K} k^p x^k = S_p - x^(K+1) * sum_i C(p,i) (K+1)^(p-i) S_i
    tail_beta = beta0 + (K + 1) * c
    for pw, cp in by_power.items():
        out.append(PresTerm(t.coeff * power_series_sum(pw, c), cp, beta0, cell))
        for i in range(pw + 1):
            poly = cp * (Kp + 1) ** (pw - i)
            out.append(PresTerm(-t.coeff * power_series_sum(i, c), poly.scale(comb(pw, i)), tail_beta, cell))
    return out


def _sum_one(phi: PresFunction, x: str) -> PresFunction:
    if x not in phi.vars:
        raise ArityMismatch(f"{x} is not a variable of the function")
    rest = tuple(v for v in phi.vars if v != x)
    domain = phi.domain.project(rest)
    collected = phi.collect()
    out: list[PresTerm] = []
    cache: dict[Cell, list] = {}
    for t in collected.terms:
        # terms are only integrable over the part of their support inside the domain
        for dom_cell in phi.domain.pieces:
            cell = cell_and(t.support, dom_cell)
            if cell is None or not is_satisfiable(cell):
                continue
            if cell not in cache:
                cache[cell] = progression_decomposition(cell, x)
            for prog in cache[cell]:
                out.extend(progression_terms(t, x, prog))
    return PresFunction(rest, domain, out).collect()


def sum_over_Z(phi: PresFunction, vars: Sequence[str] | str | None = None) -> PresFunction:
    return phi.sum_over(vars)


def integrability_test_Z(phi: PresFunction, vars: Sequence[str] | str | None = None):
    """``(True, None)`` if summable over ``vars`` for every q > 1, else ``(False, witness)``."""
    try:
        phi.sum_over(vars)
    except NotIntegrable as exc:
        return False, exc.witness
    return True, None


def pres_arith(op: str, phi: PresFunction, psi: PresFunction) -> PresFunction:
    if op == "add":
        return phi + psi
    if op == "mul":
        return phi * psi
    raise ValueError(f"unknown operation {op!r}")


def pullback_pres(phi: PresFunction, gamma: DefinableMap) -> PresFunction:
    return phi.pullback(gamma)


def eval_nu_q(phi: PresFunction, point, q) -> Fraction:
    if Fraction(q) <= 1:
        raise QOutOfRange(f"q must exceed 1, got {q}")
    return phi.nu(point, q)


def sample_points(vars: Sequence[str], box: int, limit: int = 400) -> list[dict[str, int]]:
    """Deterministic sample of integer points in ``[-box, box]^r``."""
    pts = [dict(zip(vars, p)) for p in product(range(-box, box + 1), repeat=len(vars))]
    if len(pts) <= limit:
        return pts
    step = len(pts) / limit
    return [pts[int(i * step)] for i in range(limit)]


def compare_pres(phi: PresFunction, psi: PresFunction, qs=(2, 3), box: int = 6) -> Verdict:
    """Symbolic comparison, falling back to nu_q falsification on a box."""
    if phi.vars != psi.vars:
        raise AmbientMismatch(f"functions over {phi.vars} and {psi.vars}")
    if not phi.domain.equals(psi.domain):
        for env in sample_points(phi.vars, box):
            if phi.domain.contains(env) != psi.domain.contains(env):
                return Verdict(UNEQUAL, {"point": env, "reason": "domains differ"})
    psi2 = PresFunction(psi.vars, phi.domain, psi.terms)
    diff = (phi - psi2)
    if not diff.terms:
        return Verdict(SYMBOLIC)
    checks, worst = 0, 0.0
    for env in sample_points(phi.vars, box):
        if not phi.domain.contains(env):
            continue
        for q in qs:
            a, b = phi.nu(env, q), psi.nu(env, q)
            checks += 1
            if a != b:
                return Verdict(UNEQUAL, {"point": env, "q": str(q), "lhs": str(a), "rhs": str(b)},
                               checks, float(abs(a - b)))
    return Verdict(SPECIALIZATION, None, checks, worst,
                   ["symbolic difference did not cancel; agreement on all samples"])
