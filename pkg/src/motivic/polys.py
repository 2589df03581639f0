"""Sparse multivariate Laurent polynomials over the rationals.

One small class serves three roles in the package: polynomial prefactors
of Presburger functions, residue-field equations, and valued-field
expressions in the coordinates and the uniformizer ``t``.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping, Union

Monomial = tuple[tuple[str, int], ...]
Number = Union[int, Fraction]


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    exps = dict(a)
    for v, e in b:
        exps[v] = exps.get(v, 0) + e
    return tuple(sorted((v, e) for v, e in exps.items() if e != 0))


def _mono_key(m: Monomial):
    return (-sum(e for _, e in m), tuple((v, -e) for v, e in m))


class Poly:
    """Immutable polynomial; monomials map to nonzero ``Fraction`` coefficients."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Monomial, Number] | None = None):
        clean: dict[Monomial, Fraction] = {}
        if terms:
            for m, c in terms.items():
                if c:
                    clean[m] = Fraction(c)
        self._terms = clean
        self._hash = None

    # construction -----------------------------------------------------
    @classmethod
    def const(cls, c: Number) -> "Poly":
        return cls({(): c})

    @classmethod
    def var(cls, name: str, exp: int = 1) -> "Poly":
        if exp == 0:
            return cls.const(1)
        return cls({((name, exp),): 1})

    @classmethod
    def coerce(cls, x: "Poly | Number") -> "Poly":
        if isinstance(x, Poly):
            return x
        return cls.const(x)

    # inspection -------------------------------------------------------
    @property
    def terms(self) -> dict[Monomial, Fraction]:
        return self._terms

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(m == () for m in self._terms)

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError(f"{self} is not constant")
        return self._terms.get((), Fraction(0))

    def variables(self) -> frozenset[str]:
        return frozenset(v for m in self._terms for v, _ in m)

    def degree(self, var: str) -> int:
        return max((dict(m).get(var, 0) for m in self._terms), default=0)

    def min_degree(self, var: str) -> int:
        return min((dict(m).get(var, 0) for m in self._terms), default=0)

    def total_degree(self) -> int:
        return max((sum(e for _, e in m) for m in self._terms), default=0)

    def has_integer_coefficients(self) -> bool:
        return all(c.denominator == 1 for c in self._terms.values())

    def coefficients_in(self, var: str) -> dict[int, "Poly"]:
        """View as a polynomial in ``var``: exponent -> coefficient poly."""
        out: dict[int, dict[Monomial, Fraction]] = {}
        for m, c in self._terms.items():
            e = dict(m).get(var, 0)
            rest = tuple((v, k) for v, k in m if v != var)
            out.setdefault(e, {})[rest] = c
        return {e: Poly(t) for e, t in out.items()}

    # arithmetic -------------------------------------------------------
    def __add__(self, other):
        other = Poly.coerce(other)
        res = dict(self._terms)
        for m, c in other._terms.items():
            res[m] = res.get(m, 0) + c
        return Poly(res)

    __radd__ = __add__

    def __neg__(self):
        return Poly({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-Poly.coerce(other))

    def __rsub__(self, other):
        return Poly.coerce(other) - self

    def __mul__(self, other):
        other = Poly.coerce(other)
        res: dict[Monomial, Fraction] = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = _mono_mul(m1, m2)
                res[m] = res.get(m, 0) + c1 * c2
        return Poly(res)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            if len(self._terms) == 1:
                (m, c), = self._terms.items()
                return Poly({tuple((v, e * n) for v, e in m): Fraction(1) / c ** (-n)})
            raise ValueError("negative power of a non-monomial")
        result = Poly.const(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def scale(self, c: Number) -> "Poly":
        return Poly({m: v * c for m, v in self._terms.items()})

    # evaluation and substitution --------------------------------------
    def evaluate(self, env: Mapping[str, Number]) -> Fraction:
        total = Fraction(0)
        for m, c in self._terms.items():
            val = c
            for v, e in m:
                val *= Fraction(env[v]) ** e
            total += val
        return total

    def eval_mod(self, env: Mapping[str, int], p: int) -> int:
        """Evaluate with integer arguments modulo a prime ``p``."""
        total = 0
        for m, c in self._terms.items():
            num = c.numerator % p
            den = c.denominator % p
            if den == 0:
                raise ZeroDivisionError(f"coefficient {c} not p-integral for p={p}")
            val = num * pow(den, -1, p)
            for v, e in m:
                x = env[v] % p
                if e < 0:
                    if x == 0:
                        raise ZeroDivisionError(f"{v}=0 in negative power")
                    x = pow(x, -1, p)
                    e = -e
                val = val * pow(x, e, p)
            total += val
        return total % p

    def subs(self, mapping: Mapping[str, "Poly | Number"]) -> "Poly":
        if not mapping:
            return self
        mapping = {k: Poly.coerce(v) for k, v in mapping.items()}
        result = Poly()
        for m, c in self._terms.items():
            term = Poly.const(c)
            keep: list[tuple[str, int]] = []
            for v, e in m:
                if v in mapping:
                    term = term * mapping[v] ** e
                else:
                    keep.append((v, e))
            if keep:
                term = term * Poly({tuple(keep): 1})
            result = result + term
        return result

    def rename(self, mapping: Mapping[str, str]) -> "Poly":
        res: dict[Monomial, Fraction] = {}
        for m, c in self._terms.items():
            exps: dict[str, int] = {}
            for v, e in m:
                w = mapping.get(v, v)
                exps[w] = exps.get(w, 0) + e
            mono = tuple(sorted((v, e) for v, e in exps.items() if e))
            res[mono] = res.get(mono, 0) + c
        return Poly(res)

    def diff(self, var: str) -> "Poly":
        res: dict[Monomial, Fraction] = {}
        for m, c in self._terms.items():
            d = dict(m)
            e = d.get(var, 0)
            if e == 0:
                continue
            d[var] = e - 1
            mono = tuple(sorted((v, k) for v, k in d.items() if k))
            res[mono] = res.get(mono, 0) + c * e
        return Poly(res)

    def linear_coefficient(self, var: str) -> "Poly | None":
        """If ``self = a*var + rest`` with ``var`` absent from a and rest, return a."""
        coeffs = self.coefficients_in(var)
        if set(coeffs) - {0, 1}:
            return None
        a = coeffs.get(1)
        if a is None or var in a.variables():
            return None
        return a

    # comparison and display -------------------------------------------
    def _key(self):
        return tuple(sorted(self._terms.items(), key=lambda kv: _mono_key(kv[0])))

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Poly.const(other)
        if not isinstance(other, Poly):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def sort_key(self) -> str:
        return str(self)

    def __str__(self):
        if not self._terms:
            return "0"
        parts: list[str] = []
        for m, c in sorted(self._terms.items(), key=lambda kv: _mono_key(kv[0])):
            mono = "*".join(v if e == 1 else f"{v}^{e}" for v, e in m)
            sign = "-" if c < 0 else "+"
            a = abs(c)
            if not mono:
                body = str(a)
            elif a == 1:
                body = mono
            else:
                body = f"{a}*{mono}"
            parts.append((sign, body))
        first_sign, first = parts[0]
        out = ("-" if first_sign == "-" else "") + first
        for sign, body in parts[1:]:
            out += f" {sign} {body}"
        return out

    def __repr__(self):
        return f"Poly({self})"


def poly_sum(items: Iterable[Poly]) -> Poly:
    total = Poly()
    for p in items:
        total = total + p
    return total
