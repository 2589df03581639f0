"""Affine terms over the value-group sort."""

from __future__ import annotations

from fractions import Fraction
from math import lcm
from typing import Iterable, Mapping, Union

from ..polys import Poly

Number = Union[int, Fraction]


class LinTerm:
    """``sum c_v * v + const`` with rational coefficients.

    Atoms always carry integer coefficients after normalization; rational
    coefficients appear in the values of definable functions such as
    ``(w - 1)/2`` on the odd residue class.
    """

    __slots__ = ("coeffs", "const", "_hash")

    def __init__(self, coeffs: Mapping[str, Number] | Iterable = (), const: Number = 0):
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        acc: dict[str, Fraction] = {}
        for v, c in items:
            acc[v] = acc.get(v, Fraction(0)) + Fraction(c)
        self.coeffs = tuple(sorted((v, c) for v, c in acc.items() if c))
        self.const = Fraction(const)
        self._hash = None

    @classmethod
    def var(cls, name: str, coeff: Number = 1) -> "LinTerm":
        return cls({name: coeff})

    @classmethod
    def constant(cls, c: Number) -> "LinTerm":
        return cls((), c)

    @classmethod
    def coerce(cls, x) -> "LinTerm":
        if isinstance(x, LinTerm):
            return x
        return cls.constant(x)

    # queries ------------------------------------------------------------
    def coeff(self, v: str) -> Fraction:
        for w, c in self.coeffs:
            if w == v:
                return c
        return Fraction(0)

    def variables(self) -> frozenset[str]:
        return frozenset(v for v, _ in self.coeffs)

    def is_constant(self) -> bool:
        return not self.coeffs

    def is_integral(self) -> bool:
        return self.const.denominator == 1 and all(c.denominator == 1 for _, c in self.coeffs)

    def denominator(self) -> int:
        return lcm(self.const.denominator, *(c.denominator for _, c in self.coeffs))

    def without(self, v: str) -> "LinTerm":
        return LinTerm([(w, c) for w, c in self.coeffs if w != v], self.const)

    def linear_part(self) -> tuple:
        return self.coeffs

    # arithmetic ---------------------------------------------------------
    def __add__(self, other):
        other = LinTerm.coerce(other)
        return LinTerm(list(self.coeffs) + list(other.coeffs), self.const + other.const)

    __radd__ = __add__

    def __neg__(self):
        return LinTerm([(v, -c) for v, c in self.coeffs], -self.const)

    def __sub__(self, other):
        return self + (-LinTerm.coerce(other))

    def __rsub__(self, other):
        return LinTerm.coerce(other) - self

    def __mul__(self, k: Number):
        if isinstance(k, LinTerm):
            if k.is_constant():
                k = k.const
            elif self.is_constant():
                return k * self.const
            else:
                raise ValueError("product of two non-constant affine terms")
        k = Fraction(k)
        return LinTerm([(v, c * k) for v, c in self.coeffs], self.const * k)

    __rmul__ = __mul__

    def __truediv__(self, k: Number):
        return self * (1 / Fraction(k))

    def subs(self, mapping: Mapping[str, "LinTerm"]) -> "LinTerm":
        out = LinTerm.constant(self.const)
        for v, c in self.coeffs:
            out = out + (LinTerm.coerce(mapping[v]) * c if v in mapping else LinTerm.var(v, c))
        return out

    def rename(self, mapping: Mapping[str, str]) -> "LinTerm":
        return LinTerm([(mapping.get(v, v), c) for v, c in self.coeffs], self.const)

    def evaluate(self, env: Mapping[str, Number]) -> Fraction:
        return self.const + sum((c * env[v] for v, c in self.coeffs), Fraction(0))

    def to_poly(self):
        out = Poly.const(self.const)
        for v, c in self.coeffs:
            out = out + Poly.var(v).scale(c)
        return out

    # comparison ---------------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = LinTerm.constant(other)
        if not isinstance(other, LinTerm):
            return NotImplemented
        return self.coeffs == other.coeffs and self.const == other.const

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.coeffs, self.const))
        return self._hash

    def sort_key(self):
        return (self.coeffs, self.const)

    def __str__(self):
        parts: list[tuple[str, str]] = []
        for v, c in self.coeffs:
            a = abs(c)
            body = v if a == 1 else f"{a}*{v}"
            parts.append(("-" if c < 0 else "+", body))
        if self.const or not parts:
            parts.append(("-" if self.const < 0 else "+", str(abs(self.const))))
        sign, body = parts[0]
        out = ("-" if sign == "-" else "") + body
        for sign, body in parts[1:]:
            out += f" {sign} {body}"
        return out

    def __repr__(self):
        return f"LinTerm({self})"


def lin(expr: str | Number | LinTerm = 0, **coeffs: Number) -> LinTerm:
    """Shorthand: ``lin(3, x=1, y=-2)`` is ``x - 2*y + 3``; ``lin('x')`` is ``x``."""
    if isinstance(expr, str):
        return LinTerm.var(expr) + LinTerm(coeffs)
    return LinTerm(coeffs, 0) + LinTerm.coerce(expr)
