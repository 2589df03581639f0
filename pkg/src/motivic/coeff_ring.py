"""Exact arithmetic in A = Z[L, L^-1, 1/(1 - L^-i)] and its specializations.

An element is stored as ``L^shift * N(L) / prod (L^i - 1)^m_i`` with N an
integer polynomial.  Representatives are not canonical (cyclotomic overlap
between the factors is never split), so equality is decided by
cross-multiplication.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import gcd
from typing import Mapping

from .errors import NotInvertible, QOutOfRange

IntPoly = tuple[int, ...]


# integer polynomials in L, coefficient tuples from low to high degree -------

def _trim(p) -> IntPoly:
    p = list(p)
    while p and p[-1] == 0:
        p.pop()
    return tuple(p)


def _padd(a: IntPoly, b: IntPoly) -> IntPoly:
    n = max(len(a), len(b))
    return _trim(
        (a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)
    )


def _pmul(a: IntPoly, b: IntPoly) -> IntPoly:
    if not a or not b:
        return ()
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return _trim(out)


def _pshift(a: IntPoly, k: int) -> IntPoly:
    return (0,) * k + a if a else ()


def _cyc(i: int) -> IntPoly:
    """The polynomial L^i - 1."""
    return (-1,) + (0,) * (i - 1) + (1,)


def _divmod_cyc(a: IntPoly, i: int) -> tuple[IntPoly, bool]:
    """Divide by L^i - 1; return (quotient, exact)."""
    if len(a) <= i:
        return (), not a
    rem = list(a)
    quot = [0] * (len(a) - i)
    for d in range(len(a) - 1, i - 1, -1):
        c = rem[d]
        if c:
            quot[d - i] = c
            rem[d] = 0
            rem[d - i] += c
    return _trim(quot), not any(rem[:i])


def _ppow(a: IntPoly, n: int) -> IntPoly:
    out: IntPoly = (1,)
    for _ in range(n):
        out = _pmul(out, a)
    return out


def _den_poly(den: Mapping[int, int]) -> IntPoly:
    out: IntPoly = (1,)
    for i, m in den.items():
        out = _pmul(out, _ppow(_cyc(i), m))
    return out


class RingAElem:
    """Element of the universal coefficient ring, immutable."""

    __slots__ = ("shift", "num", "den")

    def __init__(self, shift: int = 0, num: IntPoly = (), den: Mapping[int, int] | None = None):
        den = {i: m for i, m in (den or {}).items() if m}
        for i, m in den.items():
            if i < 1 or m < 0:
                raise ValueError(f"bad denominator factor (L^{i}-1)^{m}")
        num = _trim(num)
        if not num:
            self.shift, self.num, self.den = 0, (), ()
            return
        k = 0
        while num[k] == 0:
            k += 1
        num = num[k:]
        shift += k
        for i in sorted(den, reverse=True):
            while den[i]:
                q, exact = _divmod_cyc(num, i)
                if not exact:
                    break
                num = q
                den[i] -= 1
        self.shift = shift
        self.num = num
        self.den = tuple(sorted((i, m) for i, m in den.items() if m))

    # constructors -----------------------------------------------------
    @classmethod
    def integer(cls, n: int) -> "RingAElem":
        return cls(0, (n,))

    @classmethod
    def L_pow(cls, k: int, coeff: int = 1) -> "RingAElem":
        return cls(k, (coeff,))

    @classmethod
    def from_laurent(cls, coeffs: Mapping[int, int]) -> "RingAElem":
        coeffs = {e: c for e, c in coeffs.items() if c}
        if not coeffs:
            return ZERO
        lo = min(coeffs)
        num = [0] * (max(coeffs) - lo + 1)
        for e, c in coeffs.items():
            num[e - lo] = c
        return cls(lo, tuple(num))

    @classmethod
    def geometric(cls, c: int) -> "RingAElem":
        """The element 1/(1 - L^c) for c != 0."""
        if c == 0:
            raise NotInvertible("1/(1 - L^0) is not in A")
        if c < 0:
            return cls(-c, (1,), {-c: 1})
        return cls(0, (-1,), {c: 1})

    @classmethod
    def coerce(cls, x) -> "RingAElem":
        if isinstance(x, RingAElem):
            return x
        if isinstance(x, int):
            return cls.integer(x)
        raise TypeError(f"cannot coerce {x!r} into A")

    # predicates -------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.num

    def is_integer(self) -> bool:
        return not self.den and self.shift == 0 and len(self.num) <= 1

    def as_integer(self) -> int:
        if self.is_zero():
            return 0
        if not self.is_integer():
            raise ValueError(f"{self} is not an integer")
        return self.num[0]

    def as_laurent(self) -> dict[int, int] | None:
        if self.den:
            return None
        return {self.shift + j: c for j, c in enumerate(self.num) if c}

    def is_reduced(self) -> bool:
        for i, _ in self.den:
            if _divmod_cyc(self.num, i)[1]:
                return False
        return not self.num or self.num[0] != 0

    # ring operations --------------------------------------------------
    def __add__(self, other):
        if isinstance(other, int):
            other = RingAElem.integer(other)
        if not isinstance(other, RingAElem):
            return NotImplemented
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        d1, d2 = dict(self.den), dict(other.den)
        common = {i: max(d1.get(i, 0), d2.get(i, 0)) for i in set(d1) | set(d2)}
        n1 = _pmul(self.num, _den_poly({i: m - d1.get(i, 0) for i, m in common.items()}))
        n2 = _pmul(other.num, _den_poly({i: m - d2.get(i, 0) for i, m in common.items()}))
        s = min(self.shift, other.shift)
        num = _padd(_pshift(n1, self.shift - s), _pshift(n2, other.shift - s))
        return RingAElem(s, num, common)

    __radd__ = __add__

    def __neg__(self):
        return RingAElem(self.shift, tuple(-c for c in self.num), dict(self.den))

    def __sub__(self, other):
        if isinstance(other, int):
            other = RingAElem.integer(other)
        return self + (-other)

    def __rsub__(self, other):
        return RingAElem.coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, int):
            other = RingAElem.integer(other)
        if not isinstance(other, RingAElem):
            return NotImplemented
        if self.is_zero() or other.is_zero():
            return ZERO
        den = dict(self.den)
        for i, m in other.den:
            den[i] = den.get(i, 0) + m
        return RingAElem(self.shift + other.shift, _pmul(self.num, other.num), den)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        out = ONE
        for _ in range(n):
            out = out * self
        return out

    def content(self) -> int:
        """gcd of the numerator coefficients (0 for zero)."""
        g = 0
        for c in self.num:
            g = gcd(g, c)
        return g

    def div_int(self, k: int) -> "RingAElem":
        """Exact division by a nonzero integer dividing the content."""
        if k == 0 or any(c % k for c in self.num):
            raise NotInvertible(f"{self} is not divisible by {k} in A")
        return RingAElem(self.shift, tuple(c // k for c in self.num), dict(self.den))

    def inverse(self) -> "RingAElem":
        """Inverse in A; only units (+-L^k times products of (L^i-1)) qualify."""
        if self.is_zero():
            raise NotInvertible("0 is not invertible")
        factors = _factor_cyclotomic_product(self.num)
        if factors is None:
            raise NotInvertible(f"{self} is not a unit of A")
        sign, fac = factors
        return RingAElem(-self.shift, tuple(sign * c for c in _den_poly(dict(self.den))), fac)

    def __truediv__(self, other):
        other = RingAElem.coerce(other)
        return self * other.inverse()

    def __rtruediv__(self, other):
        return RingAElem.coerce(other) * self.inverse()

    # equality ---------------------------------------------------------
    def is_equal(self, other) -> bool:
        other = RingAElem.coerce(other)
        s = min(self.shift, other.shift)
        lhs = _pshift(_pmul(self.num, _den_poly(dict(other.den))), self.shift - s)
        rhs = _pshift(_pmul(other.num, _den_poly(dict(self.den))), other.shift - s)
        return lhs == rhs

    def __eq__(self, other):
        if isinstance(other, int):
            other = RingAElem.integer(other)
        if not isinstance(other, RingAElem):
            return NotImplemented
        return self.is_equal(other)

    def __hash__(self):
        return hash(nu_q(self, 3))

    def identical(self, other: "RingAElem") -> bool:
        return (self.shift, self.num, self.den) == (other.shift, other.num, other.den)

    # display ----------------------------------------------------------
    def __str__(self):
        return format_ring(self)

    def __repr__(self):
        return f"RingAElem({format_ring(self)})"


ZERO = RingAElem()
ONE = RingAElem.integer(1)
L = RingAElem.L_pow(1)


def ring_arith(op: str, a: RingAElem, b: RingAElem | None = None) -> RingAElem:
    if op == "add":
        return a + b
    if op == "mul":
        return a * b
    if op == "neg":
        return -a
    raise ValueError(f"unknown ring operation {op!r}")


def is_equal(a: RingAElem, b: RingAElem) -> bool:
    return RingAElem.coerce(a).is_equal(b)


def nu_q(a: RingAElem, q) -> Fraction:
    """Specialize L to the rational q > 1."""
    q = Fraction(q)
    if q <= 1:
        raise QOutOfRange(f"q must exceed 1, got {q}")
    if a.is_zero():
        return Fraction(0)
    val = Fraction(0)
    for c in reversed(a.num):
        val = val * q + c
    val *= q ** a.shift
    for i, m in a.den:
        val /= (q ** i - 1) ** m
    return val


def _factor_cyclotomic_product(num: IntPoly):
    """Write num as sign * prod (L^i - 1)^m_i, or return None."""
    if len(num) == 1 and abs(num[0]) == 1:
        return num[0], {}

    def search(poly: IntPoly, max_i: int):
        if len(poly) == 1:
            return (poly[0], {}) if abs(poly[0]) == 1 else None
        deg = len(poly) - 1
        for i in range(min(deg, max_i), 0, -1):
            q, exact = _divmod_cyc(poly, i)
            if exact:
                found = search(q, i)
                if found is not None:
                    sign, fac = found
                    fac = dict(fac)
                    fac[i] = fac.get(i, 0) + 1
                    return sign, fac
        return None

    return search(num, len(num))


# closed forms of geometric-type series ---------------------------------------

@lru_cache(maxsize=None)
def eulerian_row(p: int) -> tuple[int, ...]:
    """Eulerian numbers A(p, 0..p-1)."""
    if p == 0:
        return (1,)
    row = [1]
    for n in range(2, p + 1):
        new = [0] * n
        for m in range(n):
            a = row[m] if m < len(row) else 0
            b = row[m - 1] if 0 <= m - 1 < len(row) else 0
            new[m] = (m + 1) * a + (n - m) * b
        row = new
    return tuple(row)


@lru_cache(maxsize=None)
def power_series_sum(p: int, c: int) -> RingAElem:
    """Sum over k >= 0 of k^p L^(c k), as a rational function in A (c != 0).

    Uses sum k^p x^k = x * A_p(x) / (1 - x)^(p+1) with A_p the Eulerian
    polynomial; for c > 0 the value is the formal rational function.
    """
    if p == 0:
        numer = ONE
    else:
        numer = RingAElem.from_laurent(
            {c * (m + 1): a for m, a in enumerate(eulerian_row(p))}
        )
    return numer * RingAElem.geometric(c) ** (p + 1)


# formatting --------------------------------------------------------------------

def _format_monomial(c: int, e: int) -> str:
    if e == 0:
        return str(c)
    power = "L" if e == 1 else f"L^{e}"
    if c == 1:
        return power
    if c == -1:
        return "-" + power
    return f"{c}*{power}"


def format_laurent(coeffs: Mapping[int, int]) -> str:
    items = sorted(((e, c) for e, c in coeffs.items() if c), reverse=True)
    if not items:
        return "0"
    out = _format_monomial(items[0][1], items[0][0])
    for e, c in items[1:]:
        sign = " - " if c < 0 else " + "
        out += sign + _format_monomial(abs(c), e)
    return out


def format_ring(a: RingAElem) -> str:
    """Render with denominators written as (1-L^-i), e.g. ``L^-1/(1-L^-1)^2``."""
    if a.is_zero():
        return "0"
    shift = a.shift - sum(i * m for i, m in a.den)
    numer = {shift + j: c for j, c in enumerate(a.num) if c}
    text = format_laurent(numer)
    if not a.den:
        return text
    if len(numer) > 1:
        text = f"({text})"
    factors = [f"(1-L^-{i})" + (f"^{m}" if m > 1 else "") for i, m in a.den]
    den = factors[0] if len(factors) == 1 else "(" + "*".join(factors) + ")"
    return f"{text}/{den}"
