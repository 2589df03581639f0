"""p-adic specialization: t -> p, residue field F_p, level-N coset enumeration.

This module is the brute-force side of every valued-field check.  It never
looks at the closed forms; it enumerates cosets ``a/p^M + p^N Z_p`` and
evaluates orders, angular components and the additive character directly.

The additive character is ``E(x) = exp(2 pi i {x/p}_p)``: trivial on pZ_p and
restricting on Z_p to ``x -> exp(2 pi i (x mod p)/p)``, which is what the
order-reduction rewrite and the large-ball nullity require.
"""

from __future__ import annotations

import cmath
from fractions import Fraction
from typing import Iterator, Mapping

from .polys import Poly


def vp(x: Fraction | int, p: int) -> int:
    """p-adic valuation of a nonzero rational."""
    x = Fraction(x)
    if x == 0:
        raise ValueError("valuation of 0")
    v = 0
    n, d = x.numerator, x.denominator
    while n % p == 0:
        n //= p
        v += 1
    while d % p == 0:
        d //= p
        v -= 1
    return v


def ac(x: Fraction | int, p: int) -> int:
    """Angular component: the residue of x / p^ord(x), in 1..p-1."""
    x = Fraction(x)
    u = x / Fraction(p) ** vp(x, p)
    return u.numerator * pow(u.denominator, -1, p) % p


def frac_p(x: Fraction | int, p: int) -> Fraction:
    """p-adic fractional part {x}_p in [0, 1) with p-power denominator."""
    x = Fraction(x)
    if x == 0:
        return Fraction(0)
    v = vp(x, p)
    if v >= 0:
        return Fraction(0)
    m = -v
    # x = a / (p^m * d) with d prime to p; reduce a * d^-1 mod p^m
    d = x.denominator
    while d % p == 0:
        d //= p
    a = x.numerator * pow(d, -1, p ** m) % p ** m
    return Fraction(a, p ** m)


def E(x: Fraction | int, p: int) -> complex:
    """Additive character, trivial exactly on pZ_p."""
    return cmath.exp(2j * cmath.pi * float(frac_p(Fraction(x) / p, p)))


def residue_char(r: int, p: int) -> complex:
    return cmath.exp(2j * cmath.pi * (r % p) / p)


def specialize(expr: Poly, env: Mapping[str, Fraction | int], p: int) -> Fraction:
    """Evaluate a valued-field expression with t -> p."""
    full = dict(env)
    full["t"] = p
    return expr.evaluate(full)


def cosets(p: int, N: int, M: int = 0) -> Iterator[Fraction]:
    """Representatives of p^-M Z_p / p^N Z_p, each of measure p^-N."""
    scale = Fraction(1, p ** M)
    for a in range(p ** (M + N)):
        yield a * scale


def coset_ord_ac(z: Fraction, center: Fraction, p: int, N: int):
    """(ord, ac) of z - center for every element of the coset z + p^N Z_p, or None if not constant."""
    d = z - center
    if d == 0 or vp(d, p) >= N:
        return None
    return vp(d, p), ac(d, p)
