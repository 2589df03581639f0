"""Brute-force evaluators shared by the tests; none of them touches the symbolic engine."""

from __future__ import annotations

import cmath
from itertools import product


def brute_count(bound, eqs, neqs, xi, env, p) -> complex:
    """Character sum of psi(xi) over the F_p-points of ``{eqs = 0, neqs != 0}``."""
    total = 0j
    for pt in product(range(p), repeat=len(bound)):
        e = dict(env)
        e.update(zip(bound, pt))
        if any(int(q.evaluate(e)) % p for q in eqs):
            continue
        if any(int(q.evaluate(e)) % p == 0 for q in neqs):
            continue
        total += cmath.exp(2j * cmath.pi * (int(xi.evaluate(e)) % p) / p)
    return total


def psi(k: int, p: int) -> complex:
    return cmath.exp(2j * cmath.pi * (k % p) / p)
