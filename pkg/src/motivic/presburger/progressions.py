"""Fibers of a cell along its last variable, as arithmetic progressions.

Over each piece of the parameter space a fiber is ``{start + step*k}`` with
``k`` running over ``0..count`` (``count`` affine in the parameters) or over
all ``k >= 0``.  Floors and ceilings of affine bounds are made affine by
splitting the parameter space into residue classes.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd
from typing import Sequence

from .formula import Atom, Cell, make_cell, make_cong, make_le
from .qe import is_satisfiable
from .sets import PresburgerSet
from .terms import LinTerm


@dataclass(frozen=True)
class Progression:
    params: Cell          # piece of the parameter space
    start: LinTerm        # first element, affine in the parameters
    step: int             # nonzero; negative for downward progressions
    count: LinTerm | None  # last index K (>= 0 on params), None if unbounded

    def elements(self, env, limit: int = 10_000) -> list[int]:
        s = self.start.evaluate(env)
        if self.count is None:
            n = limit
        else:
            n = int(self.count.evaluate(env)) + 1
        return [int(s + self.step * k) for k in range(n)]

    def __str__(self):
        rng = "k >= 0" if self.count is None else f"0 <= k <= {self.count}"
        return f"[{self.params}] start {self.start}, step {self.step}, {rng}"


def _crt(r1: int, m1: int, r2: int, m2: int) -> tuple[int, int] | None:
    g = gcd(m1, m2)
    if (r2 - r1) % g:
        return None
    l = m1 // g * m2
    k = ((r2 - r1) // g * pow(m1 // g, -1, m2 // g)) % (m2 // g) if m2 // g > 1 else 0
    return (r1 + m1 * k) % l, l


def _add(cell: Cell, atoms) -> Cell | None:
    c = make_cell(list(cell.atoms) + list(atoms))
    if c is None or not is_satisfiable(c):
        return None
    return c


def _residue_split(cell: Cell, term: LinTerm, m: int):
    """Yield (subcell, r) with term = r mod m on subcell."""
    if m == 1:
        yield cell, 0
        return
    for r in range(m):
        c = _add(cell, [make_cong(term - r, m)])
        if c is not None:
            yield c, r


def _argmax_regions(cell: Cell, terms: list[LinTerm], maximize: bool):
    """Yield (subcell, term) where term is the max (or min) of ``terms``."""
    if len(terms) == 1:
        yield cell, terms[0]
        return
    for i, ti in enumerate(terms):
        atoms = []
        for j, tj in enumerate(terms):
            if i == j:
                continue
            diff = (tj - ti) if maximize else (ti - tj)
            # strict before i, weak after: a partition of the parameter space
            atoms.append(make_le(diff + 1) if j < i else make_le(diff))
        c = _add(cell, atoms)
        if c is not None:
            yield c, ti


def progression_decomposition(s: PresburgerSet | Cell, x: str, params: Sequence[str] | None = None) -> list[Progression]:
    """Progressions partitioning every fiber of ``s`` along ``x``."""
    cells = s.pieces if isinstance(s, PresburgerSet) else (s,)
    out: list[Progression] = []
    for c in cells:
        out.extend(_cell_progressions(c, x))
    return out


def _cell_progressions(cell: Cell, x: str) -> list[Progression]:
    base: list[Atom] = []
    xatoms: list[Atom] = []
    for a in cell.atoms:
        (xatoms if a.coeff(x) else base).append(a)
    ycell = make_cell(base)
    if ycell is None or not is_satisfiable(ycell):
        return []

    # residue data needed for each x-atom
    splits = []
    for a in xatoms:
        coef = a.coeff(x)
        t = a.term.without(x)
        m = abs(coef) if a.kind == "le" else a.modulus
        splits.append((a, coef, t, m))

    results: list[Progression] = []

    def combos(i: int, cell: Cell, residues: list[int]):
        if i == len(splits):
            yield cell, residues
            return
        _, _, t, m = splits[i]
        for sub, r in _residue_split(cell, t, m):
            yield from combos(i + 1, sub, residues + [r])

    for cell_r, residues in combos(0, ycell, []):
        lowers, uppers = [], []
        x0, D = 0, 1
        ok = True
        for (a, coef, t, m), r in zip(splits, residues):
            if a.kind == "le":
                if coef < 0:
                    k = -coef
                    lowers.append((t + ((-r) % k)) / k)
                else:
                    uppers.append((-t - ((-r) % coef)) / coef)
            else:
                n = a.modulus
                cm = coef % n
                g = gcd(cm, n)
                if (-r) % g:
                    ok = False
                    break
                n2 = n // g
                if n2 == 1:
                    continue
                sol = ((-r) // g * pow(cm // g, -1, n2)) % n2
                merged = _crt(x0, D, sol, n2)
                if merged is None:
                    ok = False
                    break
                x0, D = merged
        if not ok:
            continue
        results.extend(_bounded_pieces(cell_r, lowers, uppers, x0, D))
    return results


def _bounded_pieces(cell: Cell, lowers, uppers, x0: int, D: int) -> list[Progression]:
    out = []
    if not lowers and not uppers:
        out.append(Progression(cell, LinTerm.constant(x0), D, None))
        out.append(Progression(cell, LinTerm.constant(x0 - D), -D, None))
        return out
    if lowers and not uppers:
        for c1, L in _argmax_regions(cell, lowers, True):
            for c2, s in _residue_split(c1, L, D):
                out.append(Progression(c2, L + ((x0 - s) % D), D, None))
        return out
    if uppers and not lowers:
        for c1, U in _argmax_regions(cell, uppers, False):
            for c2, s in _residue_split(c1, U, D):
                out.append(Progression(c2, U - ((s - x0) % D), -D, None))
        return out
    for c1, L in _argmax_regions(cell, lowers, True):
        for c2, U in _argmax_regions(c1, uppers, False):
            for c3, s in _residue_split(c2, L, D):
                start = L + ((x0 - s) % D)
                c4 = _add(c3, [make_le(start - U)])
                if c4 is None:
                    continue
                gap = U - start
                for c5, rho in _residue_split(c4, gap, D):
                    out.append(Progression(c5, start, D, (gap - rho) / D))
    return out
