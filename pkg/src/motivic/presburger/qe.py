"""Cooper-style quantifier elimination on cells, and the decision procedure built on it."""

from __future__ import annotations

from functools import lru_cache
from math import lcm

from .formula import (
    FALSE, And, Atom, Cell, Cong, Const, Eq, Exists, Forall, Le, Not, Or,
    cells_to_formula, dnf_cells, make_cell, make_cong, make_le,
)
from .terms import LinTerm


def eliminate_var(cell: Cell, x: str) -> list[Cell]:
    """Cells over the remaining variables whose union is ``exists x. cell``."""
    rest: list[Atom] = []
    with_x: list[Atom] = []
    for a in cell.atoms:
        (with_x if a.coeff(x) else rest).append(a)
    if not with_x:
        return [cell]

    scale = lcm(*(abs(a.coeff(x)) for a in with_x))
    # after scaling, x' = scale*x has coefficient +-1 everywhere
    lowers: list[LinTerm] = []   # x' >= t
    uppers: list[LinTerm] = []   # x' <= t
    congs: list[tuple[LinTerm, int]] = []  # x' + t = 0 mod n
    if scale > 1:
        congs.append((LinTerm.constant(0), scale))
    for a in with_x:
        c = a.coeff(x)
        m = scale // abs(c)
        t = a.term.without(x) * m
        if a.kind == "le":
            if c > 0:
                uppers.append(-t)
            else:
                lowers.append(t)
        else:
            if c < 0:
                t = -t
            congs.append((t, a.modulus * m))
    delta = lcm(1, *(n for _, n in congs))

    def instantiate(value: LinTerm, drop_lower=False, drop_upper=False) -> Cell | None:
        atoms: list = list(rest)
        if not drop_lower:
            atoms.extend(make_le(t - value) for t in lowers)
        if not drop_upper:
            atoms.extend(make_le(value - t) for t in uppers)
        atoms.extend(make_cong(value + t, n) for t, n in congs)
        return make_cell(atoms)

    out: list[Cell] = []
    if not lowers and not uppers:
        cands = [instantiate(LinTerm.constant(j)) for j in range(delta)]
    elif not lowers:
        cands = [instantiate(LinTerm.constant(j), drop_upper=True) for j in range(delta)]
    elif not uppers:
        cands = [instantiate(LinTerm.constant(j), drop_lower=True) for j in range(delta)]
    elif len(lowers) <= len(uppers):
        cands = [instantiate(b + j) for b in lowers for j in range(delta)]
    else:
        cands = [instantiate(u - j) for u in uppers for j in range(delta)]
    seen = set()
    for c in cands:
        if c is not None and c not in seen:
            seen.add(c)
            out.append(c)
    return out


def eliminate_vars(cells: list[Cell], xs) -> list[Cell]:
    for x in xs:
        nxt: list[Cell] = []
        seen = set()
        for c in cells:
            for d in eliminate_var(c, x):
                if d not in seen and is_satisfiable(d):
                    seen.add(d)
                    nxt.append(d)
        cells = nxt
    return cells


def _pick_var(cell: Cell) -> str:
    counts: dict[str, int] = {}
    for a in cell.atoms:
        for v, _ in a.coeffs:
            counts[v] = counts.get(v, 0) + (1 if a.kind == "le" else 2)
    return min(sorted(counts), key=lambda v: counts[v])


@lru_cache(maxsize=200_000)
def is_satisfiable(cell: Cell) -> bool:
    """Decide whether the conjunction has an integer solution."""
    if not cell.atoms:
        return True
    if not cell.variables():
        return all(a.holds({}) for a in cell.atoms)
    x = _pick_var(cell)
    return any(is_satisfiable(d) for d in eliminate_var(cell, x))


def qe_cells(f) -> list[Cell]:
    """Quantifier-free DNF (list of cells) equivalent to ``f``."""
    if isinstance(f, Exists):
        return eliminate_vars(qe_cells(f.body), [f.var])
    if isinstance(f, Forall):
        inner = cells_to_formula(qe_cells(f.body))
        return qe_cells(Not(Exists(f.var, Not(inner))))
    if isinstance(f, Not):
        return dnf_cells(Not(cells_to_formula(qe_cells(f.arg))))
    if isinstance(f, And):
        inner = And(tuple(cells_to_formula(qe_cells(a)) for a in f.args))
        return [c for c in dnf_cells(inner) if is_satisfiable(c)]
    if isinstance(f, Or):
        out: list[Cell] = []
        for a in f.args:
            out.extend(qe_cells(a))
        return list(dict.fromkeys(out))
    if isinstance(f, (Le, Eq, Cong, Const)):
        return [c for c in dnf_cells(f) if is_satisfiable(c)]
    raise TypeError(f"not a formula: {f!r}")


def eliminate_quantifiers(f):
    """Equivalent quantifier-free formula."""
    from .sets import simplify_cells

    cells = simplify_cells(qe_cells(f))
    if not cells:
        return FALSE
    return cells_to_formula(cells)
