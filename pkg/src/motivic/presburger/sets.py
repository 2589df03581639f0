"""Semilinear sets as disjoint unions of cells, and piecewise-affine maps."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterable, Mapping, Sequence

from ..errors import ArityMismatch, PointOutsideDomain
from .formula import (
    TOP, Cell, cell_and, cell_substitute, cells_to_formula, conj, disj, free_vars, holds, make_cell,
    make_le, negate_atom, substitute_formula,
)
from .qe import eliminate_vars, is_satisfiable, qe_cells
from .terms import LinTerm


def cell_difference(a: Cell, b: Cell) -> list[Cell]:
    """Disjoint satisfiable cells covering ``a`` minus ``b``."""
    if cell_and(a, b) is None or not is_satisfiable(cell_and(a, b)):
        return [a]
    out = []
    prefix = list(a.atoms)
    for atom in b.atoms:
        if atom in a.atoms:
            continue
        for na in negate_atom(atom):
            c = make_cell(prefix + [na])
            if c is not None and is_satisfiable(c):
                out.append(c)
        prefix.append(atom)
    return out


def cell_subset(a: Cell, b: Cell) -> bool:
    return not cell_difference(a, b) if a != b else True


def simplify_cells(cells: Iterable[Cell]) -> list[Cell]:
    """Drop empty cells and cells contained in another; merge complementary pairs."""
    cells = [c for c in dict.fromkeys(cells) if is_satisfiable(c)]
    changed = True
    while changed:
        changed = False
        for i, c in enumerate(cells):
            if any(j != i and cell_subset(c, d) for j, d in enumerate(cells)):
                del cells[i]
                changed = True
                break
        if changed:
            continue
        merged = _merge_pair(cells)
        if merged is not None:
            cells = merged
            changed = True
    return cells


def _merge_pair(cells: list[Cell]) -> list[Cell] | None:
    # {C and a} + {C and not a} -> C, when "not a" is a single atom
    for i, c in enumerate(cells):
        for j in range(i + 1, len(cells)):
            d = cells[j]
            sa, sb = set(c.atoms), set(d.atoms)
            da, db = sa - sb, sb - sa
            if len(da) == 1 and len(db) == 1:
                (x,), (y,) = da, db
                if negate_atom(x) == [y]:
                    common = make_cell(sa & sb)
                    rest = [e for k, e in enumerate(cells) if k not in (i, j)]
                    return rest + [common]
    return None


def disjointify(cells: Iterable[Cell]) -> list[Cell]:
    out: list[Cell] = []
    for c in cells:
        pending = [c]
        for d in out:
            nxt = []
            for p in pending:
                nxt.extend(cell_difference(p, d))
            pending = nxt
            if not pending:
                break
        out.extend(pending)
    return out


class PresburgerSet:
    """Subset of Z^r given as a disjoint union of satisfiable cells."""

    __slots__ = ("vars", "pieces")

    def __init__(self, vars: Sequence[str], pieces: Iterable[Cell], *, disjoint: bool = False):
        self.vars = tuple(vars)
        pieces = list(pieces)
        extra = set().union(*(p.variables() for p in pieces)) - set(self.vars) if pieces else set()
        if extra:
            raise ArityMismatch(f"cells mention variables {sorted(extra)} outside {self.vars}")
        if not disjoint:
            pieces = disjointify(simplify_cells(pieces))
        self.pieces = tuple(pieces)

    @classmethod
    def universe(cls, vars: Sequence[str]) -> "PresburgerSet":
        return cls(vars, [TOP], disjoint=True)

    @classmethod
    def empty(cls, vars: Sequence[str]) -> "PresburgerSet":
        return cls(vars, [], disjoint=True)

    @classmethod
    def from_formula(cls, f, vars: Sequence[str]) -> "PresburgerSet":
        return normalize_set(f, vars)

    @property
    def arity(self) -> int:
        return len(self.vars)

    def is_empty(self) -> bool:
        return not self.pieces

    def contains(self, point) -> bool:
        env = self._env(point)
        return any(c.holds(env) for c in self.pieces)

    def _env(self, point) -> dict[str, int]:
        if isinstance(point, Mapping):
            return dict(point)
        point = tuple(point)
        if len(point) != len(self.vars):
            raise ArityMismatch(f"point {point} has arity {len(point)}, expected {len(self.vars)}")
        return dict(zip(self.vars, point))

    def to_formula(self):
        return cells_to_formula(self.pieces)

    def intersect(self, other: "PresburgerSet") -> "PresburgerSet":
        self._check(other)
        out = []
        for a, b in product(self.pieces, other.pieces):
            c = cell_and(a, b)
            if c is not None and is_satisfiable(c):
                out.append(c)
        return PresburgerSet(self.vars, out, disjoint=True)

    def union(self, other: "PresburgerSet") -> "PresburgerSet":
        self._check(other)
        return PresburgerSet(self.vars, self.pieces + other.pieces)

    def difference(self, other: "PresburgerSet") -> "PresburgerSet":
        self._check(other)
        pieces = list(self.pieces)
        for d in other.pieces:
            pieces = [q for p in pieces for q in cell_difference(p, d)]
        return PresburgerSet(self.vars, pieces, disjoint=True)

    def complement(self) -> "PresburgerSet":
        return PresburgerSet.universe(self.vars).difference(self)

    def is_subset(self, other: "PresburgerSet") -> bool:
        return self.difference(other).is_empty()

    def equals(self, other: "PresburgerSet") -> bool:
        return self.is_subset(other) and other.is_subset(self)

    def project(self, keep: Sequence[str]) -> "PresburgerSet":
        drop = [v for v in self.vars if v not in keep]
        return PresburgerSet(keep, eliminate_vars(list(self.pieces), drop))

    def substitute(self, mapping: Mapping[str, LinTerm], new_vars: Sequence[str]) -> "PresburgerSet":
        out = []
        for p in self.pieces:
            c = cell_substitute(p, mapping)
            if c is not None and is_satisfiable(c):
                out.append(c)
        return PresburgerSet(new_vars, out)

    def rename(self, mapping: Mapping[str, str]) -> "PresburgerSet":
        terms = {v: LinTerm.var(mapping.get(v, v)) for v in self.vars}
        return PresburgerSet([mapping.get(v, v) for v in self.vars],
                             [cell_substitute(p, terms) for p in self.pieces], disjoint=True)

    def extend(self, vars: Sequence[str]) -> "PresburgerSet":
        """Same set viewed inside a larger ambient (cylinder over new variables)."""
        return PresburgerSet(vars, self.pieces, disjoint=True)

    def enumerate(self, box) -> list[tuple[int, ...]]:
        return enumerate_set(self, box)

    def _check(self, other):
        if self.vars != other.vars:
            raise ArityMismatch(f"ambient mismatch {self.vars} vs {other.vars}")

    def __str__(self):
        if not self.pieces:
            return "false"
        return " or ".join(f"({p})" if len(self.pieces) > 1 else str(p) for p in self.pieces)

    def __repr__(self):
        return f"PresburgerSet({', '.join(self.vars)} | {self})"


def normalize_set(f, vars: Sequence[str]) -> PresburgerSet:
    """Disjoint cell normal form of a formula whose free variables lie in ``vars``."""
    extra = free_vars(f) - set(vars)
    if extra:
        raise ArityMismatch(f"free variables {sorted(extra)} not among {tuple(vars)}")
    return PresburgerSet(vars, qe_cells(f))


def _box_ranges(box, arity: int) -> list[range]:
    if isinstance(box, int):
        return [range(-box, box + 1)] * arity
    box = list(box)
    if len(box) != arity:
        raise ArityMismatch(f"box of arity {len(box)} for a set of arity {arity}")
    return [range(lo, hi + 1) for lo, hi in box]


def enumerate_set(s: PresburgerSet, box) -> list[tuple[int, ...]]:
    """Members of ``s`` in the box (an int radius or a list of inclusive intervals)."""
    ranges = _box_ranges(box, s.arity)
    out = []
    for pt in product(*ranges):
        env = dict(zip(s.vars, pt))
        hits = sum(1 for c in s.pieces if c.holds(env))
        if hits:
            out.append(pt)
    return out


def enumerate_formula(f, vars: Sequence[str], box, qbox: int = 40) -> list[tuple[int, ...]]:
    """Brute-force oracle: evaluate the formula directly, quantifiers over ``[-qbox, qbox]``."""
    return [pt for pt in product(*_box_ranges(box, len(vars)))
            if holds(f, dict(zip(vars, pt)), qbox)]


# --- definable functions and maps ----------------------------------------------

@dataclass(frozen=True)
class DefinableFn:
    """Piecewise-affine Z-valued function: disjoint (cell, affine value) pieces."""

    vars: tuple
    pieces: tuple  # of (Cell, LinTerm)

    @classmethod
    def affine(cls, vars: Sequence[str], value: LinTerm, domain: PresburgerSet | None = None):
        cells = domain.pieces if domain is not None else (TOP,)
        return cls(tuple(vars), tuple((c, value) for c in cells))

    @property
    def domain(self) -> PresburgerSet:
        return PresburgerSet(self.vars, [c for c, _ in self.pieces], disjoint=True)

    def __call__(self, point) -> int:
        env = point if isinstance(point, Mapping) else dict(zip(self.vars, point))
        for c, t in self.pieces:
            if c.holds(env):
                v = t.evaluate(env)
                if v.denominator != 1:
                    raise ValueError(f"value {v} at {env} is not an integer")
                return int(v)
        raise PointOutsideDomain(f"{env} outside the domain")

    def pullback(self, m: "DefinableMap") -> "DefinableFn":
        pieces = []
        for mc, mt in m.pieces:
            for c, t in self.pieces:
                sub = cell_substitute(c, mt)
                if sub is None:
                    continue
                both = cell_and(mc, sub)
                if both is not None and is_satisfiable(both):
                    pieces.append((both, t.subs(mt)))
        return DefinableFn(m.source, tuple(pieces))


@dataclass(frozen=True)
class DefinableMap:
    """Piecewise-affine map Z^source -> Z^target.

    ``pieces`` pairs a cell over the source with a dict target var -> LinTerm.
    """

    source: tuple
    target: tuple
    pieces: tuple

    @classmethod
    def affine(cls, source: Sequence[str], target: Sequence[str], values: Mapping[str, LinTerm]):
        missing = set(target) - set(values)
        if missing:
            raise ArityMismatch(f"no value for target variables {sorted(missing)}")
        return cls(tuple(source), tuple(target),
                   ((TOP, {k: LinTerm.coerce(values[k]) for k in target}),))

    @classmethod
    def identity(cls, vars: Sequence[str]) -> "DefinableMap":
        return cls.affine(vars, vars, {v: LinTerm.var(v) for v in vars})

    def __post_init__(self):
        for cell, vals in self.pieces:
            if set(vals) != set(self.target):
                raise ArityMismatch(f"map piece defines {sorted(vals)}, expected {list(self.target)}")
            used = set(cell.variables()).union(*(t.variables() for t in vals.values()))
            if used - set(self.source):
                raise ArityMismatch(f"map uses {sorted(used - set(self.source))} outside source {self.source}")

    def domain(self) -> PresburgerSet:
        return PresburgerSet(self.source, [c for c, _ in self.pieces], disjoint=True)

    def __call__(self, point) -> tuple[int, ...]:
        env = point if isinstance(point, Mapping) else dict(zip(self.source, point))
        for c, vals in self.pieces:
            if c.holds(env):
                out = []
                for k in self.target:
                    v = vals[k].evaluate(env)
                    if v.denominator != 1:
                        raise ValueError(f"map value {v} is not an integer")
                    out.append(int(v))
                return tuple(out)
        raise PointOutsideDomain(f"{env} outside the map's domain")

    def pull_cells(self, cell: Cell) -> list[Cell]:
        """Cells over the source whose union is the preimage of ``cell``."""
        out = []
        for mc, vals in self.pieces:
            sub = cell_substitute(cell, vals)
            if sub is None:
                continue
            both = cell_and(mc, sub)
            if both is not None and is_satisfiable(both):
                out.append(both)
        return out

    def preimage(self, s: PresburgerSet) -> PresburgerSet:
        if tuple(s.vars) != self.target:
            raise ArityMismatch(f"set over {s.vars}, map target {self.target}")
        return PresburgerSet(self.source, [c for p in s.pieces for c in self.pull_cells(p)], disjoint=True)

    def image(self) -> PresburgerSet:
        """Image, via elimination of the source variables from the graph."""
        ren = {v: f"{v}__src" for v in self.source}
        cells = []
        for mc, vals in self.pieces:
            atoms = list(cell_substitute(mc, {v: LinTerm.var(r) for v, r in ren.items()}).atoms)
            for k in self.target:
                t = vals[k].rename(ren) - LinTerm.var(k)
                atoms += [make_le(t), make_le(-t)]
            c = make_cell(atoms)
            if c is not None:
                cells.append(c)
        return PresburgerSet(self.target, eliminate_vars(cells, list(ren.values())))

    def compose(self, other: "DefinableMap") -> "DefinableMap":
        """``self`` after ``other`` (other: A -> B, self: B -> C)."""
        if other.target != self.source:
            raise ArityMismatch("maps are not composable")
        pieces = []
        for oc, ov in other.pieces:
            for sc, sv in self.pieces:
                sub = cell_substitute(sc, ov)
                if sub is None:
                    continue
                both = cell_and(oc, sub)
                if both is not None and is_satisfiable(both):
                    pieces.append((both, {k: t.subs(ov) for k, t in sv.items()}))
        return DefinableMap(other.source, self.target, tuple(pieces))

    def product(self, other: "DefinableMap") -> "DefinableMap":
        pieces = []
        for (a, av), (b, bv) in product(self.pieces, other.pieces):
            c = cell_and(a, b)
            if c is not None:
                pieces.append((c, {**av, **bv}))
        return DefinableMap(self.source + other.source, self.target + other.target, tuple(pieces))


def substitute(g, into):
    """Compose a definable map (or affine substitution dict) into a formula, set or function.

    ``g`` may be a :class:`DefinableMap` or a plain dict var -> LinTerm.
    """
    if isinstance(g, Mapping):
        mapping = {k: LinTerm.coerce(v) for k, v in g.items()}
        if isinstance(into, PresburgerSet):
            return into.substitute(mapping, into.vars)
        if isinstance(into, DefinableFn):
            pieces = []
            for c, t in into.pieces:
                sub = cell_substitute(c, mapping)
                if sub is not None and is_satisfiable(sub):
                    pieces.append((sub, t.subs(mapping)))
            return DefinableFn(into.vars, tuple(pieces))
        if isinstance(into, LinTerm):
            return into.subs(mapping)
        return substitute_formula(into, mapping)
    if isinstance(g, DefinableMap):
        if isinstance(into, PresburgerSet):
            return g.preimage(into)
        if isinstance(into, DefinableFn):
            if tuple(into.vars) != g.target:
                raise ArityMismatch(f"function over {into.vars}, map target {g.target}")
            return into.pullback(g)
        if isinstance(into, LinTerm):
            return DefinableFn(g.source, tuple((c, into.subs(v)) for c, v in g.pieces))
        fv = free_vars(into)
        if not fv <= set(g.target):
            raise ArityMismatch(f"formula variables {sorted(fv)} outside map target {g.target}")
        parts = [conj(c.to_formula(), substitute_formula(into, v)) for c, v in g.pieces]
        return disj(*parts)
    raise TypeError(f"cannot substitute with {g!r}")
