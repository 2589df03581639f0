"""Presburger arithmetic over the value-group sort."""

from .formula import (
    FALSE, TOP, TRUE, And, Cell, Cong, Const, Eq, Exists, Forall, Le, Not, Or,
    cells_to_formula, cong, conj, disj, eq, format_formula, free_vars, ge,
    has_quantifier, holds, le, make_cell, make_cong, make_le,
)
from .progressions import Progression, progression_decomposition
from .qe import eliminate_quantifiers, eliminate_var, eliminate_vars, is_satisfiable, qe_cells
from .sets import (
    DefinableFn, DefinableMap, PresburgerSet, enumerate_formula, enumerate_set,
    normalize_set, substitute,
)
from .terms import LinTerm, lin

__all__ = [
    "TOP",
    "FALSE", "TRUE", "And", "Cell", "Cong", "Const", "Eq", "Exists", "Forall", "Le",
    "Not", "Or", "cells_to_formula", "cong", "conj", "disj", "eq", "format_formula",
    "free_vars", "ge", "has_quantifier", "holds", "le", "make_cell", "make_cong",
    "make_le", "Progression", "progression_decomposition", "eliminate_quantifiers",
    "eliminate_var", "eliminate_vars", "is_satisfiable", "qe_cells", "DefinableFn",
    "DefinableMap", "PresburgerSet", "enumerate_formula", "enumerate_set",
    "normalize_set", "substitute", "LinTerm", "lin",
]
