"""Three-valued outcome of an equality check."""

from __future__ import annotations

from dataclasses import dataclass, field

SYMBOLIC = "symbolic-equal"
SPECIALIZATION = "specialization-equal"
UNEQUAL = "unequal"


@dataclass
class Verdict:
    kind: str
    witness: dict | None = None
    checks: int = 0
    max_delta: float = 0.0
    notes: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.kind != UNEQUAL

    def __bool__(self) -> bool:
        return self.ok

    def to_json(self) -> dict:
        out = {"verdict": self.kind, "checks": self.checks, "max_delta": self.max_delta}
        if self.witness is not None:
            out["witness"] = self.witness
        if self.notes:
            out["notes"] = list(self.notes)
        return out


def combine(*verdicts: Verdict) -> Verdict:
    """Weakest of several verdicts; the first unequal one wins."""
    for v in verdicts:
        if v.kind == UNEQUAL:
            return v
    kind = SYMBOLIC if all(v.kind == SYMBOLIC for v in verdicts) else SPECIALIZATION
    return Verdict(kind, None, sum(v.checks for v in verdicts),
                   max((v.max_delta for v in verdicts), default=0.0),
                   [n for v in verdicts for n in v.notes])
