"""The structured query language: base text plus +/- field refinements.

Query strings look like:

    when was korea separated into north and south -(title:"korea") +(contents:"1945") 1950

i.e. free base text, then space-separated refinements, each either
``+(field:"term")``, ``-(field:"term")`` or a bare term (disjunctive).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .corpus import normalize_text

OR_TERM = "or"
OP_TERM = "op"
STOP = "stop"

PLUS = "+"
MINUS = "-"
TITLE = "title"
CONTENTS = "contents"

_OP_RE = re.compile(r'^([+-])\((title|contents):"([^"\s]+)"\)$')


class QueryParseError(ValueError):
    """Parse failure; carries the character offset of the offending unit."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


@dataclass(frozen=True)
class Refinement:
    kind: str
    op: str | None = None
    field: str | None = None
    term: str | None = None

    @staticmethod
    def or_term(term: str) -> "Refinement":
        return Refinement(kind=OR_TERM, term=term)

    @staticmethod
    def op_term(op: str, fld: str, term: str) -> "Refinement":
        if op not in (PLUS, MINUS) or fld not in (TITLE, CONTENTS):
            raise ValueError(f"bad refinement operator/field: {op!r} {fld!r}")
        return Refinement(kind=OP_TERM, op=op, field=fld, term=term)

    @staticmethod
    def stop() -> "Refinement":
        return Refinement(kind=STOP)

    @property
    def is_stop(self) -> bool:
        return self.kind == STOP


def render_refinement(r: Refinement) -> str:
    """Render one refinement in the external syntax; STOP renders empty."""
    if r.kind == STOP:
        return ""
    if r.kind == OR_TERM:
        return r.term
    return f'{r.op}({r.field}:"{r.term}")'


@dataclass(frozen=True)
class StructuredQuery:
    base: str
    refinements: tuple[Refinement, ...] = ()

    def base_tokens(self) -> list[str]:
        return normalize_text(self.base)

    def extended(self, r: Refinement) -> "StructuredQuery":
        return StructuredQuery(base=self.base, refinements=self.refinements + (r,))

    def should_terms(self) -> list[str]:
        """Disjunctive terms in canonical order: base tokens, then OR terms."""
        terms = self.base_tokens()
        terms.extend(r.term for r in self.refinements if r.kind == OR_TERM)
        return terms

    def must_terms(self) -> list[tuple[str, str]]:
        return [(r.field, r.term) for r in self.refinements if r.kind == OP_TERM and r.op == PLUS]

    def must_not_terms(self) -> list[tuple[str, str]]:
        return [(r.field, r.term) for r in self.refinements if r.kind == OP_TERM and r.op == MINUS]


def render_query(sq: StructuredQuery) -> str:
    parts = [sq.base] if sq.base else []
    for r in sq.refinements:
        if r.is_stop:
            break
        parts.append(render_refinement(r))
    return " ".join(parts)


def _normalized_term(raw: str, offset: int) -> str:
    tokens = normalize_text(raw)
    if len(tokens) != 1:
        raise QueryParseError(f"refinement term {raw!r} is not a single token", offset)
    return tokens[0]


def parse_query(s: str) -> StructuredQuery:
    """Parse a query string into base text plus ordered refinements.

    Bare tokens are base text until the first operator refinement appears;
    after that they are OR-term refinements. render(parse(s)) == s for
    single-spaced input with normalized terms.
    """
    base_parts: list[str] = []
    refinements: list[Refinement] = []
    in_refinements = False
    for match in re.finditer(r"\S+", s):
        unit, offset = match.group(0), match.start()
        if unit.startswith(("+(", "-(")):
            op_match = _OP_RE.match(unit)
            if not op_match:
                raise QueryParseError(f"malformed refinement {unit!r}", offset)
            op, fld, raw_term = op_match.groups()
            refinements.append(Refinement.op_term(op, fld, _normalized_term(raw_term, offset)))
            in_refinements = True
        elif in_refinements:
            refinements.append(Refinement.or_term(_normalized_term(unit, offset)))
        else:
            base_parts.append(unit)
    return StructuredQuery(base=" ".join(base_parts), refinements=tuple(refinements))


def parse_refinement(s: str) -> Refinement:
    """Parse a single rendered refinement; the empty string is STOP."""
    stripped = s.strip()
    if not stripped:
        return Refinement.stop()
    if " " in stripped:
        raise QueryParseError("expected a single refinement", 0)
    if stripped.startswith(("+(", "-(")):
        op_match = _OP_RE.match(stripped)
        if not op_match:
            raise QueryParseError(f"malformed refinement {stripped!r}", 0)
        op, fld, raw_term = op_match.groups()
        return Refinement.op_term(op, fld, _normalized_term(raw_term, 0))
    return Refinement.or_term(_normalized_term(stripped, 0))
