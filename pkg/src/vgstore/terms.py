"""RDF terms, dense term ids, and the interning dictionary.

Terms are immutable value objects: an IRI, a blank node, or a literal with a
datatype IRI and an optional language tag.  Two literals are equal only if
lexical form, datatype, and language tag all match; no value-space
normalization happens here ("01" and "1" are distinct terms even though
compare_values treats them as numerically equal).

A Dictionary interns terms to dense integer ids starting at 0 so triples and
indexes can work on ints.  Interning the same term twice returns the same id,
and ids are never reused.  The dictionary is not thread-safe for writes;
callers must not interleave intern calls from several threads.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

from .errors import NotFoundError, ValidationError

XSD = "http://www.w3.org/2001/XMLSchema#"
XSD_STRING = XSD + "string"
XSD_BOOLEAN = XSD + "boolean"
XSD_INTEGER = XSD + "integer"
XSD_DECIMAL = XSD + "decimal"
XSD_DOUBLE = XSD + "double"
XSD_FLOAT = XSD + "float"
RDF = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
RDF_TYPE = RDF + "type"
RDF_LANGSTRING = RDF + "langString"

NUMERIC_DATATYPES = frozenset({XSD_INTEGER, XSD_DECIMAL, XSD_DOUBLE, XSD_FLOAT})

_BLANK_LABEL_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_LANG_TAG_RE = re.compile(r"[A-Za-z]+(-[A-Za-z0-9]+)*\Z")


@dataclass(frozen=True)
class Iri:
    text: str


@dataclass(frozen=True)
class BlankNode:
    label: str


@dataclass(frozen=True)
class Literal:
    lex: str
    datatype: str = XSD_STRING
    lang: str | None = None

    def __post_init__(self):
        # Constructor sugar only; real validation happens at intern time.
        if self.lang is not None and self.datatype == XSD_STRING:
            object.__setattr__(self, "datatype", RDF_LANGSTRING)


Term = Iri | BlankNode | Literal

TermId = int


@dataclass(frozen=True)
class Triple:
    """A triple of term ids.  Positions are validated where triples are built."""

    s: TermId
    p: TermId
    o: TermId


def _iri_text_ok(text: str) -> bool:
    if not text:
        return False
    return not any(c.isspace() or c in "<>" for c in text)


def validate_term(term: Term) -> None:
    """Raise ValidationError if the term violates its structural invariants."""
    if isinstance(term, Iri):
        if not isinstance(term.text, str) or not _iri_text_ok(term.text):
            raise ValidationError(f"malformed IRI: {term.text!r}")
    elif isinstance(term, BlankNode):
        if not isinstance(term.label, str) or not _BLANK_LABEL_RE.match(term.label):
            raise ValidationError(f"malformed blank node label: {term.label!r}")
    elif isinstance(term, Literal):
        if not isinstance(term.lex, str):
            raise ValidationError("literal lexical form must be a string")
        if not _iri_text_ok(term.datatype):
            raise ValidationError(f"malformed datatype IRI: {term.datatype!r}")
        if term.lang is not None:
            if not _LANG_TAG_RE.match(term.lang):
                raise ValidationError(f"malformed language tag: {term.lang!r}")
            if term.datatype != RDF_LANGSTRING:
                raise ValidationError(
                    "language-tagged literal must have the langString datatype"
                )
        elif term.datatype == RDF_LANGSTRING:
            raise ValidationError("langString literal requires a language tag")
    else:
        raise ValidationError(f"not a term: {term!r}")


class Dictionary:
    """Bidirectional term <-> dense id mapping."""

    def __init__(self):
        self._by_term: dict[Term, TermId] = {}
        self._by_id: list[Term] = []
        self._blank_counter = 0

    def __len__(self) -> int:
        return len(self._by_id)

    def intern(self, term: Term) -> TermId:
        """Return the id for term, assigning the next dense id if new."""
        tid = self._by_term.get(term)
        if tid is not None:
            return tid
        validate_term(term)
        tid = len(self._by_id)
        self._by_term[term] = tid
        self._by_id.append(term)
        return tid

    def lookup(self, term: Term) -> TermId | None:
        """Return the id for term without interning, or None if unknown."""
        return self._by_term.get(term)

    def resolve(self, tid: TermId) -> Term:
        if not isinstance(tid, int) or tid < 0 or tid >= len(self._by_id):
            raise NotFoundError(f"unknown term id: {tid}")
        return self._by_id[tid]

    def fresh_blank_label(self) -> str:
        """A blank label never handed out before and not yet interned."""
        while True:
            label = f"b{self._blank_counter}"
            self._blank_counter += 1
            if BlankNode(label) not in self._by_term:
                return label

    def triple(self, s: Term, p: Term, o: Term) -> Triple:
        """Intern three terms into a Triple, enforcing position kinds."""
        if isinstance(s, Literal):
            raise ValidationError("triple subject must be an IRI or blank node")
        if not isinstance(p, Iri):
            raise ValidationError("triple predicate must be an IRI")
        return Triple(self.intern(s), self.intern(p), self.intern(o))


def _numeric_value(lit: Literal) -> float | None:
    try:
        value = float(lit.lex)
    except (ValueError, OverflowError):
        return None
    if math.isnan(value):
        return None
    return value


def compare_values(a: Literal, b: Literal) -> int | None:
    """Value comparison of two literals: -1, 0, 1, or None if incomparable.

    The four numeric XSD datatypes are promoted to double and compared
    numerically (so "12.5"^^xsd:decimal equals "12.5"^^xsd:double, and "01"
    equals "1").  Literals whose datatypes are equal and non-numeric compare
    lexicographically by code point.  Every other pair, and any numeric
    literal that fails to parse, is incomparable; callers drop the row.
    """
    if not isinstance(a, Literal) or not isinstance(b, Literal):
        raise TypeError("compare_values expects two Literals")
    if a.datatype in NUMERIC_DATATYPES and b.datatype in NUMERIC_DATATYPES:
        va = _numeric_value(a)
        vb = _numeric_value(b)
        if va is None or vb is None:
            return None
        return (va > vb) - (va < vb)
    if a.datatype == b.datatype:
        return (a.lex > b.lex) - (a.lex < b.lex)
    return None
