"""Line-based N-Triples reader/writer and blank label scoping."""

import pytest
from hypothesis import given, strategies as st

from vgstore import (
    BlankNode,
    Dictionary,
    Iri,
    Literal,
    ValidationError,
    format_term,
    format_triple,
    parse_ntriples,
    serialize_ntriples,
)
from vgstore.ntriples import BlankScope, parse_statement
from vgstore.terms import RDF_LANGSTRING, XSD_STRING

XSD_INT = "http://www.w3.org/2001/XMLSchema#integer"

iris = st.from_regex(r"urn:x:[a-z0-9]{1,8}", fullmatch=True).map(Iri)
blanks = st.from_regex(r"[A-Za-z][A-Za-z0-9_]{0,6}", fullmatch=True).map(BlankNode)
lex = st.text(
    st.characters(blacklist_categories=("Cs",)), max_size=12
)  # any scalar text, escaping must cope
literals = st.one_of(
    lex.map(Literal),
    st.tuples(lex, st.from_regex(r"urn:dt:[a-z]{1,5}", fullmatch=True)).map(
        lambda p: Literal(p[0], p[1])
    ),
    st.tuples(lex, st.from_regex(r"[a-z]{2}(-[A-Z]{2})?", fullmatch=True)).map(
        lambda p: Literal(p[0], RDF_LANGSTRING, p[1])
    ),
)
subjects = st.one_of(iris, blanks)
objects = st.one_of(iris, blanks, literals)
term_triples = st.lists(
    st.tuples(subjects, iris, objects), min_size=0, max_size=12, unique=True
)


def test_parse_single_typed_literal_statement():
    d = Dictionary()
    text = f'<http://ex.org/a> <http://ex.org/p> "1"^^<{XSD_INT}> .\n'
    triples = parse_ntriples(text, d)
    assert len(triples) == 1
    obj = d.resolve(triples[0].o)
    assert obj == Literal("1", XSD_INT)


def test_parse_empty_input():
    d = Dictionary()
    assert parse_ntriples("", d) == []
    assert len(d) == 0


def test_comments_and_blank_lines_are_skipped():
    d = Dictionary()
    text = "# a comment\n\n   \n<urn:a> <urn:b> <urn:c> .\n# trailing comment\n"
    assert len(parse_ntriples(text, d)) == 1


def test_error_carries_the_line_number():
    d = Dictionary()
    text = "<urn:a> <urn:b> <urn:c> .\n# fine\nnot a statement\n"
    with pytest.raises(ValidationError, match="line 3"):
        parse_ntriples(text, d)


def test_failed_parse_is_all_or_nothing():
    d = Dictionary()
    d.intern(Iri("urn:pre:existing"))
    before = len(d)
    text = "<urn:a> <urn:b> <urn:c> .\n<urn:a> <urn:b> .\n"
    with pytest.raises(ValidationError, match="line 2"):
        parse_ntriples(text, d)
    assert len(d) == before


def test_escape_decoding():
    s, p, o = parse_statement(
        '<urn:s> <urn:p> "a\\tb\\nc\\"d\\\\e\\u0041\\U0001F600" .'
    )
    assert o == Literal('a\tb\nc"d\\eA\U0001F600')


def test_iri_escapes_decode_too():
    s, _, _ = parse_statement("<urn:x:\\u0041> <urn:p> <urn:o> .")
    assert s == Iri("urn:x:A")


@pytest.mark.parametrize(
    "line",
    [
        '<urn:s> <urn:p> "bad\\x" .',
        '<urn:s> <urn:p> "trunc\\u00" .',
        '<urn:s> <urn:p> "bad\\uZZZZ" .',
        "<urn:s\\> <urn:p> <urn:o> .",
        '<urn:s> <urn:p> "open .',
        "<urn:s> <urn:p> <urn:o .",
        '"lit" <urn:p> <urn:o> .',
        "<urn:s> _:b <urn:o> .",
        '<urn:s> "lit" <urn:o> .',
        "<urn:s> <urn:p> <urn:o>",
        "<urn:s> <urn:p> <urn:o> . extra",
        "<urn:s> <urn:p> <urn:o> . # no mid-line comments",
        '<urn:s> <urn:p> "x"@ .',
        '<urn:s> <urn:p> "1"^^xsd:integer .',
        "<urn:s> <urn:p> _:. .",
        "<> <urn:p> <urn:o> .",
        "<urn:a b> <urn:p> <urn:o> .",
    ],
)
def test_malformed_statements_are_rejected(line):
    with pytest.raises(ValidationError):
        parse_statement(line)


def test_language_tagged_literal():
    _, _, o = parse_statement('<urn:s> <urn:p> "hi"@en-US .')
    assert o == Literal("hi", RDF_LANGSTRING, "en-US")
    assert format_term(o) == '"hi"@en-US'


def test_format_term_forms():
    assert format_term(Iri("urn:a")) == "<urn:a>"
    assert format_term(BlankNode("b1")) == "_:b1"
    assert format_term(Literal("x")) == '"x"'
    assert format_term(Literal("x", XSD_STRING)) == '"x"'
    assert format_term(Literal("1", XSD_INT)) == f'"1"^^<{XSD_INT}>'


def test_control_characters_escape_on_output():
    assert format_term(Literal("a\x01b")) == '"a\\u0001b"'
    assert format_term(Literal("del\x7f")) == '"del\\u007F"'
    assert format_term(Literal('q"\\\n\r\t')) == '"q\\"\\\\\\n\\r\\t"'


def test_format_triple_is_dot_free():
    d = Dictionary()
    triple = d.triple(Iri("urn:s"), Iri("urn:p"), Literal("x"))
    assert format_triple(triple, d) == '<urn:s> <urn:p> "x"'


def test_serialize_empty_set():
    assert serialize_ntriples(set(), Dictionary()) == ""


def test_serialize_sorts_by_term_text_not_id():
    docs = [
        "<urn:b> <urn:p> <urn:o> .\n<urn:a> <urn:p> <urn:o> .\n",
        "<urn:a> <urn:p> <urn:o> .\n<urn:b> <urn:p> <urn:o> .\n",
    ]
    outputs = []
    for doc in docs:
        d = Dictionary()
        outputs.append(serialize_ntriples(set(parse_ntriples(doc, d)), d))
    assert outputs[0] == outputs[1]
    assert outputs[0] == "<urn:a> <urn:p> <urn:o> .\n<urn:b> <urn:p> <urn:o> .\n"


@given(term_triples)
def test_round_trip_preserves_the_graph(items):
    d1 = Dictionary()
    first = {d1.triple(s, p, o) for s, p, o in items}
    text = serialize_ntriples(first, d1)
    d2 = Dictionary()
    reparsed = parse_ntriples(text, d2)
    assert len(reparsed) == len(first)
    original_terms = {
        tuple(d1.resolve(x) for x in (t.s, t.p, t.o)) for t in first
    }
    round_tripped = {
        tuple(d2.resolve(x) for x in (t.s, t.p, t.o)) for t in reparsed
    }
    assert round_tripped == original_terms


@given(term_triples)
def test_serialization_ignores_input_order(items):
    d = Dictionary()
    triples = {d.triple(s, p, o) for s, p, o in items}
    backwards = sorted(triples, key=lambda t: (t.s, t.p, t.o), reverse=True)
    assert serialize_ntriples(triples, d) == serialize_ntriples(backwards, d)


def test_blank_label_survives_into_a_fresh_dictionary():
    d = Dictionary()
    (triple,) = parse_ntriples("_:alice <urn:p> <urn:o> .\n", d)
    assert d.resolve(triple.s) == BlankNode("alice")


def test_same_label_is_one_node_within_a_document():
    d = Dictionary()
    triples = parse_ntriples("_:n <urn:p> <urn:o1> .\n_:n <urn:p> <urn:o2> .\n", d)
    assert triples[0].s == triples[1].s


def test_same_label_is_distinct_across_documents():
    d = Dictionary()
    (first,) = parse_ntriples("_:n <urn:p> <urn:o> .\n", d)
    (second,) = parse_ntriples("_:n <urn:p> <urn:o> .\n", d)
    assert first.s != second.s
    assert d.resolve(first.s) == BlankNode("n")
    assert d.resolve(second.s) != BlankNode("n")


def test_blank_scope_renames_consistently_on_collision():
    d = Dictionary()
    d.intern(BlankNode("b0"))
    scope = BlankScope(d)
    renamed = scope.rename(BlankNode("b0"))
    assert renamed.label != "b0"
    assert scope.rename(BlankNode("b0")) == renamed


def test_blank_scope_never_aliases_two_source_labels():
    d = Dictionary()
    scope = BlankScope(d)
    out = {scope.rename(BlankNode(label)).label for label in ("a", "b", "b0", "b1")}
    assert len(out) == 4
