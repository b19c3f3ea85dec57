"""Query evaluation: version-set propagation and the checkout baseline.

eval_annotated answers a query for every version in one pass: each partial
solution carries, per version variable, the set of versions it still holds
in.  Joining two patterns intersects those sets; an empty intersection kills
the row.  Only at the end is a row conceptually expanded, binding the version
variable to each member, so DISTINCT, aggregation, and projection see plain
rows.

eval_checkout is the baseline with identical semantics by construction: it
materializes every candidate version, evaluates the query with the version
variables fixed, and unions the row multisets.  Agreement between the two is
the core correctness check of the whole package; divergence is a bug.

Both produce a SolutionTable whose rows are sorted by the tuple of term
serializations, so equal results are byte-equal after formatting.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Callable, Iterable, Iterator

from .dag import VersionDag, parse_version_iri, version_iri
from .ntriples import format_term
from .sparql import (
    Aggregate,
    And,
    Comparison,
    GraphBlock,
    IsHead,
    Not,
    Or,
    Query,
    TriplePattern,
    Var,
)
from .store import AnnotatedStore
from .versionsets import set_class
from .terms import (
    XSD_INTEGER,
    Dictionary,
    Iri,
    Literal,
    Term,
    TermId,
    Triple,
    compare_values,
)

Expr = Comparison | And | Or | Not | IsHead

_DOMAINS = ("all", "heads")


@dataclass
class SolutionTable:
    header: tuple[str, ...]
    rows: list[tuple[Term, ...]]


def _check_domain(version_domain: str) -> None:
    if version_domain not in _DOMAINS:
        raise ValueError(f"version_domain must be one of {_DOMAINS}")


# --- shared pieces -------------------------------------------------------


def _unify(
    pattern: TriplePattern, triple: Triple, env: dict[str, TermId]
) -> dict[str, TermId] | None:
    """New bindings a matched triple contributes, or None on a repeated-var clash."""
    bind: dict[str, TermId] = {}
    for slot, value in ((pattern.s, triple.s), (pattern.p, triple.p), (pattern.o, triple.o)):
        if isinstance(slot, Var) and slot.name not in env:
            prev = bind.get(slot.name)
            if prev is None:
                bind[slot.name] = value
            elif prev != value:
                return None
    return bind


def _constant_ids(
    pattern: TriplePattern, dictionary: Dictionary
) -> dict[str, TermId] | None:
    """Ids of the pattern's constant slots; None if any term is unknown."""
    out: dict[str, TermId] = {}
    for key, slot in (("s", pattern.s), ("p", pattern.p), ("o", pattern.o)):
        if not isinstance(slot, Var):
            tid = dictionary.lookup(slot)
            if tid is None:
                return None
            out[key] = tid
    return out


def _slot_id(slot, key: str, env: dict[str, TermId], const_ids: dict[str, TermId]):
    if isinstance(slot, Var):
        return env.get(slot.name)
    return const_ids[key]


def _eval_expr(
    expr: Expr,
    lookup: Callable[[str], Term | None],
    ishead: Callable[[str], bool],
) -> bool | None:
    """Three-valued filter logic; None means error, which drops the row."""
    if isinstance(expr, Comparison):
        a = expr.lhs if isinstance(expr.lhs, Literal) else lookup(expr.lhs.name)
        b = expr.rhs if isinstance(expr.rhs, Literal) else lookup(expr.rhs.name)
        if not isinstance(a, Literal) or not isinstance(b, Literal):
            return None
        c = compare_values(a, b)
        if c is None:
            return None
        if expr.op == "<":
            return c < 0
        if expr.op == "<=":
            return c <= 0
        if expr.op == "=":
            return c == 0
        if expr.op == "!=":
            return c != 0
        if expr.op == ">=":
            return c >= 0
        return c > 0
    if isinstance(expr, And):
        left = _eval_expr(expr.lhs, lookup, ishead)
        right = _eval_expr(expr.rhs, lookup, ishead)
        if left is False or right is False:
            return False
        if left is None or right is None:
            return None
        return True
    if isinstance(expr, Or):
        left = _eval_expr(expr.lhs, lookup, ishead)
        right = _eval_expr(expr.rhs, lookup, ishead)
        if left is True or right is True:
            return True
        if left is None or right is None:
            return None
        return False
    if isinstance(expr, Not):
        inner = _eval_expr(expr.operand, lookup, ishead)
        return None if inner is None else not inner
    return ishead(expr.var.name)


def _ishead_vars(expr: Expr) -> set[str]:
    if isinstance(expr, IsHead):
        return {expr.var.name}
    if isinstance(expr, (And, Or)):
        return _ishead_vars(expr.lhs) | _ishead_vars(expr.rhs)
    if isinstance(expr, Not):
        return _ishead_vars(expr.operand)
    return set()


def _extremum(values: Iterable[Term], want_max: bool) -> Term | None:
    """MIN/MAX over distinct values; None if any pair is incomparable.

    The all-pairs check makes the outcome independent of iteration order, so
    both evaluators agree on which groups are dropped.  Value ties are broken
    by the smallest term serialization.
    """
    vals = list(values)
    if not vals or any(not isinstance(v, Literal) for v in vals):
        return None
    for i in range(len(vals)):
        for j in range(i + 1, len(vals)):
            if compare_values(vals[i], vals[j]) is None:
                return None
    best = vals[0]
    for v in vals[1:]:
        c = compare_values(v, best)
        if (c > 0) if want_max else (c < 0):
            best = v
    ties = [v for v in vals if compare_values(v, best) == 0]
    return min(ties, key=format_term)


def _finish(rows: Iterator[dict[str, Term]], query: Query) -> SolutionTable:
    """Aggregate, project, dedupe, and sort expanded rows."""
    select = query.select
    header = tuple(
        item.name if isinstance(item, Var) else item.alias.name
        for item in select.items
    )
    aggs = [item for item in select.items if isinstance(item, Aggregate)]
    if aggs:
        group_names = [v.name for v in select.group_by]
        groups: dict[tuple[Term, ...], list] = {}
        for row in rows:
            key = tuple(row[name] for name in group_names)
            acc = groups.get(key)
            if acc is None:
                acc = [0 if a.func == "COUNT" else set() for a in aggs]
                groups[key] = acc
            for i, agg in enumerate(aggs):
                if agg.func == "COUNT":
                    acc[i] += 1
                else:
                    acc[i].add(row[agg.arg.name])
        if not groups and not group_names and all(a.func == "COUNT" for a in aggs):
            groups[()] = [0 for _ in aggs]
        out: list[tuple[Term, ...]] = []
        for key, acc in groups.items():
            by_name = dict(zip(group_names, key))
            cells: list[Term] = []
            dead = False
            agg_index = 0
            for item in select.items:
                if isinstance(item, Var):
                    cells.append(by_name[item.name])
                    continue
                value = acc[agg_index]
                agg_index += 1
                if item.func == "COUNT":
                    cells.append(Literal(str(value), XSD_INTEGER))
                else:
                    extremum = _extremum(value, want_max=item.func == "MAX")
                    if extremum is None:
                        dead = True
                        break
                    cells.append(extremum)
            if not dead:
                out.append(tuple(cells))
    else:
        names = [item.name for item in select.items if isinstance(item, Var)]
        out = [tuple(row[name] for name in names) for row in rows]
    if select.distinct:
        out = list(dict.fromkeys(out))
    out.sort(key=lambda row: tuple(format_term(cell) for cell in row))
    return SolutionTable(header, out)


# --- annotated evaluation ------------------------------------------------

_AnnRow = tuple[dict[str, TermId], dict[str, object]]


def _restrict(vset, allowed: set[int]):
    return type(vset).from_iterable(m for m in vset if m in allowed)


def _ann_bind_domain(
    store: AnnotatedStore,
    rows: list[_AnnRow],
    name: str,
    domain_heads: set[int] | None,
) -> list[_AnnRow]:
    """An empty GRAPH ?v {} block ranges ?v over the whole version domain."""
    members = sorted(domain_heads) if domain_heads is not None else range(store.n_versions)
    full = set_class(store.encoding).from_iterable(members)
    out: list[_AnnRow] = []
    for env, vsets in rows:
        previous = vsets.get(name)
        new_set = previous.intersect(full) if previous is not None else full
        if new_set.cardinality() == 0:
            continue
        out.append((env, {**vsets, name: new_set}))
    return out


def _ann_step(
    store: AnnotatedStore,
    rows: list[_AnnRow],
    pattern: TriplePattern,
    ctx: tuple[str, object],
    domain_heads: set[int] | None,
) -> list[_AnnRow]:
    const_ids = _constant_ids(pattern, store.dictionary)
    if const_ids is None:
        return []
    if ctx[0] == "const" and ctx[1] is None:
        return []
    out: list[_AnnRow] = []
    for env, vsets in rows:
        s = _slot_id(pattern.s, "s", env, const_ids)
        p = _slot_id(pattern.p, "p", env, const_ids)
        o = _slot_id(pattern.o, "o", env, const_ids)
        for triple, vset in store.match(s, p, o):
            bind = _unify(pattern, triple, env)
            if bind is None:
                continue
            if ctx[0] == "const":
                if not vset.contains(ctx[1]):
                    continue
                new_vsets = vsets
            else:
                name = ctx[1]
                previous = vsets.get(name)
                if previous is not None:
                    new_set = previous.intersect(vset)
                else:
                    new_set = _restrict(vset, domain_heads) if domain_heads is not None else vset
                if new_set.cardinality() == 0:
                    continue
                new_vsets = {**vsets, name: new_set}
            out.append(({**env, **bind} if bind else env, new_vsets))
    return out


def _ann_filter(
    rows: list[_AnnRow],
    expr: Expr,
    heads: set[int],
    dictionary: Dictionary,
) -> list[_AnnRow]:
    """Filter annotated rows, partitioning version sets around isHead().

    A row whose set mixes head and non-head versions cannot answer an
    isHead test as a whole, so it splits into at most 2^k sub-rows, one per
    truth assignment of the k isHead variables.  The parts are disjoint, so
    the later expansion sees each (binding, version) pair exactly once.
    """
    head_names = sorted(_ishead_vars(expr))
    out: list[_AnnRow] = []
    for env, vsets in rows:
        def lookup(name: str, _env=env) -> Term | None:
            tid = _env.get(name)
            return dictionary.resolve(tid) if tid is not None else None

        if not head_names:
            if _eval_expr(expr, lookup, lambda name: False) is True:
                out.append((env, vsets))
            continue
        for bits in product((True, False), repeat=len(head_names)):
            assign = dict(zip(head_names, bits))
            restricted: dict[str, object] = {}
            viable = True
            for name, flag in assign.items():
                vset = vsets[name]
                part = type(vset).from_iterable(
                    m for m in vset if (m in heads) == flag
                )
                if part.cardinality() == 0:
                    viable = False
                    break
                restricted[name] = part
            if not viable:
                continue
            if _eval_expr(expr, lookup, lambda name, _a=assign: _a[name]) is True:
                out.append((env, {**vsets, **restricted}))
    return out


def _expand(rows: list[_AnnRow], dictionary: Dictionary) -> Iterator[dict[str, Term]]:
    """Bind each version variable to every member of its set."""
    for env, vsets in rows:
        data = {name: dictionary.resolve(tid) for name, tid in env.items()}
        if not vsets:
            yield data
            continue
        names = sorted(vsets)
        member_lists = [list(vsets[name]) for name in names]
        for combo in product(*member_lists):
            row = dict(data)
            for name, member in zip(names, combo):
                row[name] = Iri(version_iri(member))
            yield row


def eval_annotated(
    store: AnnotatedStore,
    dag: VersionDag,
    query: Query,
    version_domain: str = "all",
) -> SolutionTable:
    """Evaluate over version-annotated triples without materializing versions."""
    _check_domain(version_domain)
    heads = dag.heads()
    domain_heads = heads if version_domain == "heads" else None
    main_head = dag.branches.get("main")
    rows: list[_AnnRow] = [({}, {})]
    for element in query.where:
        if not rows:
            break
        if isinstance(element, TriplePattern):
            rows = _ann_step(store, rows, element, ("const", main_head), None)
        elif isinstance(element, GraphBlock):
            if isinstance(element.name, Var):
                ctx: tuple[str, object] = ("var", element.name.name)
                if not element.patterns:
                    rows = _ann_bind_domain(store, rows, ctx[1], domain_heads)
                    continue
            else:
                seq = parse_version_iri(element.name.text)
                if seq is not None and not (0 <= seq < store.n_versions):
                    seq = None
                ctx = ("const", seq)
            for pattern in element.patterns:
                rows = _ann_step(
                    store, rows, pattern, ctx,
                    domain_heads if ctx[0] == "var" else None,
                )
                if not rows:
                    break
        else:
            rows = _ann_filter(rows, element.expr, heads, store.dictionary)
    return _finish(_expand(rows, store.dictionary), query)


# --- checkout evaluation -------------------------------------------------


class _PlainGraph:
    """One materialized version, indexed the same three ways as the store."""

    def __init__(self, triples: set[Triple]):
        self._spo: dict[int, dict[int, dict[int, bool]]] = {}
        self._pos: dict[int, dict[int, dict[int, bool]]] = {}
        self._osp: dict[int, dict[int, dict[int, bool]]] = {}
        for t in triples:
            self._spo.setdefault(t.s, {}).setdefault(t.p, {})[t.o] = True
            self._pos.setdefault(t.p, {}).setdefault(t.o, {})[t.s] = True
            self._osp.setdefault(t.o, {}).setdefault(t.s, {})[t.p] = True

    def match(
        self, s: TermId | None, p: TermId | None, o: TermId | None
    ) -> Iterator[Triple]:
        if s is not None:
            level2 = self._spo.get(s, {})
            if p is not None:
                candidates = [(p, level2[p])] if p in level2 else []
            else:
                candidates = list(level2.items())
            for pp, level3 in candidates:
                if o is not None:
                    if o in level3:
                        yield Triple(s, pp, o)
                else:
                    for oo in level3:
                        yield Triple(s, pp, oo)
        elif p is not None:
            level2 = self._pos.get(p, {})
            if o is not None:
                candidates = [(o, level2[o])] if o in level2 else []
            else:
                candidates = list(level2.items())
            for oo, level3 in candidates:
                for ss in level3:
                    yield Triple(ss, p, oo)
        elif o is not None:
            for ss, level3 in self._osp.get(o, {}).items():
                for pp in level3:
                    yield Triple(ss, pp, o)
        else:
            for ss, level2 in self._spo.items():
                for pp, level3 in level2.items():
                    for oo in level3:
                        yield Triple(ss, pp, oo)


_EMPTY_GRAPH = _PlainGraph(set())


def _plain_step(
    rows: list[dict[str, TermId]],
    pattern: TriplePattern,
    graph: _PlainGraph,
    dictionary: Dictionary,
) -> list[dict[str, TermId]]:
    const_ids = _constant_ids(pattern, dictionary)
    if const_ids is None:
        return []
    out: list[dict[str, TermId]] = []
    for env in rows:
        s = _slot_id(pattern.s, "s", env, const_ids)
        p = _slot_id(pattern.p, "p", env, const_ids)
        o = _slot_id(pattern.o, "o", env, const_ids)
        for triple in graph.match(s, p, o):
            bind = _unify(pattern, triple, env)
            if bind is None:
                continue
            out.append({**env, **bind} if bind else env)
    return out


def eval_checkout(
    store: AnnotatedStore,
    dag: VersionDag,
    query: Query,
    version_domain: str = "all",
) -> SolutionTable:
    """Materialize each candidate version and evaluate against it directly.

    This is the reference implementation the annotated evaluator is checked
    against, and the cost baseline the benchmark compares with.
    """
    _check_domain(version_domain)
    dictionary = store.dictionary
    heads = dag.heads()
    domain = sorted(heads) if version_domain == "heads" else list(range(store.n_versions))
    version_names = sorted(query.version_vars())
    graphs: dict[int, _PlainGraph] = {}

    def graph_at(seq: int) -> _PlainGraph:
        g = graphs.get(seq)
        if g is None:
            g = _PlainGraph(store.materialize(seq))
            graphs[seq] = g
        return g

    main_head = dag.branches.get("main")
    collected: list[dict[str, Term]] = []
    for combo in product(domain, repeat=len(version_names)):
        assign = dict(zip(version_names, combo))
        rows: list[dict[str, TermId]] = [{}]
        for element in query.where:
            if not rows:
                break
            if isinstance(element, TriplePattern):
                g = graph_at(main_head) if main_head is not None else _EMPTY_GRAPH
                rows = _plain_step(rows, element, g, dictionary)
            elif isinstance(element, GraphBlock):
                if isinstance(element.name, Var):
                    g = graph_at(assign[element.name.name])
                else:
                    seq = parse_version_iri(element.name.text)
                    if seq is not None and 0 <= seq < store.n_versions:
                        g = graph_at(seq)
                    else:
                        g = _EMPTY_GRAPH
                for pattern in element.patterns:
                    rows = _plain_step(rows, pattern, g, dictionary)
                    if not rows:
                        break
            else:
                expr = element.expr
                kept = []
                for env in rows:
                    def lookup(name: str, _env=env) -> Term | None:
                        tid = _env.get(name)
                        return dictionary.resolve(tid) if tid is not None else None

                    verdict = _eval_expr(
                        expr, lookup, lambda name, _a=assign: _a[name] in heads
                    )
                    if verdict is True:
                        kept.append(env)
                rows = kept
        for env in rows:
            row = {name: dictionary.resolve(tid) for name, tid in env.items()}
            for name, seq in assign.items():
                row[name] = Iri(version_iri(seq))
            collected.append(row)
    return _finish(iter(collected), query)


# --- result formatting ---------------------------------------------------


def format_results(table: SolutionTable, fmt: str = "tsv") -> str:
    """Render a table as TSV (N-Triples terms) or CSV (lexical forms)."""
    if fmt == "tsv":
        lines = ["\t".join(f"?{name}" for name in table.header)]
        for row in table.rows:
            lines.append("\t".join(format_term(cell) for cell in row))
        return "\n".join(lines) + "\n"
    if fmt == "csv":
        import csv
        import io

        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(table.header)
        for row in table.rows:
            writer.writerow([_csv_cell(cell) for cell in row])
        return buf.getvalue()
    raise ValueError(f"unknown result format: {fmt!r}")


def _csv_cell(term: Term) -> str:
    if isinstance(term, Iri):
        return term.text
    if isinstance(term, Literal):
        return term.lex
    return f"_:{term.label}"
