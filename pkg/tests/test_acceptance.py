"""Eight release gates, one test each, each printing a PASS/FAIL line.

These are intentionally end-to-end: randomized evaluator agreement, fidelity
of the canonical city queries against brute-force oracles, encoding
equivalence at volume, measured storage and latency direction on a
100-version history, repack and persistence invariance, and the command-line
contract.  Run with -s to watch the lines scroll by.
"""

import random
import re
from time import perf_counter

import pytest

from vgstore import (
    ExtensionSet,
    IntervalSet,
    Iri,
    Literal,
    eval_annotated,
    eval_checkout,
    format_term,
    load_repository,
    parse_query,
    repack,
    save_repository,
    serialize_ntriples,
    version_iri,
)
from vgstore.bench import (
    QUERIES,
    ScenarioParams,
    generate,
    run as bench_run,
    write_report,
)
from vgstore.cli import run as vg
from vgstore.terms import RDF_TYPE

from helpers import random_query, random_repo

CITY = "http://ex.org/"


def _report(n, ok, detail):
    print(f"ACCEPTANCE {n} {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, f"criterion {n}: {detail}"


# 1. the two evaluators agree on randomized instances, fast ----------------


def test_acceptance_1_evaluator_agreement():
    start = perf_counter()
    rng = random.Random(20260815)
    cases = mismatches = 0
    while cases < 200:
        store, dag = random_repo(
            rng,
            encoding=rng.choice(["extension", "interval"]),
            allow_blanks=rng.random() < 0.3,
        )
        for _ in range(2):
            query = parse_query(random_query(rng, store.n_versions))
            domain = rng.choice(["all", "heads"])
            a = eval_annotated(store, dag, query, version_domain=domain)
            c = eval_checkout(store, dag, query, version_domain=domain)
            cases += 1
            if a.header != c.header or a.rows != c.rows:
                mismatches += 1
    elapsed = perf_counter() - start
    _report(
        1,
        mismatches == 0 and elapsed < 60.0,
        f"{cases - mismatches}/{cases} annotated==checkout row multisets"
        f" in {elapsed:.1f}s (limit 60s)",
    )


# 2. canonical city queries against independent oracles --------------------


def _q1_oracle(store, dag):
    """Versions containing an accessible station, by materialize-and-scan."""
    d = store.dictionary
    rdf_type = d.lookup(Iri(RDF_TYPE))
    station = d.lookup(Iri(CITY + "MetroStation"))
    accessible = d.lookup(Iri(CITY + "accessible"))
    true = d.lookup(Literal("true", "http://www.w3.org/2001/XMLSchema#boolean"))
    found = set()
    for v in range(store.n_versions):
        graph = store.materialize(v)
        typed = {t.s for t in graph if t.p == rdf_type and t.o == station}
        if any(t.s in typed and t.o == true for t in graph if t.p == accessible):
            found.add(version_iri(v))
    return found


def _q2_oracle(store, dag, domain):
    """Max height of b1 across the domain, by float arithmetic."""
    d = store.dictionary
    b1 = d.lookup(Iri(CITY + "b1"))
    height = d.lookup(Iri(CITY + "height"))
    versions = dag.heads() if domain == "heads" else range(store.n_versions)
    values = [
        float(d.resolve(t.o).lex)
        for v in versions
        for t in store.materialize(v)
        if t.s == b1 and t.p == height
    ]
    return max(values)


def test_acceptance_2_city_query_fidelity():
    store, dag = generate(ScenarioParams(), None)  # seed 42, 50/8/20, 0.2, 0.05
    q1 = parse_query(QUERIES["accessible-stations"][0])
    ann = eval_annotated(store, dag, q1)
    chk = eval_checkout(store, dag, q1)
    q1_ok = (
        ann.rows == chk.rows
        and {row[0].text for row in ann.rows} == _q1_oracle(store, dag)
    )

    q2 = parse_query(QUERIES["max-height-all"][0])
    q2_ok = True
    for domain in ("all", "heads"):
        a = eval_annotated(store, dag, q2, version_domain=domain)
        c = eval_checkout(store, dag, q2, version_domain=domain)
        q2_ok = (
            q2_ok
            and a.rows == c.rows
            and len(a.rows) == 1
            and float(a.rows[0][0].lex) == _q2_oracle(store, dag, domain)
        )
    _report(
        2,
        q1_ok and q2_ok,
        f"Q1 version set ({len(ann.rows)} rows) and Q2 max height match"
        " brute-force oracles under both domains",
    )


# 3. the two encodings are pointwise interchangeable ------------------------


def test_acceptance_3_encoding_equivalence():
    rng = random.Random(3)
    checks = mismatches = 0
    while checks < 10_000:
        xs = {rng.randrange(64) for _ in range(rng.randint(0, 24))}
        ys = {rng.randrange(64) for _ in range(rng.randint(0, 24))}
        ext_x, int_x = ExtensionSet.from_iterable(xs), IntervalSet.from_iterable(xs)
        ext_y, int_y = ExtensionSet.from_iterable(ys), IntervalSet.from_iterable(ys)
        for v in (rng.randrange(64), rng.randrange(64)):
            checks += 2
            mismatches += (v in ext_x) != (v in xs)
            mismatches += (v in int_x) != (v in xs)
        for a, b in ((ext_x, int_y), (int_x, ext_y)):
            checks += 2
            mismatches += set(a.intersect(b)) != (xs & ys)
            mismatches += set(a.union(b)) != (xs | ys)
    round_trips = 0
    for _ in range(1000):
        xs = {rng.randrange(200) for _ in range(rng.randint(0, 40))}
        ext = ExtensionSet.from_iterable(xs)
        back = ExtensionSet.from_iterable(IntervalSet.from_iterable(ext).iterate())
        round_trips += back == ext
    _report(
        3,
        mismatches == 0 and round_trips == 1000,
        f"{checks} cross-encoding checks, {mismatches} mismatches;"
        f" {round_trips}/1000 extension->interval->extension identities",
    )


# 4 + 5. measured storage and latency direction on one big scenario --------

CENTURY = ScenarioParams(
    buildings=500, stations=50, versions=100, branch_prob=0.0, churn=0.01, seed=42
)


@pytest.fixture(scope="module")
def century(tmp_path_factory):
    outdir = tmp_path_factory.mktemp("acceptance") / "century"
    start = perf_counter()
    generate(CENTURY, outdir)
    rows = bench_run(outdir, runs=3)
    elapsed = perf_counter() - start
    write_report(rows, outdir.parent / "century_report.csv")
    return outdir, rows, elapsed


def test_acceptance_4_shared_storage_pays_off(century):
    outdir, rows, _elapsed = century
    stats = {
        encoding: load_repository(outdir, encoding=encoding)[0].stats()
        for encoding in ("extension", "interval")
    }
    ext, inter = stats["extension"], stats["interval"]
    sharing = ext.distinct_triples < ext.triples_sum_over_versions / 50
    compression = inter.scalar_cost_total < ext.scalar_cost_total
    in_csv = {row.encoding: row.scalar_cost_total for row in rows} == {
        "extension": ext.scalar_cost_total,
        "interval": inter.scalar_cost_total,
    }
    _report(
        4,
        sharing and compression and in_csv,
        f"distinct {ext.distinct_triples} < {ext.triples_sum_over_versions}/50;"
        f" interval cost {inter.scalar_cost_total} <"
        f" extension cost {ext.scalar_cost_total}; ratios in the report CSV",
    )


def test_acceptance_5_annotated_evaluation_is_faster(century):
    _outdir, rows, elapsed = century
    latency = {
        (r.encoding, r.evaluator): r.latency_ms
        for r in rows
        if r.query == "accessible-stations"
    }
    faster = all(
        latency[enc, "annotated"] < latency[enc, "checkout"]
        for enc in ("extension", "interval")
    )
    speedups = ", ".join(
        f"{enc}: {latency[enc, 'checkout'] / max(latency[enc, 'annotated'], 1e-6):.1f}x"
        for enc in ("extension", "interval")
    )
    _report(
        5,
        faster and elapsed < 300.0,
        f"median annotated < checkout on the version-scan query ({speedups})"
        f" and the whole benchmark took {elapsed:.1f}s (limit 300s)",
    )


# 6. repacking changes numbers, never answers -------------------------------

_VERSION_IRI = re.compile(r"urn:vg:version:(0|[1-9][0-9]*)\Z")


def _remap_rows(table, mapping):
    remapped = []
    for row in table.rows:
        cells = []
        for cell in row:
            m = _VERSION_IRI.match(cell.text) if isinstance(cell, Iri) else None
            if m:
                cells.append(Iri(version_iri(mapping[int(m.group(1))])))
            else:
                cells.append(cell)
        remapped.append(tuple(cells))
    remapped.sort(key=lambda r: tuple(format_term(c) for c in r))
    return remapped


def test_acceptance_6_repack_preserves_query_results():
    rng = random.Random(6)
    repos = failures = 0
    for _ in range(50):
        store, dag = random_repo(rng, encoding=rng.choice(["extension", "interval"]))
        query = parse_query(random_query(rng, store.n_versions))
        domain = rng.choice(["all", "heads"])
        before = eval_annotated(store, dag, query, version_domain=domain)
        mats = {v: set(store.materialize(v)) for v in range(store.n_versions)}
        mapping = repack(dag, store)
        after = eval_annotated(store, dag, query, version_domain=domain)
        repos += 1
        if after.rows != _remap_rows(before, mapping):
            failures += 1
        elif any(set(store.materialize(mapping[v])) != mats[v] for v in mats):
            failures += 1
    _report(
        6,
        failures == 0,
        f"{repos - failures}/{repos} repositories give identical query"
        " results and materializations across repack",
    )


# 7. what is saved is what loads back ---------------------------------------


def test_acceptance_7_persistence_round_trip(tmp_path):
    rng = random.Random(7)
    repos = failures = 0
    for i in range(50):
        encoding = rng.choice(["extension", "interval"])
        store, dag = random_repo(
            rng, encoding=encoding, allow_blanks=rng.random() < 0.5
        )
        outdir = tmp_path / f"r{i}"
        save_repository(store, dag, outdir)
        store2, dag2 = load_repository(outdir, encoding=encoding)
        same_graphs = all(
            serialize_ntriples(store.materialize(v), store.dictionary)
            == serialize_ntriples(store2.materialize(v), store2.dictionary)
            for v in range(store.n_versions)
        )
        same_meta = dag.commits() == dag2.commits() and dag.branches == dag2.branches
        repos += 1
        failures += not (same_graphs and same_meta)
    _report(
        7,
        failures == 0,
        f"{repos - failures}/{repos} repositories load back with"
        " byte-identical versions and identical commit metadata",
    )


# 8. the command-line contract ----------------------------------------------


def test_acceptance_8_cli_contract(tmp_path, capsys):
    r = str(tmp_path / "repo")
    patch = tmp_path / "root.patch"
    patch.write_text(
        'A <urn:c:s1> <urn:c:kind> <urn:c:Stop> .\n'
        'A <urn:c:s1> <urn:c:open> "true"^^'
        "<http://www.w3.org/2001/XMLSchema#boolean> .\n",
        encoding="utf-8",
    )
    toggle = tmp_path / "toggle.patch"
    toggle.write_text(
        'D <urn:c:s1> <urn:c:open> "true"^^'
        "<http://www.w3.org/2001/XMLSchema#boolean> .\n"
        'A <urn:c:s1> <urn:c:open> "false"^^'
        "<http://www.w3.org/2001/XMLSchema#boolean> .\n",
        encoding="utf-8",
    )
    q = 'SELECT ?v WHERE { GRAPH ?v { ?s <urn:c:open> "true"^^'
    q += '<http://www.w3.org/2001/XMLSchema#boolean> } }'

    def call(*argv):
        code = vg(list(argv))
        out, err = capsys.readouterr()
        return code, out, err

    checks = []

    def expect(expected_code, *argv):
        code, out, err = call(*argv)
        checks.append((argv[0] if argv else "(none)", code == expected_code, err))
        return out

    expect(0, "init", "--repo", r, "--patch", str(patch))
    expect(2, "init", "--repo", r, "--patch", str(patch))
    expect(0, "commit", "--repo", r, "--branch", "main", "--patch", str(toggle))
    expect(0, "branch", "--repo", r, "beta", "--at", "0")
    expect(0, "commit", "--repo", r, "--branch", "beta", "--patch", str(toggle))
    expect(0, "merge", "--repo", r, "--branch", "main", "--from", "2")
    expect(0, "checkout", "--repo", r, "--version", "3")
    expect(2, "checkout", "--repo", r, "--version", "99")
    expect(0, "log", "--repo", r)
    expect(0, "stats", "--repo", r)
    expect(0, "bench", "--repo", r, "--runs", "3",
           "--out", str(tmp_path / "b.csv"))
    expect(3, "query", "--repo", r, "--inline", "SELECT nonsense")
    expect(1, "query", "--repo", r)  # no --file/--inline
    expect(1, "nosuchcommand", "--repo", r)
    expect(2, "stats", "--repo", str(tmp_path / "missing"))
    tsv_a = expect(0, "query", "--repo", r, "--inline", q,
                   "--evaluator", "annotated")
    tsv_c = expect(0, "query", "--repo", r, "--inline", q,
                   "--evaluator", "checkout")
    checks.append(("byte-identity", tsv_a == tsv_c and tsv_a != "", ""))

    bad = [(name, err) for name, ok_flag, err in checks if not ok_flag]
    _report(
        8,
        not bad,
        f"{len(checks) - len(bad)}/{len(checks)} scripted steps hit their"
        f" documented exit codes, annotated==checkout output"
        + (f"; first failure: {bad[0]}" if bad else ""),
    )
