"""Triple store annotated with the set of versions containing each triple.

Instead of storing one graph per version, the store keeps every distinct
triple once and tags it with a VersionSet.  Applying a commit stamps the new
version number onto everything present in it, so annotation stays eager and
reads need no reconstruction.  Three permutation indexes (SPO, POS, OSP)
share the same VersionSet objects, which keeps them consistent by
construction.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from datetime import datetime
from typing import Iterator

from .dag import Provenance, VersionDag
from .errors import DeltaError, NotFoundError, StateError, ValidationError
from .terms import Dictionary, TermId, Triple
from .versionsets import VersionSet, set_class

log = logging.getLogger(__name__)

_Index = dict[int, dict[int, dict[int, VersionSet]]]


@dataclass(frozen=True)
class Delta:
    """The change a commit applies: triples added and triples removed."""

    additions: frozenset[Triple]
    removals: frozenset[Triple]

    def __post_init__(self):
        overlap = self.additions & self.removals
        if overlap:
            raise ValidationError(
                f"delta adds and removes the same {len(overlap)} triple(s)"
            )


EMPTY_DELTA = Delta(frozenset(), frozenset())


@dataclass(frozen=True)
class StoreStats:
    distinct_triples: int
    versions: int
    scalar_cost_total: int
    triples_sum_over_versions: int


class AnnotatedStore:
    """All versions of a graph in one set of version-annotated triples.

    The version set encoding ("extension" or "interval") is fixed when the
    store is created.  Reads may run concurrently; commits must be serialized
    by the caller.
    """

    def __init__(self, dictionary: Dictionary | None = None, encoding: str = "extension"):
        self.dictionary = dictionary if dictionary is not None else Dictionary()
        self.encoding = encoding
        self._set_cls = set_class(encoding)
        self._sets: dict[Triple, VersionSet] = {}
        self._spo: _Index = {}
        self._pos: _Index = {}
        self._osp: _Index = {}
        self._n_versions = 0

    @property
    def n_versions(self) -> int:
        return self._n_versions

    def __contains__(self, triple: Triple) -> bool:
        return triple in self._sets

    def version_set(self, triple: Triple) -> VersionSet | None:
        """The live version set of a triple, or None if never stored."""
        return self._sets.get(triple)

    def apply_commit(
        self,
        dag: VersionDag,
        parents: list[int],
        branch: str,
        delta: Delta,
        *,
        message: str = "",
        author: str = "",
        timestamp: datetime | None = None,
        provenance: Provenance | None = None,
        strict: bool = True,
    ) -> int:
        """Create a commit in the dag and stamp its contents into the store.

        The new version contains (union of parent materializations minus
        removals) plus additions.  In strict mode a removal absent from every
        parent raises DeltaError; with strict=False it is ignored with a
        warning.  Adding a triple some parent already holds is fine either
        way.  Returns the new version number.
        """
        if len(dag) != self._n_versions:
            raise StateError(
                f"store knows {self._n_versions} versions but dag has {len(dag)}"
            )
        parent_union: set[Triple] = set()
        for p in parents:
            parent_union |= self.materialize(p)
        spurious = delta.removals - parent_union
        if spurious:
            if strict:
                sample = next(iter(spurious))
                raise DeltaError(
                    f"{len(spurious)} removal(s) not present in any parent, "
                    f"e.g. {self._describe(sample)}"
                )
            log.warning("ignoring %d removal(s) absent from all parents", len(spurious))
        present = (parent_union - delta.removals) | delta.additions
        meta = dict(
            message=message, author=author, timestamp=timestamp, provenance=provenance
        )
        if not parents:
            seq = dag.init_root(**meta)
        else:
            seq = dag.commit(parents, branch, **meta)
        for triple in present:
            vset = self._sets.get(triple)
            if vset is None:
                vset = self._set_cls.from_iterable(())
                self._register(triple, vset)
            vset.insert(seq)
        self._n_versions = seq + 1
        return seq

    def materialize(self, v: int) -> set[Triple]:
        """The plain triple set of version v, reconstructed by scanning."""
        if not isinstance(v, int) or v < 0 or v >= self._n_versions:
            raise NotFoundError(f"unknown version: {v}")
        return {t for t, vset in self._sets.items() if vset.contains(v)}

    def match(
        self,
        s: TermId | None = None,
        p: TermId | None = None,
        o: TermId | None = None,
    ) -> Iterator[tuple[Triple, VersionSet]]:
        """All stored triples matching the bound positions, with their sets.

        The index is picked by the first bound position: subject uses SPO,
        else predicate uses POS, else object uses OSP, and a fully unbound
        pattern scans SPO.  Yielded sets are live; callers must not mutate.
        """
        if s is not None:
            for pp, oo, vset in self._walk(self._spo, s, p, o):
                yield Triple(s, pp, oo), vset
        elif p is not None:
            for oo, ss, vset in self._walk(self._pos, p, o, None):
                yield Triple(ss, p, oo), vset
        elif o is not None:
            for ss, pp, vset in self._walk(self._osp, o, None, None):
                yield Triple(ss, pp, o), vset
        else:
            for ss, level2 in self._spo.items():
                for pp, level3 in level2.items():
                    for oo, vset in level3.items():
                        yield Triple(ss, pp, oo), vset

    @staticmethod
    def _walk(index: _Index, first: int, second: int | None, third: int | None):
        level2 = index.get(first)
        if level2 is None:
            return
        if second is not None:
            items2 = [(second, level2.get(second))] if second in level2 else []
        else:
            items2 = level2.items()
        for k2, level3 in items2:
            if third is not None:
                if third in level3:
                    yield k2, third, level3[third]
            else:
                for k3, vset in level3.items():
                    yield k2, k3, vset

    def stats(self) -> StoreStats:
        cost = 0
        total = 0
        for vset in self._sets.values():
            cost += vset.scalar_cost()
            total += vset.cardinality()
        return StoreStats(
            distinct_triples=len(self._sets),
            versions=self._n_versions,
            scalar_cost_total=cost,
            triples_sum_over_versions=total,
        )

    def remap_versions(self, mapping: dict[int, int]) -> None:
        """Rewrite every version set through a renumbering bijection."""
        for triple, vset in self._sets.items():
            remapped = self._set_cls.from_iterable(mapping[v] for v in vset)
            self._sets[triple] = remapped
            self._spo[triple.s][triple.p][triple.o] = remapped
            self._pos[triple.p][triple.o][triple.s] = remapped
            self._osp[triple.o][triple.s][triple.p] = remapped

    def _register(self, t: Triple, vset: VersionSet) -> None:
        self._sets[t] = vset
        self._spo.setdefault(t.s, {}).setdefault(t.p, {})[t.o] = vset
        self._pos.setdefault(t.p, {}).setdefault(t.o, {})[t.s] = vset
        self._osp.setdefault(t.o, {}).setdefault(t.s, {})[t.p] = vset

    def _describe(self, t: Triple) -> str:
        from .ntriples import format_term

        try:
            return " ".join(
                format_term(self.dictionary.resolve(tid)) for tid in (t.s, t.p, t.o)
            )
        except Exception:
            return repr(t)
