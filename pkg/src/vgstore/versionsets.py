"""Sets of version numbers in two interchangeable encodings.

ExtensionSet keeps the members as a sorted list; IntervalSet keeps closed,
pairwise disjoint, non-adjacent [lo, hi] runs.  Both maintain a unique normal
form, so structural equality is set equality.  insert() is the only mutator;
everything else returns new sets, which lets a store hand out live references
safely.

scalar_cost is the stored footprint of a set: the member count for an extension,
twice the run count for intervals.  It is the quantity the benchmark compares
across encodings.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from bisect import bisect_left, bisect_right, insort
from typing import Iterable, Iterator


class VersionSet(ABC):
    """Common interface over the two encodings."""

    encoding: str

    @classmethod
    @abstractmethod
    def from_iterable(cls, members: Iterable[int]) -> "VersionSet": ...

    @abstractmethod
    def contains(self, v: int) -> bool: ...

    @abstractmethod
    def insert(self, v: int) -> None: ...

    @abstractmethod
    def intersect(self, other: "VersionSet") -> "VersionSet": ...

    @abstractmethod
    def union(self, other: "VersionSet") -> "VersionSet": ...

    @abstractmethod
    def iterate(self) -> Iterator[int]: ...

    @abstractmethod
    def cardinality(self) -> int: ...

    @abstractmethod
    def scalar_cost(self) -> int: ...

    def __contains__(self, v: int) -> bool:
        return self.contains(v)

    def __iter__(self) -> Iterator[int]:
        return self.iterate()

    def __len__(self) -> int:
        return self.cardinality()


class ExtensionSet(VersionSet):
    """Members stored explicitly as a sorted list of ints."""

    encoding = "extension"

    __slots__ = ("_members",)

    def __init__(self):
        self._members: list[int] = []

    @classmethod
    def from_iterable(cls, members: Iterable[int]) -> "ExtensionSet":
        out = cls()
        out._members = sorted(set(members))
        return out

    def contains(self, v: int) -> bool:
        i = bisect_left(self._members, v)
        return i < len(self._members) and self._members[i] == v

    def insert(self, v: int) -> None:
        if self._members and v > self._members[-1]:
            self._members.append(v)  # the common append-at-end path
            return
        if not self.contains(v):
            insort(self._members, v)

    def intersect(self, other: VersionSet) -> "ExtensionSet":
        if not isinstance(other, ExtensionSet):
            other = ExtensionSet.from_iterable(other)
        a, b = self._members, other._members
        out = ExtensionSet()
        i = j = 0
        while i < len(a) and j < len(b):
            if a[i] == b[j]:
                out._members.append(a[i])
                i += 1
                j += 1
            elif a[i] < b[j]:
                i += 1
            else:
                j += 1
        return out

    def union(self, other: VersionSet) -> "ExtensionSet":
        if not isinstance(other, ExtensionSet):
            other = ExtensionSet.from_iterable(other)
        return ExtensionSet.from_iterable(self._members + other._members)

    def iterate(self) -> Iterator[int]:
        return iter(self._members)

    def cardinality(self) -> int:
        return len(self._members)

    def scalar_cost(self) -> int:
        return len(self._members)

    def __eq__(self, other) -> bool:
        return isinstance(other, ExtensionSet) and self._members == other._members

    def __repr__(self) -> str:
        return f"ExtensionSet({self._members})"


class IntervalSet(VersionSet):
    """Members stored as closed runs [lo, hi], disjoint and non-adjacent."""

    encoding = "interval"

    __slots__ = ("_runs",)

    def __init__(self):
        self._runs: list[list[int]] = []

    @classmethod
    def from_iterable(cls, members: Iterable[int]) -> "IntervalSet":
        out = cls()
        for v in sorted(set(members)):
            if out._runs and out._runs[-1][1] + 1 == v:
                out._runs[-1][1] = v
            else:
                out._runs.append([v, v])
        return out

    @classmethod
    def _from_runs(cls, runs: list[list[int]]) -> "IntervalSet":
        out = cls()
        out._runs = runs
        return out

    def _locate(self, v: int) -> int:
        """Index of the first run whose hi >= v."""
        los = [r[0] for r in self._runs]
        i = bisect_right(los, v)
        if i > 0 and self._runs[i - 1][1] >= v:
            return i - 1
        return i

    def contains(self, v: int) -> bool:
        i = self._locate(v)
        return i < len(self._runs) and self._runs[i][0] <= v <= self._runs[i][1]

    def insert(self, v: int) -> None:
        runs = self._runs
        if runs and v > runs[-1][1]:  # the common append-at-end path
            if runs[-1][1] + 1 == v:
                runs[-1][1] = v
            else:
                runs.append([v, v])
            return
        i = self._locate(v)
        if i < len(runs) and runs[i][0] <= v <= runs[i][1]:
            return
        joins_prev = i > 0 and runs[i - 1][1] + 1 == v
        joins_next = i < len(runs) and runs[i][0] - 1 == v
        if joins_prev and joins_next:
            runs[i - 1][1] = runs[i][1]
            del runs[i]
        elif joins_prev:
            runs[i - 1][1] = v
        elif joins_next:
            runs[i][0] = v
        else:
            runs.insert(i, [v, v])

    def intersect(self, other: VersionSet) -> "IntervalSet":
        if not isinstance(other, IntervalSet):
            other = IntervalSet.from_iterable(other)
        a, b = self._runs, other._runs
        out: list[list[int]] = []
        i = j = 0
        while i < len(a) and j < len(b):
            lo = max(a[i][0], b[j][0])
            hi = min(a[i][1], b[j][1])
            if lo <= hi:
                out.append([lo, hi])
            if a[i][1] < b[j][1]:
                i += 1
            else:
                j += 1
        return IntervalSet._from_runs(out)

    def union(self, other: VersionSet) -> "IntervalSet":
        if not isinstance(other, IntervalSet):
            other = IntervalSet.from_iterable(other)
        merged = sorted(self._runs + other._runs)
        out: list[list[int]] = []
        for lo, hi in merged:
            if out and lo <= out[-1][1] + 1:  # overlap or adjacency coalesces
                out[-1][1] = max(out[-1][1], hi)
            else:
                out.append([lo, hi])
        return IntervalSet._from_runs(out)

    def iterate(self) -> Iterator[int]:
        for lo, hi in self._runs:
            yield from range(lo, hi + 1)

    def runs(self) -> tuple[tuple[int, int], ...]:
        """The closed [lo, hi] runs, in ascending order."""
        return tuple((lo, hi) for lo, hi in self._runs)

    def cardinality(self) -> int:
        return sum(hi - lo + 1 for lo, hi in self._runs)

    def scalar_cost(self) -> int:
        return 2 * len(self._runs)

    def __eq__(self, other) -> bool:
        return isinstance(other, IntervalSet) and self._runs == other._runs

    def __repr__(self) -> str:
        runs = ", ".join(f"{lo}-{hi}" if lo != hi else str(lo) for lo, hi in self._runs)
        return f"IntervalSet([{runs}])"


ENCODINGS: dict[str, type[VersionSet]] = {
    ExtensionSet.encoding: ExtensionSet,
    IntervalSet.encoding: IntervalSet,
}


def set_class(encoding: str) -> type[VersionSet]:
    try:
        return ENCODINGS[encoding]
    except KeyError:
        raise ValueError(f"unknown version set encoding: {encoding!r}") from None
