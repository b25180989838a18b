"""Integer domains stored as ordered, disjoint, inclusive intervals.

An IntervalSet is immutable. Every operation returns a new set, which lets
the store trail old domains by reference and restore them bit-identically.
"""

from __future__ import annotations

from typing import Iterable, Iterator

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1


class IntervalSet:
    """A finite set of integers, normalized so that intervals are sorted,
    non-overlapping, and separated by gaps of at least two."""

    __slots__ = ("_ivs",)

    def __init__(self, intervals: Iterable[tuple[int, int]] = ()):
        pairs = sorted((int(lo), int(hi)) for lo, hi in intervals)
        merged: list[tuple[int, int]] = []
        for lo, hi in pairs:
            if lo > hi:
                continue
            if merged and lo <= merged[-1][1] + 1:
                last_lo, last_hi = merged[-1]
                if hi > last_hi:
                    merged[-1] = (last_lo, hi)
            else:
                merged.append((lo, hi))
        self._ivs = tuple(merged)

    @classmethod
    def range(cls, lo: int, hi: int) -> "IntervalSet":
        return cls(((lo, hi),))

    @classmethod
    def point(cls, value: int) -> "IntervalSet":
        return cls(((value, value),))

    @classmethod
    def from_values(cls, values: Iterable[int]) -> "IntervalSet":
        return cls((v, v) for v in values)

    @classmethod
    def empty(cls) -> "IntervalSet":
        return cls(())

    @property
    def intervals(self) -> tuple[tuple[int, int], ...]:
        return self._ivs

    def is_empty(self) -> bool:
        return not self._ivs

    def __bool__(self) -> bool:
        return bool(self._ivs)

    def min(self) -> int:
        return self._ivs[0][0]

    def max(self) -> int:
        return self._ivs[-1][1]

    def size(self) -> int:
        return sum(hi - lo + 1 for lo, hi in self._ivs)

    def is_singleton(self) -> bool:
        return len(self._ivs) == 1 and self._ivs[0][0] == self._ivs[0][1]

    def value(self) -> int:
        """The single element of a singleton set."""
        if not self.is_singleton():
            raise ValueError("domain is not a singleton")
        return self._ivs[0][0]

    def __contains__(self, v: int) -> bool:
        ivs = self._ivs
        lo, hi = 0, len(ivs) - 1
        while lo <= hi:
            mid = (lo + hi) // 2
            a, b = ivs[mid]
            if v < a:
                hi = mid - 1
            elif v > b:
                lo = mid + 1
            else:
                return True
        return False

    def values(self) -> Iterator[int]:
        for lo, hi in self._ivs:
            yield from range(lo, hi + 1)

    def remove_below(self, k: int) -> "IntervalSet":
        """Values >= k."""
        if not self._ivs or k <= self.min():
            return self
        out = [(max(lo, k), hi) for lo, hi in self._ivs if hi >= k]
        return IntervalSet(out)

    def remove_above(self, k: int) -> "IntervalSet":
        """Values <= k."""
        if not self._ivs or k >= self.max():
            return self
        out = [(lo, min(hi, k)) for lo, hi in self._ivs if lo <= k]
        return IntervalSet(out)

    def clamp(self, lo: int, hi: int) -> "IntervalSet":
        return self.remove_below(lo).remove_above(hi)

    def remove_value(self, v: int) -> "IntervalSet":
        if v not in self:
            return self
        out = []
        for lo, hi in self._ivs:
            if lo <= v <= hi:
                if lo <= v - 1:
                    out.append((lo, v - 1))
                if v + 1 <= hi:
                    out.append((v + 1, hi))
            else:
                out.append((lo, hi))
        return IntervalSet(out)

    def remove_values(self, values: Iterable[int]) -> "IntervalSet":
        out = self
        for v in values:
            out = out.remove_value(v)
        return out

    def intersect(self, other: "IntervalSet") -> "IntervalSet":
        out = []
        a, b = self._ivs, other._ivs
        i = j = 0
        while i < len(a) and j < len(b):
            lo = max(a[i][0], b[j][0])
            hi = min(a[i][1], b[j][1])
            if lo <= hi:
                out.append((lo, hi))
            if a[i][1] < b[j][1]:
                i += 1
            else:
                j += 1
        return IntervalSet(out)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, IntervalSet) and self._ivs == other._ivs

    def __hash__(self) -> int:
        return hash(self._ivs)

    def __repr__(self) -> str:
        parts = []
        for lo, hi in self._ivs:
            parts.append(str(lo) if lo == hi else f"{lo}..{hi}")
        return "{%s}" % ", ".join(parts)
