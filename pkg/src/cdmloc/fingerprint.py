"""Fingerprints, location labels and reference fingerprint maps.

A fingerprint is a sparse collection of ``(attribute, value)`` pairs, e.g.
access-point MAC addresses with their RSS readings. Only observed
attributes are stored; the missing-value stand-in is reintroduced by
:func:`densify` for the vector-metric baseline.
"""
from __future__ import annotations

import math
from collections.abc import Hashable, Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .exceptions import DomainError

AttributeId = Hashable


class Fingerprint(Mapping):
    """Immutable mapping from attribute id to an observed value.

    Entries are kept in sorted attribute order so iteration is
    deterministic. If ``missing`` is given, entries carrying that value are
    dropped on construction.

    >>> fp = Fingerprint({"b": -60, "a": -50})
    >>> list(fp)
    ['a', 'b']
    >>> len(Fingerprint({"a": 100, "b": -70}, missing=100))
    1
    """

    __slots__ = ("_entries", "_hash")

    def __init__(self, entries=(), *, missing: float | None = None):
        if isinstance(entries, Mapping):
            pairs = list(entries.items())
        else:
            pairs = list(entries)
        data = {}
        for attr, value in pairs:
            if attr in data:
                raise DomainError(f"duplicate attribute id {attr!r}")
            value = float(value)
            if not math.isfinite(value):
                raise DomainError(f"non-finite value for attribute {attr!r}")
            data[attr] = value
        if missing is not None:
            data = {a: v for a, v in data.items() if v != missing}
        self._entries = dict(sorted(data.items()))
        self._hash = None

    def __getitem__(self, attr):
        return self._entries[attr]

    def __iter__(self) -> Iterator:
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(tuple(self._entries.items()))
        return self._hash

    def __eq__(self, other):
        if isinstance(other, Fingerprint):
            return self._entries == other._entries
        return NotImplemented

    def __repr__(self):
        return f"Fingerprint({self._entries!r})"

    @property
    def attributes(self) -> tuple:
        return tuple(self._entries)


@dataclass(frozen=True)
class GeoLabel:
    """Ground-truth (or estimated) position of a fingerprint."""

    x: float
    y: float
    building: int | None = None
    floor: int | None = None


def shared_attributes(a: Mapping, b: Mapping) -> tuple:
    """Attribute ids present in both fingerprints, sorted."""
    return tuple(sorted(k for k in a if k in b))


def exclusive_attributes(a: Mapping, b: Mapping) -> tuple:
    """Attribute ids present in ``a`` but not in ``b``, sorted."""
    return tuple(sorted(k for k in a if k not in b))


def densify(f: Mapping, universe: Sequence, gamma: float) -> tuple[float, ...]:
    """Equal-length vector of ``f`` over ``universe``; gaps filled with ``gamma``.

    Attributes of ``f`` outside the universe are dropped.
    """
    if len(universe) == 0:
        raise DomainError("universe must be non-empty")
    return tuple(float(f[a]) if a in f else float(gamma) for a in universe)


class ReferenceFingerprintMap:
    """Ordered, index-addressable collection of labeled fingerprints.

    The attribute universe is the sorted union of all attribute ids.
    Dense numpy views used by the batch dissimilarity code are built
    lazily and cached.
    """

    def __init__(self, fingerprints: Iterable[Mapping], labels: Iterable[GeoLabel]):
        fps = tuple(f if isinstance(f, Fingerprint) else Fingerprint(f) for f in fingerprints)
        labs = tuple(labels)
        if len(fps) != len(labs):
            raise DomainError(f"{len(fps)} fingerprints but {len(labs)} labels")
        for field in ("building", "floor"):
            present = {getattr(lab, field) is not None for lab in labs}
            if len(present) > 1:
                raise DomainError(f"{field} label present on some records but not all")
        self.fingerprints = fps
        self.labels = labs
        self.universe = tuple(sorted(set().union(*fps))) if fps else ()

    def __len__(self):
        return len(self.fingerprints)

    def __getitem__(self, i):
        return self.fingerprints[i], self.labels[i]

    def __iter__(self):
        return zip(self.fingerprints, self.labels)

    @property
    def records(self) -> list[tuple[Fingerprint, GeoLabel]]:
        return list(zip(self.fingerprints, self.labels))

    @property
    def has_building(self) -> bool:
        return bool(self.labels) and self.labels[0].building is not None

    @property
    def has_floor(self) -> bool:
        return bool(self.labels) and self.labels[0].floor is not None

    def subset(self, indices: Iterable[int]) -> ReferenceFingerprintMap:
        idx = list(indices)
        return ReferenceFingerprintMap(
            [self.fingerprints[i] for i in idx], [self.labels[i] for i in idx]
        )

    @cached_property
    def attribute_index(self) -> dict:
        return {a: j for j, a in enumerate(self.universe)}

    @cached_property
    def values(self) -> np.ndarray:
        """``N x U`` array of observed values, NaN where unobserved."""
        out = np.full((len(self), len(self.universe)), np.nan)
        col = self.attribute_index
        for i, fp in enumerate(self.fingerprints):
            for a, v in fp.items():
                out[i, col[a]] = v
        return out

    @cached_property
    def observed(self) -> np.ndarray:
        return ~np.isnan(self.values)

    @cached_property
    def coords(self) -> np.ndarray:
        return np.array([[lab.x, lab.y] for lab in self.labels], dtype=float).reshape(-1, 2)

    @cached_property
    def buildings(self) -> np.ndarray | None:
        if not self.has_building:
            return None
        return np.array([lab.building for lab in self.labels])

    @cached_property
    def floors(self) -> np.ndarray | None:
        if not self.has_floor:
            return None
        return np.array([lab.floor for lab in self.labels])
