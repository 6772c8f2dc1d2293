"""k-nearest-neighbor positioning over a reference fingerprint map."""
from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .compound import CompoundConfig, batch_dissimilarity
from .exceptions import DomainError
from .fingerprint import ReferenceFingerprintMap, densify
from .metrics import KernelId, parse_kernel, vector_metric_rows


@dataclass(frozen=True)
class CompoundBackend:
    """Sparse compound-measure path."""

    config: CompoundConfig
    apply_finalize: bool = True

    def dissimilarities(self, query: Mapping, rfm: ReferenceFingerprintMap) -> np.ndarray:
        return batch_dissimilarity(query, rfm, self.config, self.apply_finalize)

    @property
    def label(self) -> str:
        c = self.config
        return f"{c.variant.value}-{c.kernel}"


@dataclass(frozen=True)
class BaselineBackend:
    """Vector-metric path over gamma-filled equal-length vectors.

    ``universe`` defaults to the attribute universe of the RFM being
    searched; query attributes outside it are ignored.
    """

    kernel: KernelId
    gamma: float = 100.0
    universe: tuple | None = None

    def __post_init__(self):
        if not isinstance(self.kernel, KernelId):
            object.__setattr__(self, "kernel", parse_kernel(self.kernel))

    def dissimilarities(self, query: Mapping, rfm: ReferenceFingerprintMap) -> np.ndarray:
        universe = self.universe if self.universe is not None else rfm.universe
        if universe == rfm.universe:
            dense = _dense_rfm(rfm, self.gamma)
        else:
            dense = np.array([densify(f, universe, self.gamma) for f in rfm.fingerprints])
        q = np.asarray(densify(query, universe, self.gamma))
        return vector_metric_rows(self.kernel, dense, q, self.gamma)

    @property
    def label(self) -> str:
        return f"baseline-{self.kernel}"


Backend = CompoundBackend | BaselineBackend


def _dense_rfm(rfm: ReferenceFingerprintMap, gamma: float) -> np.ndarray:
    caches = rfm.__dict__.setdefault("_cdmloc_dense_cache", {})
    if gamma not in caches:
        caches[gamma] = np.where(rfm.observed, rfm.values, gamma)
    return caches[gamma]


@dataclass
class PositionEstimate:
    x: float
    y: float
    building: int | None = None
    floor: int | None = None
    neighbor_indices: list[int] = field(default_factory=list)
    neighbor_dissimilarities: list[float] = field(default_factory=list)


def _check(rfm: ReferenceFingerprintMap, k: int):
    if len(rfm) == 0:
        raise DomainError("reference fingerprint map is empty")
    if k < 1 or k > len(rfm):
        raise DomainError(f"k must be in [1, {len(rfm)}], got {k}")


def smallest(d: np.ndarray, k: int, candidates: np.ndarray | None = None) -> np.ndarray:
    """Indices of the ``k`` smallest entries of ``d``; ties go to the smaller index."""
    if candidates is None:
        order = np.argsort(d, kind="stable")
        return order[:k]
    sub = np.argsort(d[candidates], kind="stable")
    return candidates[sub[:k]]


def rank_neighbors(query: Mapping, rfm: ReferenceFingerprintMap, backend: Backend,
                   k: int) -> list[tuple[int, float]]:
    """The ``k`` nearest records as ``(index, dissimilarity)``, ascending."""
    _check(rfm, k)
    d = backend.dissimilarities(query, rfm)
    return [(int(i), float(d[i])) for i in smallest(d, k)]


def _vote(labels: np.ndarray) -> int:
    # ``labels`` is in ascending-dissimilarity order; among tied majorities
    # the label seen first (i.e. nearest) wins.
    values, first, counts = np.unique(labels, return_index=True, return_counts=True)
    best = counts.max()
    tied = np.flatnonzero(counts == best)
    return values[tied[np.argmin(first[tied])]].item()


def locate_from_dissimilarities(d: np.ndarray, rfm: ReferenceFingerprintMap, k: int,
                                hierarchical: bool = False,
                                stage_k: Sequence[int] | None = None) -> PositionEstimate:
    """Position estimate from a precomputed dissimilarity row ``d``.

    The flat estimate averages the coordinates of the ``k`` nearest
    records. The hierarchical estimate votes the building among the
    ``k`` nearest records, then the floor among the nearest records of
    that building, then averages the nearest records on that floor.
    ``stage_k`` overrides ``k`` per stage as ``(building, floor, position)``;
    stages clamp ``k`` to the number of records available.
    """
    coords = rfm.coords
    if not hierarchical:
        idx = smallest(d, k)
        xy = coords[idx].mean(axis=0)
        return PositionEstimate(float(xy[0]), float(xy[1]), None, None,
                                [int(i) for i in idx], [float(d[i]) for i in idx])
    if not (rfm.has_building and rfm.has_floor):
        raise DomainError("hierarchical positioning needs building and floor labels")
    kb, kf, kp = stage_k if stage_k is not None else (k, k, k)
    buildings, floors = rfm.buildings, rfm.floors
    all_idx = np.arange(len(rfm))
    nearest = smallest(d, min(kb, len(rfm)))
    building = _vote(buildings[nearest])
    in_building = all_idx[buildings == building]
    nearest = smallest(d, min(kf, len(in_building)), in_building)
    floor = _vote(floors[nearest])
    on_floor = in_building[floors[in_building] == floor]
    idx = smallest(d, min(kp, len(on_floor)), on_floor)
    xy = coords[idx].mean(axis=0)
    return PositionEstimate(float(xy[0]), float(xy[1]), building, floor,
                            [int(i) for i in idx], [float(d[i]) for i in idx])


def knn_locate(query: Mapping, rfm: ReferenceFingerprintMap, backend: Backend,
               k: int) -> PositionEstimate:
    """Unweighted mean of the coordinates of the ``k`` nearest records."""
    _check(rfm, k)
    if len(query) == 0:
        raise DomainError("cannot locate an empty fingerprint")
    return locate_from_dissimilarities(backend.dissimilarities(query, rfm), rfm, k)


def hierarchical_locate(query: Mapping, rfm: ReferenceFingerprintMap, backend: Backend,
                        k: int, stage_k: Sequence[int] | None = None) -> PositionEstimate:
    """Building, then floor, then planar position (see :func:`locate_from_dissimilarities`)."""
    _check(rfm, k)
    if len(query) == 0:
        raise DomainError("cannot locate an empty fingerprint")
    return locate_from_dissimilarities(backend.dissimilarities(query, rfm), rfm, k,
                                       hierarchical=True, stage_k=stage_k)


def locate_all(queries: Sequence[Mapping], rfm: ReferenceFingerprintMap, backend: Backend,
               k: int, hierarchical: bool = False,
               stage_k: Sequence[int] | None = None) -> list[PositionEstimate]:
    locate = hierarchical_locate if hierarchical else knn_locate
    if hierarchical:
        return [locate(q, rfm, backend, k, stage_k) for q in queries]
    return [locate(q, rfm, backend, k) for q in queries]
