"""Compound dissimilarity measures for sparse fingerprints.

All three variants split two fingerprints into shared attributes and the
attributes exclusive to either side. Shared attributes contribute the
kernel's pair term on both values; exclusive attributes contribute the pair
term of their value against ``gamma``, scaled by ``alpha``:

* ``cdm``   plain sum,
* ``acdm``  the ``cdm`` sum divided by the number of attributes in the union,
* ``rcdm``  each exclusive side additionally weighted by
  ``n_exclusive / (n_shared + epsilon)``.

The kernel's finalization (Clark square root, Minkowski p-th root) is
applied once to the whole accumulated sum.
"""
from __future__ import annotations

import enum
import math
from collections.abc import Mapping
from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import DomainError
from .fingerprint import ReferenceFingerprintMap
from .metrics import KernelId, finalize, finalize_array, pair_term, pair_terms, parse_kernel


class Variant(str, enum.Enum):
    CDM = "cdm"
    ACDM = "acdm"
    RCDM = "rcdm"


@dataclass(frozen=True)
class CompoundConfig:
    """Measure variant and hyperparameters."""

    variant: Variant = Variant.RCDM
    kernel: KernelId = field(default_factory=lambda: KernelId("lorentzian"))
    alpha: float = 1.0
    gamma: float = 100.0
    epsilon: float = 1e-6

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if not isinstance(self.kernel, KernelId):
            object.__setattr__(self, "kernel", parse_kernel(self.kernel))
        if not (self.alpha >= 0 and math.isfinite(self.alpha)):
            raise DomainError(f"alpha must be a finite real >= 0, got {self.alpha}")
        if not math.isfinite(self.gamma):
            raise DomainError("gamma must be finite")
        if not (self.epsilon > 0):
            raise DomainError(f"epsilon must be > 0, got {self.epsilon}")

    def with_alpha(self, alpha: float) -> CompoundConfig:
        return replace(self, alpha=float(alpha))

    def to_dict(self) -> dict:
        return {"variant": self.variant.value, "kernel": self.kernel.name, "p": self.kernel.p,
                "alpha": self.alpha, "gamma": self.gamma, "epsilon": self.epsilon}


def _parts(a: Mapping, b: Mapping, cfg: CompoundConfig):
    k, g = cfg.kernel, cfg.gamma
    shared = a_only = b_only = 0.0
    n_shared = 0
    for attr, v in a.items():
        if attr in b:
            shared += pair_term(k, v, b[attr])
            n_shared += 1
        else:
            a_only += pair_term(k, v, g)
    for attr, v in b.items():
        if attr not in a:
            b_only += pair_term(k, v, g)
    return shared, a_only, b_only, n_shared, len(a) - n_shared, len(b) - n_shared


def _check_variant(cfg: CompoundConfig, expected: Variant):
    if cfg.variant is not expected:
        raise DomainError(f"configuration variant is {cfg.variant.value}, expected {expected.value}")


def compound_sum(a: Mapping, b: Mapping, cfg: CompoundConfig) -> float:
    """Accumulated (pre-finalization) sum for ``cfg.variant``."""
    shared, ua, ub, n_s, n_a, n_b = _parts(a, b, cfg)
    if cfg.variant is Variant.RCDM:
        den = n_s + cfg.epsilon
        return shared + cfg.alpha * ((n_a / den) * ua + (n_b / den) * ub)
    s = shared + cfg.alpha * (ua + ub)
    if cfg.variant is Variant.ACDM:
        n_union = n_s + n_a + n_b
        return s / n_union if n_union else 0.0
    return s


def cdm(a: Mapping, b: Mapping, cfg: CompoundConfig) -> float:
    _check_variant(cfg, Variant.CDM)
    return finalize(cfg.kernel, compound_sum(a, b, cfg))


def acdm(a: Mapping, b: Mapping, cfg: CompoundConfig) -> float:
    _check_variant(cfg, Variant.ACDM)
    return finalize(cfg.kernel, compound_sum(a, b, cfg))


def rcdm(a: Mapping, b: Mapping, cfg: CompoundConfig) -> float:
    _check_variant(cfg, Variant.RCDM)
    return finalize(cfg.kernel, compound_sum(a, b, cfg))


def dissimilarity(a: Mapping, b: Mapping, cfg: CompoundConfig) -> float:
    """Dispatch to :func:`cdm`, :func:`acdm` or :func:`rcdm` by ``cfg.variant``."""
    return {Variant.CDM: cdm, Variant.ACDM: acdm, Variant.RCDM: rcdm}[cfg.variant](a, b, cfg)


@dataclass
class CompoundParts:
    """Per-record components of a compound measure between one query and an RFM.

    ``shared``, ``query_only`` and ``record_only`` are kernel sums over the
    respective attribute sets; the ``n_*`` arrays hold the set sizes. The
    components do not depend on ``alpha``, so one instance serves a whole
    alpha grid.
    """

    shared: np.ndarray
    query_only: np.ndarray
    record_only: np.ndarray
    n_shared: np.ndarray
    n_query_only: np.ndarray
    n_record_only: np.ndarray

    def accumulate(self, variant: Variant, alpha: float, epsilon: float) -> np.ndarray:
        if variant is Variant.RCDM:
            den = self.n_shared + epsilon
            return self.shared + alpha * (
                (self.n_query_only / den) * self.query_only
                + (self.n_record_only / den) * self.record_only
            )
        s = self.shared + alpha * (self.query_only + self.record_only)
        if variant is Variant.ACDM:
            n_union = self.n_shared + self.n_query_only + self.n_record_only
            return np.where(n_union > 0, s / np.maximum(n_union, 1), 0.0)
        return s


class _KernelCache:
    """Per-(rfm, kernel, gamma) arrays reused across queries."""

    def __init__(self, rfm: ReferenceFingerprintMap, kernel: KernelId, gamma: float):
        values = rfm.values
        observed = rfm.observed
        self.record_terms = np.where(observed, pair_terms(kernel, np.nan_to_num(values), gamma), 0.0)
        self.n_record = observed.sum(axis=1).astype(float)


_CACHE_ATTR = "_cdmloc_kernel_cache"


def _kernel_cache(rfm: ReferenceFingerprintMap, kernel: KernelId, gamma: float) -> _KernelCache:
    caches = rfm.__dict__.setdefault(_CACHE_ATTR, {})
    key = (kernel, float(gamma))
    if key not in caches:
        caches[key] = _KernelCache(rfm, kernel, gamma)
    return caches[key]


def compound_parts(query: Mapping, rfm: ReferenceFingerprintMap, kernel: KernelId,
                   gamma: float) -> CompoundParts:
    """Vectorized components of the compound measure between ``query`` and every record."""
    cache = _kernel_cache(rfm, kernel, gamma)
    col = rfm.attribute_index
    n = len(rfm)
    known_cols, known_vals, extra_vals = [], [], []
    for attr, v in query.items():
        j = col.get(attr)
        if j is None:
            extra_vals.append(v)
        else:
            known_cols.append(j)
            known_vals.append(v)
    extra = pair_terms(kernel, np.asarray(extra_vals, dtype=float), gamma).sum() if extra_vals else 0.0
    if known_cols:
        cols = np.asarray(known_cols)
        qv = np.asarray(known_vals, dtype=float)
        obs = rfm.observed[:, cols]
        vals = np.nan_to_num(rfm.values[:, cols])
        shared = np.where(obs, pair_terms(kernel, vals, qv), 0.0).sum(axis=1)
        q_terms = pair_terms(kernel, qv, gamma)
        query_only = (~obs) @ q_terms + extra
        not_query = np.ones(len(rfm.universe))
        not_query[cols] = 0.0
        record_only = cache.record_terms @ not_query
        n_shared = obs.sum(axis=1).astype(float)
    else:
        shared = np.zeros(n)
        query_only = np.full(n, float(extra))
        record_only = cache.record_terms.sum(axis=1)
        n_shared = np.zeros(n)
    return CompoundParts(
        shared=shared,
        query_only=query_only,
        record_only=record_only,
        n_shared=n_shared,
        n_query_only=len(query) - n_shared,
        n_record_only=cache.n_record - n_shared,
    )


def batch_dissimilarity(query: Mapping, rfm: ReferenceFingerprintMap, cfg: CompoundConfig,
                        apply_finalize: bool = True) -> np.ndarray:
    """Dissimilarity between ``query`` and every record of ``rfm``."""
    parts = compound_parts(query, rfm, cfg.kernel, cfg.gamma)
    acc = parts.accumulate(cfg.variant, cfg.alpha, cfg.epsilon)
    return finalize_array(cfg.kernel, acc) if apply_finalize else acc
