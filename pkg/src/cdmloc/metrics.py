"""Distance kernels: per-pair terms, finalization and whole-vector metrics.

Each kernel has two uses. Inside a compound measure it contributes one
``pair_term`` per attribute, and the accumulated sum is passed through
``finalize`` (square root for Clark, p-th root for Minkowski, identity
otherwise). For the equal-length baseline it is evaluated as a vector
metric with :func:`vector_metric`.
"""
from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError

KERNEL_NAMES = (
    "lorentzian",
    "hamming",
    "jaccard",
    "wavehedges",
    "canberra",
    "clark",
    "cityblock",
    "minkowski",
)

# Kernels whose vector metric is the plain sum of pair terms.
ADDITIVE_KERNELS = ("lorentzian", "cityblock", "wavehedges", "canberra")
ROOT_KERNELS = ("clark", "minkowski")


@dataclass(frozen=True)
class KernelId:
    """A kernel name plus the Minkowski order ``p`` (ignored by the others)."""

    name: str
    p: float = 2.0

    def __post_init__(self):
        if self.name not in KERNEL_NAMES:
            raise DomainError(f"unknown kernel {self.name!r}; expected one of {KERNEL_NAMES}")
        if not (self.p > 0 and math.isfinite(self.p)):
            raise DomainError(f"Minkowski order must be a positive finite real, got {self.p}")

    def __str__(self):
        if self.name == "minkowski":
            return f"minkowski(p={self.p:g})"
        return self.name


def parse_kernel(name: str | KernelId, p: float | None = None) -> KernelId:
    """Build a :class:`KernelId` from a CLI-style name such as ``"wavehedges"``."""
    if isinstance(name, KernelId):
        return name if p is None else KernelId(name.name, float(p))
    key = str(name).strip().lower().replace("_", "").replace("-", "").replace(" ", "")
    aliases = {"lor": "lorentzian", "ham": "hamming", "jac": "jaccard", "wh": "wavehedges",
               "can": "canberra", "cla": "clark", "cb": "cityblock", "manhattan": "cityblock",
               "min": "minkowski"}
    key = aliases.get(key, key)
    return KernelId(key, 2.0 if p is None else float(p))


def pair_term(kernel: KernelId, x: float, y: float) -> float:
    """Contribution of a single attribute pair to a compound sum."""
    if not (math.isfinite(x) and math.isfinite(y)):
        raise DomainError(f"pair_term needs finite inputs, got ({x}, {y})")
    diff = abs(x - y)
    name = kernel.name
    if name == "lorentzian":
        return math.log1p(diff)
    if name in ("hamming", "jaccard"):
        return 0.0 if x == y else 1.0
    if name == "wavehedges":
        den = max(abs(x), abs(y))
        return 0.0 if den == 0 else diff / den
    if name in ("canberra", "clark"):
        den = abs(x) + abs(y)
        r = 0.0 if den == 0 else diff / den
        return r * r if name == "clark" else r
    if name == "cityblock":
        return diff
    return diff ** kernel.p


def finalize(kernel: KernelId, s: float) -> float:
    if s < 0:
        raise DomainError(f"accumulated sum must be non-negative, got {s}")
    if kernel.name == "clark":
        return math.sqrt(s)
    if kernel.name == "minkowski":
        return s ** (1.0 / kernel.p)
    return s


def pair_terms(kernel: KernelId, x, y) -> np.ndarray:
    """Elementwise :func:`pair_term` over broadcastable arrays (no finiteness check)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    diff = np.abs(x - y)
    name = kernel.name
    with np.errstate(divide="ignore", invalid="ignore"):
        if name == "lorentzian":
            return np.log1p(diff)
        if name in ("hamming", "jaccard"):
            return (x != y).astype(float)
        if name == "wavehedges":
            den = np.maximum(np.abs(x), np.abs(y))
            return np.where(den == 0, 0.0, diff / den)
        if name in ("canberra", "clark"):
            den = np.abs(x) + np.abs(y)
            r = np.where(den == 0, 0.0, diff / den)
            return r * r if name == "clark" else r
        if name == "cityblock":
            return diff
        return diff ** kernel.p


def finalize_array(kernel: KernelId, s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if kernel.name == "clark":
        return np.sqrt(s)
    if kernel.name == "minkowski":
        return s ** (1.0 / kernel.p)
    return s


def vector_metric(kernel: KernelId, x: Sequence[float], y: Sequence[float], gamma: float) -> float:
    """Whole-vector distance between two equal-length vectors.

    Hamming is normalized by the dimension. Jaccard only counts positions
    where at least one side differs from ``gamma`` and is 0 when no such
    position exists.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DomainError(f"vectors must be 1-d and equal length, got {x.shape} and {y.shape}")
    if x.size == 0:
        raise DomainError("vectors must be non-empty")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise DomainError("vector_metric needs finite inputs")
    return float(vector_metric_rows(kernel, x[None, :], y, gamma)[0])


def vector_metric_rows(kernel: KernelId, rows: np.ndarray, y: np.ndarray, gamma: float) -> np.ndarray:
    """:func:`vector_metric` of every row of ``rows`` against the vector ``y``."""
    rows = np.asarray(rows, dtype=float)
    y = np.asarray(y, dtype=float)
    d = rows.shape[1]
    diff = np.abs(rows - y)
    name = kernel.name
    with np.errstate(divide="ignore", invalid="ignore"):
        if name == "lorentzian":
            return np.log(1.0 + diff).sum(axis=1)
        if name == "hamming":
            return (rows != y).sum(axis=1) / d
        if name == "jaccard":
            present = (rows != gamma) | (y != gamma)
            num = ((rows != y) & present).sum(axis=1)
            den = present.sum(axis=1)
            return np.where(den == 0, 0.0, num / np.maximum(den, 1))
        if name == "wavehedges":
            den = np.maximum(np.abs(rows), np.abs(y))
            return np.where(den == 0, 0.0, diff / den).sum(axis=1)
        if name == "canberra":
            den = np.abs(rows) + np.abs(y)
            return np.where(den == 0, 0.0, diff / den).sum(axis=1)
        if name == "clark":
            den = np.abs(rows) + np.abs(y)
            return np.sqrt((np.where(den == 0, 0.0, diff / den) ** 2).sum(axis=1))
        if name == "cityblock":
            return diff.sum(axis=1)
        return (diff ** kernel.p).sum(axis=1) ** (1.0 / kernel.p)
