"""Positioning error statistics and evaluation reports."""
from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import asdict, dataclass, field

import numpy as np

from .exceptions import DomainError
from .fingerprint import GeoLabel

DEFAULT_PERCENTILES = (0.5, 0.8)


@dataclass(frozen=True)
class SampleOutcome:
    error_m: float
    building_correct: bool | None = None
    floor_correct: bool | None = None


def positioning_error(est, truth: GeoLabel) -> float:
    """Planar Euclidean distance between an estimate and the ground truth."""
    return math.hypot(est.x - truth.x, est.y - truth.y)


def outcome(est, truth: GeoLabel) -> SampleOutcome:
    building_ok = None if truth.building is None else est.building == truth.building
    floor_ok = None if truth.floor is None else est.floor == truth.floor
    return SampleOutcome(positioning_error(est, truth), building_ok, floor_ok)


def _nonempty(errors) -> np.ndarray:
    arr = np.asarray(list(errors), dtype=float)
    if arr.size == 0:
        raise DomainError("error list is empty")
    return arr


def rmse(errors: Iterable[float]) -> float:
    arr = _nonempty(errors)
    return math.sqrt(float(np.mean(arr * arr)))


def ecdf_points(errors: Iterable[float]) -> list[tuple[float, float]]:
    """Support points ``(value, fraction <= value)`` of the empirical CDF."""
    arr = np.sort(_nonempty(errors))
    values, counts = np.unique(arr, return_counts=True)
    cum = np.cumsum(counts)
    n = arr.size
    return [(float(v), float(c) / n) for v, c in zip(values, cum)]


def percentile(errors: Iterable[float], q: float) -> float:
    """Nearest-rank percentile.

    Returns the ``ceil(q * n)``-th smallest value (the smallest for
    ``q == 0``). For ``q == 0.5`` and an even sample size the mean of the
    two middle values is returned instead.
    """
    if not 0.0 <= q <= 1.0:
        raise DomainError(f"q must lie in [0, 1], got {q}")
    arr = np.sort(_nonempty(errors))
    n = arr.size
    if q == 0.5 and n % 2 == 0:
        return float((arr[n // 2 - 1] + arr[n // 2]) / 2)
    # rounding guards against q * n landing a hair above an integer
    rank = max(1, math.ceil(round(q * n, 9)))
    return float(arr[rank - 1])


def classification_rates(outcomes: Sequence[SampleOutcome]) -> tuple[float, float]:
    """``(success_rate, building_accuracy)``; success needs building and floor right."""
    if not outcomes:
        raise DomainError("no outcomes")
    if any(o.building_correct is None or o.floor_correct is None for o in outcomes):
        raise DomainError("outcomes lack building/floor correctness")
    n = len(outcomes)
    success = sum(1 for o in outcomes if o.building_correct and o.floor_correct)
    building = sum(1 for o in outcomes if o.building_correct)
    return success / n, building / n


@dataclass
class EvaluationReport:
    n_samples: int
    rmse_m: float
    mean_m: float
    std_m: float
    median_m: float
    max_m: float
    percentiles: dict[str, float]
    success_rate: float | None
    building_accuracy: float | None
    ecdf: list[tuple[float, float]] = field(repr=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ecdf"] = [list(p) for p in self.ecdf]
        return d


def summarize(outcomes: Sequence[SampleOutcome],
              percentiles: Sequence[float] = DEFAULT_PERCENTILES) -> EvaluationReport:
    """Aggregate per-sample outcomes. ``std_m`` is the population standard deviation."""
    errors = _nonempty(o.error_m for o in outcomes)
    labelled = all(o.building_correct is not None and o.floor_correct is not None for o in outcomes)
    success, building = classification_rates(outcomes) if labelled else (None, None)
    return EvaluationReport(
        n_samples=int(errors.size),
        rmse_m=rmse(errors),
        mean_m=float(errors.mean()),
        std_m=float(errors.std()),
        median_m=percentile(errors, 0.5),
        max_m=float(errors.max()),
        percentiles={f"{q:g}": percentile(errors, q) for q in percentiles},
        success_rate=success,
        building_accuracy=building,
        ecdf=ecdf_points(errors),
    )


def evaluate(estimates, truths: Sequence[GeoLabel],
             percentiles: Sequence[float] = DEFAULT_PERCENTILES):
    """Outcomes and summary report for paired estimates and ground truths."""
    if len(estimates) != len(truths):
        raise DomainError(f"{len(estimates)} estimates but {len(truths)} truths")
    outs = [outcome(e, t) for e, t in zip(estimates, truths)]
    return outs, summarize(outs, percentiles)
