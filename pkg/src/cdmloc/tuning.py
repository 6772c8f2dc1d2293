"""Cross-validated grid search over the unshared-attribute weight alpha."""
from __future__ import annotations

import enum
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .compound import CompoundConfig, compound_parts
from .evaluation import SampleOutcome, classification_rates, outcome, rmse
from .exceptions import ConfigurationError, DomainError
from .fingerprint import ReferenceFingerprintMap
from .metrics import finalize_array
from .positioning import locate_from_dissimilarities


class Criterion(str, enum.Enum):
    MIN_MEAN_RMSE = "rmse"
    MAX_MEAN_SUCCESS_RATE = "success"

    @property
    def maximize(self) -> bool:
        return self is Criterion.MAX_MEAN_SUCCESS_RATE


def default_grid() -> list[float]:
    """0.0, 0.1, ..., 3.0."""
    return [i / 10 for i in range(31)]


@dataclass
class TuningSpec:
    base: CompoundConfig
    folds: int = 10
    grid: Sequence[float] = field(default_factory=default_grid)
    criterion: Criterion = Criterion.MIN_MEAN_RMSE
    seed: int = 0
    k: int = 1
    hierarchical: bool | None = None
    stage_k: Sequence[int] | None = None

    def __post_init__(self):
        self.criterion = Criterion(self.criterion)
        self.grid = [float(a) for a in self.grid]
        if self.folds < 2:
            raise ConfigurationError(f"folds must be >= 2, got {self.folds}")
        if not self.grid:
            raise ConfigurationError("alpha grid is empty")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ConfigurationError("alpha grid must be strictly increasing")
        if self.grid[0] < 0:
            raise ConfigurationError("alpha grid values must be >= 0")
        if self.k < 1:
            raise ConfigurationError(f"k must be >= 1, got {self.k}")


@dataclass
class TuningResult:
    per_alpha: dict[float, list[float]]
    best_alpha: float
    best_score: float
    criterion: Criterion
    folds: int

    def mean_scores(self) -> dict[float, float]:
        return {a: float(np.mean(v)) for a, v in self.per_alpha.items()}

    def to_dict(self) -> dict:
        return {
            "criterion": self.criterion.value,
            "folds": self.folds,
            "best_alpha": self.best_alpha,
            "best_score": self.best_score,
            "per_alpha": [{"alpha": a, "scores": s, "mean": float(np.mean(s))}
                          for a, s in self.per_alpha.items()],
        }

    def long_rows(self) -> list[tuple[float, int, float]]:
        return [(a, i, s) for a, scores in self.per_alpha.items() for i, s in enumerate(scores)]


def kfold_partition(n: int, folds: int, seed: int) -> list[np.ndarray]:
    """Seeded random partition of ``range(n)`` into ``folds`` balanced chunks.

    Chunk sizes differ by at most one, larger chunks first. Each chunk is
    returned sorted.
    """
    if folds < 1 or folds > n:
        raise DomainError(f"need 1 <= folds <= n, got folds={folds}, n={n}")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(chunk) for chunk in np.array_split(perm, folds)]


def _fold_score(outcomes: list[SampleOutcome], criterion: Criterion) -> float:
    if criterion is Criterion.MAX_MEAN_SUCCESS_RATE:
        return classification_rates(outcomes)[0]
    return rmse(o.error_m for o in outcomes)


def _evaluate_fold(rfm: ReferenceFingerprintMap, train_idx: np.ndarray, held_idx: np.ndarray,
                   spec: TuningSpec, hierarchical: bool) -> list[float]:
    """Criterion value for every alpha in the grid on one held-out fold."""
    train = rfm.subset(train_idx)
    if spec.k > len(train):
        raise DomainError(f"k={spec.k} exceeds the {len(train)} training records of a fold")
    base = spec.base
    parts = [compound_parts(rfm.fingerprints[i], train, base.kernel, base.gamma) for i in held_idx]
    truths = [rfm.labels[i] for i in held_idx]
    scores = []
    for alpha in spec.grid:
        outs = []
        for p, truth in zip(parts, truths):
            d = finalize_array(base.kernel, p.accumulate(base.variant, alpha, base.epsilon))
            est = locate_from_dissimilarities(d, train, spec.k, hierarchical, spec.stage_k)
            outs.append(outcome(est, truth))
        scores.append(_fold_score(outs, spec.criterion))
    return scores


def cross_validate_alpha(rfm: ReferenceFingerprintMap, spec: TuningSpec) -> TuningResult:
    """k-fold cross-validation of every alpha in ``spec.grid``.

    Positioning is hierarchical whenever the map carries building and floor
    labels, unless ``spec.hierarchical`` says otherwise. The best alpha
    minimizes mean fold RMSE or maximizes mean fold success rate; ties go
    to the smaller alpha.
    """
    labelled = rfm.has_building and rfm.has_floor
    if spec.criterion is Criterion.MAX_MEAN_SUCCESS_RATE and not labelled:
        raise ConfigurationError("success-rate criterion needs building and floor labels")
    hierarchical = labelled if spec.hierarchical is None else spec.hierarchical
    if hierarchical and not labelled:
        raise ConfigurationError("hierarchical positioning needs building and floor labels")
    if any(len(f) == 0 for f in rfm.fingerprints):
        raise DomainError("reference map contains empty fingerprints; clean it first")

    per_alpha: dict[float, list[float]] = {a: [] for a in spec.grid}
    all_idx = np.arange(len(rfm))
    for held in kfold_partition(len(rfm), spec.folds, spec.seed):
        train_idx = np.setdiff1d(all_idx, held, assume_unique=True)
        for alpha, score in zip(spec.grid, _evaluate_fold(rfm, train_idx, held, spec, hierarchical)):
            per_alpha[alpha].append(score)

    best_alpha, best_score = None, None
    for alpha in spec.grid:
        score = float(np.mean(per_alpha[alpha]))
        if best_score is None:
            better = True
        elif spec.criterion.maximize:
            better = score > best_score
        else:
            better = score < best_score
        if better:
            best_alpha, best_score = alpha, score
    return TuningResult(per_alpha, best_alpha, best_score, spec.criterion, spec.folds)
