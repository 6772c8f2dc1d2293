"""scikit-learn compatible wrappers around the positioning pipeline."""
from __future__ import annotations

from collections.abc import Mapping

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .compound import CompoundConfig
from .evaluation import rmse
from .exceptions import DomainError
from .fingerprint import Fingerprint, GeoLabel, ReferenceFingerprintMap, densify
from .metrics import parse_kernel
from .positioning import BaselineBackend, CompoundBackend, locate_from_dissimilarities, smallest


def check_fingerprints(X, missing_value=None, attribute_names=None) -> list[Fingerprint]:
    """Coerce ``X`` into a list of :class:`Fingerprint`.

    ``X`` may be a sequence of mappings (sparse input) or a 2-d numeric
    array / DataFrame whose cells equal to ``missing_value`` are
    unobserved. Dense columns are named by ``attribute_names``, the
    DataFrame columns, or their integer position.
    """
    if hasattr(X, "columns") and hasattr(X, "to_numpy"):
        attribute_names = list(X.columns) if attribute_names is None else attribute_names
        X = X.to_numpy()
    if isinstance(X, np.ndarray) or (len(X) and not isinstance(X[0], Mapping)):
        arr = np.asarray(X, dtype=float)
        if arr.ndim != 2:
            raise DomainError(f"dense fingerprints must be 2-d, got shape {arr.shape}")
        names = list(range(arr.shape[1])) if attribute_names is None else list(attribute_names)
        if len(names) != arr.shape[1]:
            raise DomainError(f"{len(names)} attribute names for {arr.shape[1]} columns")
        return [Fingerprint(zip(names, row), missing=missing_value) for row in arr]
    return [f if isinstance(f, Fingerprint) and missing_value is None
            else Fingerprint(f, missing=missing_value) for f in X]


def check_targets(y, n: int) -> np.ndarray:
    """``(n, 2)`` planar targets or ``(n, 4)`` as ``x, y, building, floor``."""
    y = np.asarray(y, dtype=float)
    if y.ndim != 2 or y.shape[1] not in (2, 4):
        raise DomainError(f"targets must have shape (n, 2) or (n, 4), got {y.shape}")
    if y.shape[0] != n:
        raise DomainError(f"{n} samples but {y.shape[0]} targets")
    if not np.isfinite(y).all():
        raise DomainError("targets must be finite")
    return y


class FingerprintSparsifier(TransformerMixin, BaseEstimator):
    """Turn a dense RSS matrix into sparse fingerprints, dropping ``missing_value`` cells."""

    def __init__(self, missing_value=100.0, attribute_names=None):
        self.missing_value = missing_value
        self.attribute_names = attribute_names

    def fit(self, X, y=None):
        if hasattr(X, "columns"):
            self.attribute_names_ = list(X.columns)
        elif self.attribute_names is not None:
            self.attribute_names_ = list(self.attribute_names)
        else:
            self.attribute_names_ = list(range(np.asarray(X).shape[1]))
        self.n_features_in_ = len(self.attribute_names_)
        return self

    def transform(self, X):
        check_is_fitted(self)
        return check_fingerprints(X, self.missing_value, self.attribute_names_)


class Densifier(TransformerMixin, BaseEstimator):
    """Project fingerprints onto the attribute universe seen in ``fit``, filling gaps with ``gamma``."""

    def __init__(self, gamma=100.0):
        self.gamma = gamma

    def fit(self, X, y=None):
        fps = check_fingerprints(X)
        self.universe_ = tuple(sorted(set().union(*fps)))
        if not self.universe_:
            raise DomainError("no attributes observed in the training fingerprints")
        return self

    def transform(self, X):
        check_is_fitted(self)
        return np.array([densify(f, self.universe_, self.gamma) for f in check_fingerprints(X)])


class CompoundKNNLocator(BaseEstimator):
    """k-nearest-neighbor positioning with a compound or vector dissimilarity.

    Parameters
    ----------
    variant : {"cdm", "acdm", "rcdm", "baseline"}
        Compound measure, or ``"baseline"`` for the vector metric over
        gamma-filled vectors.
    kernel : str
        One of the eight kernel names, e.g. ``"lorentzian"``.
    alpha, gamma, epsilon : float
        Unshared-attribute weight, missing-value stand-in and the guard of
        the relative weights.
    p : float
        Minkowski order.
    n_neighbors : int
    hierarchical : bool or "auto"
        Building/floor/position staging. ``"auto"`` enables it when
        targets carry building and floor columns.
    missing_value : float, optional
        Cell value marking unobserved attributes in dense input.

    Targets are ``(n, 2)`` planar coordinates or ``(n, 4)`` rows of
    ``x, y, building, floor``; :meth:`predict` returns the same layout.
    """

    def __init__(self, variant="rcdm", kernel="lorentzian", alpha=1.0, gamma=100.0,
                 epsilon=1e-6, p=2.0, n_neighbors=1, hierarchical="auto", missing_value=None):
        self.variant = variant
        self.kernel = kernel
        self.alpha = alpha
        self.gamma = gamma
        self.epsilon = epsilon
        self.p = p
        self.n_neighbors = n_neighbors
        self.hierarchical = hierarchical
        self.missing_value = missing_value

    def _backend(self):
        kernel = parse_kernel(self.kernel, self.p)
        if self.variant == "baseline":
            return BaselineBackend(kernel, float(self.gamma))
        return CompoundBackend(CompoundConfig(self.variant, kernel, float(self.alpha),
                                              float(self.gamma), float(self.epsilon)))

    def fit(self, X, y):
        fps = check_fingerprints(X, self.missing_value)
        y = check_targets(y, len(fps))
        if any(len(f) == 0 for f in fps):
            raise DomainError("training fingerprints must be non-empty")
        if y.shape[1] == 4:
            labels = [GeoLabel(r[0], r[1], int(r[2]), int(r[3])) for r in y]
        else:
            labels = [GeoLabel(r[0], r[1]) for r in y]
        if self.hierarchical == "auto":
            self.hierarchical_ = y.shape[1] == 4
        else:
            self.hierarchical_ = bool(self.hierarchical)
            if self.hierarchical_ and y.shape[1] != 4:
                raise DomainError("hierarchical positioning needs (n, 4) targets")
        if not 1 <= self.n_neighbors <= len(fps):
            raise DomainError(f"n_neighbors must be in [1, {len(fps)}]")
        self.rfm_ = ReferenceFingerprintMap(fps, labels)
        self.backend_ = self._backend()
        self.n_targets_ = y.shape[1]
        return self

    def _estimates(self, X):
        check_is_fitted(self)
        for f in check_fingerprints(X, self.missing_value):
            if len(f) == 0:
                raise DomainError("cannot locate an empty fingerprint")
            d = self.backend_.dissimilarities(f, self.rfm_)
            yield locate_from_dissimilarities(d, self.rfm_, self.n_neighbors, self.hierarchical_)

    def predict(self, X):
        rows = []
        for est in self._estimates(X):
            if self.n_targets_ == 4:
                b = est.building if est.building is not None else np.nan
                fl = est.floor if est.floor is not None else np.nan
                rows.append([est.x, est.y, b, fl])
            else:
                rows.append([est.x, est.y])
        return np.asarray(rows, dtype=float).reshape(-1, self.n_targets_)

    def kneighbors(self, X, n_neighbors=None):
        """Dissimilarities and indices of the nearest reference records, ascending."""
        check_is_fitted(self)
        k = self.n_neighbors if n_neighbors is None else n_neighbors
        dist, ind = [], []
        for f in check_fingerprints(X, self.missing_value):
            d = self.backend_.dissimilarities(f, self.rfm_)
            idx = smallest(d, k)
            ind.append(idx)
            dist.append(d[idx])
        return np.asarray(dist), np.asarray(ind)

    def score(self, X, y):
        """Negative planar RMSE, so that larger is better."""
        pred = self.predict(X)
        y = check_targets(y, len(pred))
        return -rmse(np.hypot(pred[:, 0] - y[:, 0], pred[:, 1] - y[:, 1]))
