"""Manifest-driven CSV ingestion, cleaning and splitting of fingerprint datasets."""
from __future__ import annotations

import csv
import json
import math
import os
from collections import defaultdict
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .exceptions import ConfigurationError, RowError, SchemaError
from .fingerprint import Fingerprint, GeoLabel, ReferenceFingerprintMap

DEFAULT_REPLICA_WINDOW_S = 300


@dataclass(frozen=True)
class DatasetManifest:
    """Column roles of a fingerprint CSV file.

    The attribute (access point) columns are either listed explicitly in
    ``attribute_columns`` or selected from the header by
    ``attribute_prefix``; :meth:`resolve` turns the latter into the former.
    """

    coord_x_column: str
    coord_y_column: str
    sentinel: float
    attribute_columns: tuple[str, ...] = ()
    attribute_prefix: str | None = None
    building_column: str | None = None
    floor_column: str | None = None
    user_column: str | None = None
    device_column: str | None = None
    timestamp_column: str | None = None
    coordinate_unit: str = "m"
    name: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "attribute_columns", tuple(self.attribute_columns))
        object.__setattr__(self, "sentinel", float(self.sentinel))
        if not self.attribute_columns and not self.attribute_prefix:
            raise ConfigurationError("manifest needs attribute_columns or attribute_prefix")
        roles = [c for c in self.role_columns if c is not None]
        named = list(self.attribute_columns) + roles
        if len(set(named)) != len(named):
            raise ConfigurationError("manifest column names must be distinct")

    @property
    def role_columns(self) -> tuple:
        return (self.coord_x_column, self.coord_y_column, self.building_column,
                self.floor_column, self.user_column, self.device_column, self.timestamp_column)

    def resolve(self, header: Sequence[str]) -> DatasetManifest:
        """Concrete manifest for ``header``: attribute columns made explicit and checked."""
        cols = self.attribute_columns
        if not cols:
            roles = set(self.role_columns)
            cols = tuple(h for h in header if h.startswith(self.attribute_prefix) and h not in roles)
            if not cols:
                raise SchemaError(f"no columns with prefix {self.attribute_prefix!r} in header")
        missing = [c for c in list(cols) + [c for c in self.role_columns if c] if c not in header]
        if missing:
            shown = ", ".join(missing[:5]) + (" ..." if len(missing) > 5 else "")
            raise SchemaError(f"header lacks {len(missing)} manifest column(s): {shown}")
        return replace(self, attribute_columns=cols, attribute_prefix=None)

    @property
    def has_replica_metadata(self) -> bool:
        return None not in (self.user_column, self.device_column, self.timestamp_column)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> DatasetManifest:
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown manifest keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigurationError(f"invalid manifest: {exc}") from None


BUILTIN_MANIFESTS = {
    "ujiindoorloc": DatasetManifest(
        name="ujiindoorloc",
        attribute_columns=tuple(f"WAP{i:03d}" for i in range(1, 521)),
        coord_x_column="LONGITUDE", coord_y_column="LATITUDE",
        building_column="BUILDINGID", floor_column="FLOOR",
        user_column="USERID", device_column="PHONEID", timestamp_column="TIMESTAMP",
        sentinel=100,
    ),
    "alcala2017": DatasetManifest(
        name="alcala2017", attribute_prefix="WAP",
        coord_x_column="X", coord_y_column="Y", sentinel=100,
    ),
    "tampere": DatasetManifest(
        name="tampere", attribute_prefix="WAP",
        coord_x_column="X", coord_y_column="Y", floor_column="FLOOR", sentinel=100,
    ),
    "hil": DatasetManifest(
        name="hil", attribute_prefix="AP",
        coord_x_column="X", coord_y_column="Y", sentinel=-110,
    ),
}


def load_manifest(source: str | os.PathLike) -> DatasetManifest:
    """A built-in manifest by name, or a JSON/YAML manifest file."""
    key = str(source).lower()
    if key in BUILTIN_MANIFESTS:
        return BUILTIN_MANIFESTS[key]
    path = Path(source)
    if not path.exists():
        raise ConfigurationError(
            f"manifest {source!r} is neither a file nor one of {sorted(BUILTIN_MANIFESTS)}")
    text = path.read_text()
    if path.suffix.lower() in (".yaml", ".yml"):
        import yaml

        data = yaml.safe_load(text)
    else:
        data = json.loads(text)
    if not isinstance(data, dict):
        raise ConfigurationError("manifest file must hold a key/value mapping")
    return DatasetManifest.from_dict(data)


@dataclass(frozen=True)
class Record:
    fingerprint: Fingerprint
    label: GeoLabel
    user: str | None = None
    device: str | None = None
    timestamp: float | None = None
    row: int | None = None
    raw: tuple[str, ...] | None = field(default=None, repr=False, compare=False)


@dataclass
class Dataset:
    header: list[str]
    manifest: DatasetManifest
    records: list[Record]

    def with_records(self, records) -> Dataset:
        return Dataset(self.header, self.manifest, list(records))

    def to_rfm(self) -> ReferenceFingerprintMap:
        return to_rfm(self.records)


def to_rfm(records: Sequence[Record]) -> ReferenceFingerprintMap:
    return ReferenceFingerprintMap([r.fingerprint for r in records], [r.label for r in records])


def _float(cell: str, row: int, column: str) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise RowError(row, f"column {column!r}: cannot parse {cell!r} as a number") from None
    if not math.isfinite(value):
        raise RowError(row, f"column {column!r}: non-finite value {cell!r}")
    return value


def _int(cell: str, row: int, column: str) -> int:
    value = _float(cell, row, column)
    if value != int(value):
        raise RowError(row, f"column {column!r}: expected an integer, got {cell!r}")
    return int(value)


def load_dataset(source, manifest: DatasetManifest) -> Dataset:
    """Read a fingerprint CSV. Cells equal to the sentinel are treated as unobserved.

    ``source`` is a path or an open text stream. Row indices in errors and
    in :attr:`Record.row` count data rows from 0.
    """
    if isinstance(source, (str, os.PathLike)):
        with open(source, newline="", encoding="utf-8-sig") as fh:
            return load_dataset(fh, manifest)
    reader = csv.reader(source)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise SchemaError("file is empty") from None
    m = manifest.resolve(header)
    pos = {h: i for i, h in enumerate(header)}
    attr_pos = [pos[c] for c in m.attribute_columns]
    attrs = m.attribute_columns
    sentinel = m.sentinel
    records = []
    for i, row in enumerate(reader):
        if not row:
            continue
        if len(row) != len(header):
            raise RowError(i, f"expected {len(header)} cells, got {len(row)}")
        try:
            values = [float(row[j]) for j in attr_pos]
        except ValueError:
            for j, col in zip(attr_pos, attrs):
                _float(row[j], i, col)
            raise
        fp = Fingerprint({a: v for a, v in zip(attrs, values) if v != sentinel})
        label = GeoLabel(
            x=_float(row[pos[m.coord_x_column]], i, m.coord_x_column),
            y=_float(row[pos[m.coord_y_column]], i, m.coord_y_column),
            building=_int(row[pos[m.building_column]], i, m.building_column) if m.building_column else None,
            floor=_int(row[pos[m.floor_column]], i, m.floor_column) if m.floor_column else None,
        )
        records.append(Record(
            fingerprint=fp,
            label=label,
            user=row[pos[m.user_column]].strip() if m.user_column else None,
            device=row[pos[m.device_column]].strip() if m.device_column else None,
            timestamp=_float(row[pos[m.timestamp_column]], i, m.timestamp_column) if m.timestamp_column else None,
            row=i,
            raw=tuple(row),
        ))
    return Dataset(header, m, records)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    return str(value)


def _render(record: Record, header: Sequence[str], m: DatasetManifest) -> list[str]:
    if record.raw is not None and len(record.raw) == len(header):
        return list(record.raw)
    lab = record.label
    cells = {m.coord_x_column: _fmt(lab.x), m.coord_y_column: _fmt(lab.y)}
    for col, value in ((m.building_column, lab.building), (m.floor_column, lab.floor),
                       (m.user_column, record.user), (m.device_column, record.device),
                       (m.timestamp_column, record.timestamp)):
        if col:
            cells[col] = _fmt(value)
    for a in m.attribute_columns:
        cells[a] = _fmt(record.fingerprint.get(a, m.sentinel))
    return [cells.get(h, "") for h in header]


def export_dataset(path, dataset: Dataset) -> None:
    """Write ``dataset`` as CSV with its original header (atomically)."""
    from .reporting import atomic_writer

    with atomic_writer(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(dataset.header)
        for r in dataset.records:
            w.writerow(_render(r, dataset.header, dataset.manifest))


@dataclass
class CleaningReport:
    n_input: int
    n_invalid_removed: int
    n_after_invalid: int
    n_replica_groups: int | None
    n_unique_kept: int
    seed: int | None
    window_seconds: float | None

    def to_dict(self) -> dict:
        return asdict(self)


def remove_invalid(records: Sequence[Record]) -> tuple[list[Record], dict]:
    """Drop records whose fingerprint is empty (every attribute unobserved)."""
    kept = [r for r in records if len(r.fingerprint) > 0]
    return kept, {"n_input": len(records), "n_invalid_removed": len(records) - len(kept),
                  "n_after_invalid": len(kept)}


def replica_groups(records: Sequence[Record], window_seconds: float) -> list[list[int]]:
    """Indices of records grouped as replicas.

    Records are replicas when they share location (x, y, building, floor),
    user and device, and consecutive timestamps are at most
    ``window_seconds`` apart. Singletons come back as one-element groups.
    """
    by_key = defaultdict(list)
    for i, r in enumerate(records):
        if r.user is None or r.device is None or r.timestamp is None:
            raise ConfigurationError("replica detection needs user, device and timestamp metadata")
        lab = r.label
        by_key[(lab.x, lab.y, lab.building, lab.floor, r.user, r.device)].append(i)
    groups = []
    for members in by_key.values():
        members = sorted(members, key=lambda i: (records[i].timestamp, i))
        current = [members[0]]
        for prev, i in zip(members, members[1:]):
            if records[i].timestamp - records[prev].timestamp <= window_seconds:
                current.append(i)
            else:
                groups.append(current)
                current = [i]
        groups.append(current)
    groups.sort(key=min)
    return groups


def dedup_replicas(records: Sequence[Record], window_seconds: float = DEFAULT_REPLICA_WINDOW_S,
                   seed: int = 0) -> tuple[list[Record], dict]:
    """Keep one randomly chosen record per replica group, preserving input order."""
    groups = replica_groups(records, window_seconds)
    rng = np.random.default_rng(seed)
    keep = set()
    for g in groups:
        keep.add(g[int(rng.integers(len(g)))] if len(g) > 1 else g[0])
    kept = [r for i, r in enumerate(records) if i in keep]
    return kept, {"n_replica_groups": sum(1 for g in groups if len(g) > 1),
                  "n_unique_kept": len(kept), "seed": seed, "window_seconds": window_seconds}


def clean_records(records: Sequence[Record], seed: int = 0,
                  window_seconds: float = DEFAULT_REPLICA_WINDOW_S,
                  dedup: bool = True) -> tuple[list[Record], CleaningReport]:
    """Invalid-sample removal followed (optionally) by replica deduplication."""
    valid, frag = remove_invalid(records)
    if dedup:
        kept, frag2 = dedup_replicas(valid, window_seconds, seed)
    else:
        kept, frag2 = valid, {"n_replica_groups": None, "n_unique_kept": len(valid),
                              "seed": None, "window_seconds": None}
    return kept, CleaningReport(**frag, **frag2)


def split_count(n: int, fraction: float) -> int:
    """``fraction * n`` rounded half-up."""
    return int(math.floor(round(fraction * n, 9) + 0.5))


def train_validation_split(records: Sequence[Record], fraction: float = 0.75,
                           seed: int = 0) -> tuple[list[Record], list[Record]]:
    """Seeded random split; both parts keep the input order."""
    if not 0.0 < fraction < 1.0:
        raise ConfigurationError(f"fraction must lie in (0, 1), got {fraction}")
    n = len(records)
    perm = np.random.default_rng(seed).permutation(n)
    train_idx = set(perm[:split_count(n, fraction)].tolist())
    train = [r for i, r in enumerate(records) if i in train_idx]
    validation = [r for i, r in enumerate(records) if i not in train_idx]
    return train, validation
