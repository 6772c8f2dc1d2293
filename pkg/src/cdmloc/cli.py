"""Command-line front end: clean, split, tune, evaluate, compare, ecdf.

Every subcommand writes machine-readable JSON/CSV into ``--out`` and a
short fixed-width summary to stdout. Data files carry the resolved run
configuration; the wall-clock timestamp goes to ``run_meta.json`` only, so
data bodies are byte-identical across reruns of the same configuration.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from . import __version__
from .compound import CompoundConfig, Variant
from .dataset_io import (
    DEFAULT_REPLICA_WINDOW_S,
    Dataset,
    clean_records,
    export_dataset,
    load_dataset,
    load_manifest,
    remove_invalid,
    to_rfm,
    train_validation_split,
)
from .evaluation import evaluate
from .exceptions import CDMError, ConfigurationError, SchemaError
from .metrics import KERNEL_NAMES, parse_kernel
from .positioning import BaselineBackend, CompoundBackend, locate_all
from .reporting import format_table, write_csv, write_json
from .tuning import Criterion, TuningSpec, cross_validate_alpha, default_grid

log = logging.getLogger("cdmloc")

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2
EXIT_SCHEMA = 3


@dataclass
class RunConfig:
    manifest: str | None = None
    train: str | None = None
    validation: str | None = None
    variant: str = "rcdm"
    kernel: str = "lorentzian"
    alpha: float = 1.0
    gamma: float | None = None
    epsilon: float = 1e-6
    p: float = 2.0
    k: int = 1
    k_building: int | None = None
    k_floor: int | None = None
    k_position: int | None = None
    hierarchical: bool | None = None
    seed: int = 0
    out: str = "."
    folds: int = 10
    grid: list[float] | None = None
    criterion: str = "auto"
    fraction: float = 0.75
    window_seconds: float = DEFAULT_REPLICA_WINDOW_S
    dedup: bool = True
    backends: list[str] = field(default_factory=list)
    all_kernels: bool = False

    @classmethod
    def from_sources(cls, file_values: dict, flag_values: dict) -> RunConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(file_values) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        merged = {**file_values, **{k: v for k, v in flag_values.items() if k in known}}
        return cls(**merged)

    def to_dict(self) -> dict:
        return asdict(self)


def parse_grid(text: str) -> list[float]:
    """``"0:3:0.1"`` (inclusive range) or a comma list ``"0,0.5,1"``."""
    text = text.strip()
    try:
        if ":" in text:
            lo, hi, step = (float(t) for t in text.split(":"))
            if step <= 0:
                raise ValueError
            n = int(round((hi - lo) / step))
            return [round(lo + i * step, 10) for i in range(n + 1)]
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid grid {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="JSON/YAML file of run settings; flags override it")
    common.add_argument("--manifest", help="built-in dataset name or manifest file")
    common.add_argument("--train", help="training / input CSV")
    common.add_argument("--validation", help="validation CSV")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int)
    common.add_argument("--variant", choices=["cdm", "acdm", "rcdm", "baseline"])
    common.add_argument("--kernel", choices=KERNEL_NAMES)
    common.add_argument("--alpha", type=float)
    common.add_argument("--gamma", type=float, help="missing-value stand-in (default: manifest sentinel)")
    common.add_argument("--epsilon", type=float)
    common.add_argument("--p", type=float, help="Minkowski order")
    common.add_argument("--k", type=int)
    common.add_argument("--k-building", dest="k_building", type=int)
    common.add_argument("--k-floor", dest="k_floor", type=int)
    common.add_argument("--k-position", dest="k_position", type=int)
    common.add_argument("--hierarchical", action=argparse.BooleanOptionalAction,
                        help="building/floor staging (default: when labels exist)")
    common.add_argument("--fraction", type=float, help="train share when splitting")
    common.add_argument("--folds", type=int)
    common.add_argument("--grid", type=parse_grid, help='alpha grid, "lo:hi:step" or "a,b,c"')
    common.add_argument("--criterion", choices=["auto", "rmse", "success"])
    common.add_argument("--window", dest="window_seconds", type=float,
                        help="replica time window in seconds")
    common.add_argument("--dedup", action=argparse.BooleanOptionalAction)
    common.add_argument("--backend", dest="backends", action="append",
                        help='"variant:kernel[:key=value,...]", repeatable')
    common.add_argument("--all-kernels", dest="all_kernels", action="store_true",
                        help="compare all eight kernels with --variant and with the baseline")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="cdmloc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"cdmloc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("clean", "remove invalid samples and replicas"),
        ("split", "random train/validation split"),
        ("tune", "cross-validate alpha over a grid"),
        ("evaluate", "position the validation set and report errors"),
        ("compare", "evaluate several backends side by side"),
        ("ecdf", "error ECDF per backend"),
    ]:
        sub.add_parser(name, parents=[common], help=help_)
    return parser


def _read_config_file(path) -> dict:
    p = Path(path)
    text = p.read_text()
    if p.suffix.lower() in (".yaml", ".yml"):
        import yaml

        data = yaml.safe_load(text)
    else:
        data = json.loads(text)
    if not isinstance(data, dict):
        raise ConfigurationError("config file must hold a key/value mapping")
    return data


def resolve_config(ns: argparse.Namespace) -> RunConfig:
    flags = vars(ns).copy()
    file_values = _read_config_file(flags.pop("config")) if "config" in flags else {}
    cfg = RunConfig.from_sources(file_values, flags)
    if cfg.manifest is None:
        raise ConfigurationError("--manifest is required")
    if cfg.train is None:
        raise ConfigurationError("--train is required")
    return cfg


def parse_backend(text: str, cfg: RunConfig, gamma: float):
    """Backend from ``"variant:kernel[:key=value,...]"``; unspecified values come from ``cfg``."""
    parts = text.split(":")
    if len(parts) < 2 or len(parts) > 3:
        raise ConfigurationError(f"backend {text!r} must look like variant:kernel[:key=value,...]")
    variant, kernel = parts[0].strip().lower(), parts[1]
    opts = {"alpha": cfg.alpha, "gamma": gamma, "epsilon": cfg.epsilon, "p": cfg.p}
    if len(parts) == 3 and parts[2].strip():
        for item in parts[2].split(","):
            key, _, value = item.partition("=")
            if key.strip() not in opts:
                raise ConfigurationError(f"unknown backend option {key!r} in {text!r}")
            opts[key.strip()] = float(value)
    return make_backend(variant, kernel, **opts)


def make_backend(variant, kernel, alpha, gamma, epsilon, p):
    try:
        kid = parse_kernel(kernel, p)
        if variant == "baseline":
            return BaselineBackend(kid, gamma)
        if variant not in {v.value for v in Variant}:
            raise ConfigurationError(f"unknown variant {variant!r}")
        return CompoundBackend(CompoundConfig(variant, kid, alpha, gamma, epsilon))
    except CDMError as exc:
        raise ConfigurationError(str(exc)) from None


def describe_backend(backend) -> dict:
    if isinstance(backend, BaselineBackend):
        return {"variant": "baseline", "kernel": backend.kernel.name, "p": backend.kernel.p,
                "gamma": backend.gamma}
    return backend.config.to_dict()


def backend_label(backend) -> str:
    d = describe_backend(backend)
    label = f"{d['variant']}:{d['kernel']}"
    if d["kernel"] == "minkowski":
        label += f"(p={d['p']:g})"
    if d["variant"] != "baseline":
        label += f"@{d['alpha']:g}"
    return label


def _load(cfg: RunConfig, path) -> Dataset:
    return load_dataset(path, load_manifest(cfg.manifest))


def _gamma(cfg: RunConfig, ds: Dataset) -> float:
    return ds.manifest.sentinel if cfg.gamma is None else cfg.gamma


def _stage_k(cfg: RunConfig):
    if cfg.k_building is None and cfg.k_floor is None and cfg.k_position is None:
        return None
    return tuple(cfg.k if v is None else v for v in (cfg.k_building, cfg.k_floor, cfg.k_position))


def _resolved(cfg: RunConfig, **extra) -> dict:
    d = cfg.to_dict()
    # output location lives in run_meta so bodies compare equal across directories
    d.pop("out", None)
    d.update(extra)
    return d


def _train_validation(cfg: RunConfig):
    train_ds = _load(cfg, cfg.train)
    train = remove_invalid(train_ds.records)[0]
    n_train_invalid = len(train_ds.records) - len(train)
    if cfg.validation:
        val = _load(cfg, cfg.validation).records
        source = "file"
    else:
        train, val = train_validation_split(train, cfg.fraction, cfg.seed)
        source = f"split(fraction={cfg.fraction}, seed={cfg.seed})"
    val_valid = remove_invalid(val)[0]
    info = {"validation_source": source, "n_train": len(train), "n_validation": len(val_valid),
            "n_train_invalid_dropped": n_train_invalid,
            "n_validation_invalid_dropped": len(val) - len(val_valid)}
    return train_ds, train, val_valid, info


def _hierarchical(cfg: RunConfig, rfm) -> bool:
    labelled = rfm.has_building and rfm.has_floor
    if cfg.hierarchical is None:
        return labelled
    if cfg.hierarchical and not labelled:
        raise ConfigurationError("--hierarchical needs building and floor columns in the manifest")
    return cfg.hierarchical


def _run_backend(backend, rfm, val, cfg, hierarchical):
    if cfg.k < 1 or cfg.k > len(rfm):
        raise ConfigurationError(f"--k must be in [1, {len(rfm)}]")
    estimates = locate_all([r.fingerprint for r in val], rfm, backend, cfg.k, hierarchical,
                           _stage_k(cfg))
    return evaluate(estimates, [r.label for r in val])


def _backend_list(cfg: RunConfig, gamma: float):
    specs = list(cfg.backends or [])
    if cfg.all_kernels:
        w = cfg.variant if cfg.variant != "baseline" else "rcdm"
        for kernel in KERNEL_NAMES:
            specs += [f"{w}:{kernel}", f"baseline:{kernel}"]
    if not specs:
        return [make_backend(cfg.variant, cfg.kernel, cfg.alpha, gamma, cfg.epsilon, cfg.p)]
    return [parse_backend(s, cfg, gamma) for s in specs]


def _unique_labels(backends) -> list[str]:
    seen: dict[str, int] = {}
    labels = []
    for b in backends:
        lab = backend_label(b)
        seen[lab] = seen.get(lab, 0) + 1
        labels.append(lab if seen[lab] == 1 else f"{lab}#{seen[lab]}")
    return labels


def _write_meta(out: Path, command: str):
    write_json(out / "run_meta.json", {
        "command": command,
        "out": str(out),
        "cdmloc_version": __version__,
        "created_at": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    })


def cmd_clean(cfg: RunConfig) -> int:
    ds = _load(cfg, cfg.train)
    if cfg.dedup and not ds.manifest.has_replica_metadata:
        raise ConfigurationError("replica removal needs user, device and timestamp columns; "
                                 "pass --no-dedup")
    kept, report = clean_records(ds.records, cfg.seed, cfg.window_seconds, cfg.dedup)
    out = Path(cfg.out)
    export_dataset(out / "cleaned.csv", ds.with_records(kept))
    write_json(out / "cleaning_report.json", {"config": _resolved(cfg), "report": report.to_dict()})
    _write_meta(out, "clean")
    rows = [(k, v) for k, v in report.to_dict().items()]
    print(format_table(["field", "value"], rows))
    return EXIT_OK


def cmd_split(cfg: RunConfig) -> int:
    ds = _load(cfg, cfg.train)
    train, val = train_validation_split(ds.records, cfg.fraction, cfg.seed)
    out = Path(cfg.out)
    export_dataset(out / "train.csv", ds.with_records(train))
    export_dataset(out / "validation.csv", ds.with_records(val))
    report = {"n_input": len(ds.records), "n_train": len(train), "n_validation": len(val)}
    write_json(out / "split_report.json", {"config": _resolved(cfg), "report": report})
    _write_meta(out, "split")
    print(format_table(["field", "value"], list(report.items())))
    return EXIT_OK


def cmd_tune(cfg: RunConfig) -> int:
    if cfg.variant == "baseline":
        raise ConfigurationError("tuning alpha needs a compound variant (cdm, acdm or rcdm)")
    ds = _load(cfg, cfg.train)
    records, _ = remove_invalid(ds.records)
    rfm = to_rfm(records)
    labelled = rfm.has_building and rfm.has_floor
    criterion = cfg.criterion
    if criterion == "auto":
        criterion = "success" if labelled else "rmse"
    gamma = _gamma(cfg, ds)
    base = make_backend(cfg.variant, cfg.kernel, 0.0, gamma, cfg.epsilon, cfg.p).config
    spec = TuningSpec(base=base, folds=cfg.folds, grid=cfg.grid or default_grid(),
                      criterion=Criterion(criterion), seed=cfg.seed, k=cfg.k,
                      hierarchical=cfg.hierarchical, stage_k=_stage_k(cfg))
    if spec.folds > len(rfm):
        raise ConfigurationError(f"{spec.folds} folds but only {len(rfm)} records")
    result = cross_validate_alpha(rfm, spec)
    out = Path(cfg.out)
    write_json(out / "tuning.json", {"config": _resolved(cfg, gamma=gamma, criterion=criterion),
                                     "result": result.to_dict()})
    write_csv(out / "tuning_scores.csv", ["alpha", "fold", "score"], result.long_rows())
    _write_meta(out, "tune")
    means = result.mean_scores()
    print(format_table(["alpha", f"mean {criterion}"], [(a, m) for a, m in means.items()]))
    print(f"best alpha: {result.best_alpha:g} (mean {criterion} {result.best_score:.6g})")
    return EXIT_OK


def _report_row(report) -> dict:
    return {
        "rmse_m": report.rmse_m,
        "mean_m": report.mean_m,
        "std_m": report.std_m,
        "median_m": report.median_m,
        "p80_m": report.percentiles.get("0.8"),
        "max_m": report.max_m,
        "success_rate": report.success_rate,
        "building_accuracy": report.building_accuracy,
    }


def cmd_evaluate(cfg: RunConfig) -> int:
    train_ds, train, val, info = _train_validation(cfg)
    rfm = to_rfm(train)
    gamma = _gamma(cfg, train_ds)
    backend = make_backend(cfg.variant, cfg.kernel, cfg.alpha, gamma, cfg.epsilon, cfg.p)
    hierarchical = _hierarchical(cfg, rfm)
    outcomes, report = _run_backend(backend, rfm, val, cfg, hierarchical)
    out = Path(cfg.out)
    write_json(out / "report.json", {
        "config": _resolved(cfg, gamma=gamma, hierarchical=hierarchical),
        "backend": describe_backend(backend), "data": info, "report": report.to_dict()})
    write_csv(out / "samples.csv", ["sample_index", "error_m", "building_correct", "floor_correct"],
              [(i, o.error_m, o.building_correct, o.floor_correct) for i, o in enumerate(outcomes)])
    write_csv(out / "ecdf.csv", ["error_m", "fraction"], report.ecdf)
    _write_meta(out, "evaluate")
    print(format_table(["metric", backend_label(backend)], list(_report_row(report).items())))
    return EXIT_OK


def _evaluate_many(cfg: RunConfig):
    train_ds, train, val, info = _train_validation(cfg)
    rfm = to_rfm(train)
    gamma = _gamma(cfg, train_ds)
    backends = _backend_list(cfg, gamma)
    hierarchical = _hierarchical(cfg, rfm)
    labels = _unique_labels(backends)
    results = {}
    for label, backend in zip(labels, backends):
        log.info("evaluating %s", label)
        results[label] = (backend, *_run_backend(backend, rfm, val, cfg, hierarchical))
    return gamma, hierarchical, info, labels, results


def cmd_compare(cfg: RunConfig) -> int:
    gamma, hierarchical, info, labels, results = _evaluate_many(cfg)
    if len(labels) < 2:
        raise ConfigurationError("compare needs at least two backends (--backend or --all-kernels)")
    out = Path(cfg.out)
    write_json(out / "compare.json", {
        "config": _resolved(cfg, gamma=gamma, hierarchical=hierarchical), "data": info,
        "backends": {lab: describe_backend(results[lab][0]) for lab in labels},
        "reports": {lab: results[lab][2].to_dict() for lab in labels}})
    metrics = list(_report_row(results[labels[0]][2]))
    table = [[m] + [_report_row(results[lab][2])[m] for lab in labels] for m in metrics]
    write_csv(out / "compare.csv", ["metric"] + labels, table)
    _write_meta(out, "compare")
    print(format_table(["metric"] + labels, table))
    return EXIT_OK


def _safe_name(label: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in label)


def cmd_ecdf(cfg: RunConfig) -> int:
    gamma, hierarchical, info, labels, results = _evaluate_many(cfg)
    out = Path(cfg.out)
    files = {}
    for lab in labels:
        name = f"ecdf_{_safe_name(lab)}.csv"
        write_csv(out / name, ["error_m", "fraction"], results[lab][2].ecdf)
        files[lab] = name
    write_json(out / "ecdf_summary.json", {
        "config": _resolved(cfg, gamma=gamma, hierarchical=hierarchical), "data": info,
        "files": files,
        "max_error_m": {lab: results[lab][2].max_m for lab in labels}})
    _write_meta(out, "ecdf")
    print(format_table(["backend", "max_m", "median_m", "file"],
                       [(lab, results[lab][2].max_m, results[lab][2].median_m, files[lab])
                        for lab in labels]))
    return EXIT_OK


COMMANDS = {"clean": cmd_clean, "split": cmd_split, "tune": cmd_tune, "evaluate": cmd_evaluate,
            "compare": cmd_compare, "ecdf": cmd_ecdf}


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    command = ns.command
    del ns.command
    verbose = getattr(ns, "verbose", False)
    if hasattr(ns, "verbose"):
        del ns.verbose
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(ns)
        return COMMANDS[command](cfg)
    except ConfigurationError as exc:
        print(f"cdmloc {command}: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SchemaError, OSError, json.JSONDecodeError) as exc:
        print(f"cdmloc {command}: data error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except CDMError as exc:
        print(f"cdmloc {command}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
