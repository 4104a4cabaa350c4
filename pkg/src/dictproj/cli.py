"""Command-line front end: train, eval, corrupt, sweep, ablate.

Configs are flat ``key = value`` text files ('#' starts a comment). Dataset
keys: either ``dataset``/``format`` (plus ``labels`` for idx pairs) or
``synthetic = true`` with ``classes``, ``per_class``, ``feature_dim``,
``separation``; ``test_per_class`` (synthetic) or ``train_per_class``
(loaded) controls the split used by sweep/ablate. Optional training noise:
``noise_kind``, ``noise_level``, ``image_shape`` (HxW). Every
hyperparameter field may appear under its own name (lambda1, lambda2, eta,
alpha, delta, beta, lam, gamma, xi, omega, dim, atoms_per_class,
k_neighbors, bandwidth, outer_iters, inner_iters, max_alm_iters, seed).
CLI flags override config values. All commands are deterministic given
--seed.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

import numpy as np

from . import classifier, data, trainer
from .errors import ConfigurationError, DimensionError
from .model import Hyperparameters

EXIT_BAD_CONFIG = 2
EXIT_TRAIN_FAILURE = 3
EXIT_DIM_MISMATCH = 4

_HP_FIELDS = {f.name: f for f in dataclasses.fields(Hyperparameters)}
_DATA_KEYS = {
    "dataset",
    "format",
    "labels",
    "synthetic",
    "classes",
    "per_class",
    "feature_dim",
    "separation",
    "test_per_class",
    "train_per_class",
    "noise_kind",
    "noise_level",
    "image_shape",
    "max_value",
}


def parse_config(path: str) -> dict:
    """Read a flat key = value file; unknown keys are configuration errors."""
    cfg: dict[str, str] = {}
    try:
        handle = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path!r}: {exc}") from exc
    with handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigurationError(f"{path}: line {lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in _HP_FIELDS and key not in _DATA_KEYS:
                raise ConfigurationError(f"{path}: line {lineno}: unknown key {key!r}")
            cfg[key] = value
    return cfg


def _coerce(value: str):
    lowered = value.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    if lowered in ("none", "auto"):
        return None if lowered == "none" else "auto"
    try:
        return int(value)
    except ValueError:
        pass
    try:
        return float(value)
    except ValueError:
        return value


def hyperparams_from_config(cfg: dict, **overrides) -> Hyperparameters:
    kwargs = {}
    for key, raw in cfg.items():
        if key in _HP_FIELDS:
            kwargs[key] = _coerce(raw)
    for key, value in overrides.items():
        if value is not None:
            kwargs[key] = value
    try:
        return Hyperparameters(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"bad hyperparameters: {exc}") from exc


def _parse_image_shape(text):
    try:
        h, w = (int(p) for p in text.lower().split("x"))
        return h, w
    except ValueError as exc:
        raise ConfigurationError(f"image_shape must look like HxW, got {text!r}") from exc


def load_config_dataset(cfg: dict, seed: int) -> data.LabeledDataset:
    """Materialize the full dataset a config describes (no split, no noise)."""
    if _coerce(cfg.get("synthetic", "false")):
        for key in ("classes", "per_class", "feature_dim", "separation"):
            if key not in cfg:
                raise ConfigurationError(f"synthetic data needs {key!r}")
        extra = int(cfg.get("test_per_class", 0))
        return data.make_synthetic(
            classes=int(cfg["classes"]),
            per_class=int(cfg["per_class"]) + extra,
            dim=int(cfg["feature_dim"]),
            class_separation=float(cfg["separation"]),
            seed=seed,
        )
    if "dataset" not in cfg:
        raise ConfigurationError("config needs either 'dataset = <path>' or 'synthetic = true'")
    try:
        return data.load_dataset(
            cfg["dataset"],
            fmt=cfg.get("format", "csv"),
            labels_path=cfg.get("labels"),
            max_value=float(cfg.get("max_value", 255.0)),
        )
    except OSError as exc:
        raise ConfigurationError(f"cannot load dataset: {exc}") from exc


def split_dataset(ds: data.LabeledDataset, train_per_class: int, seed: int):
    """Randomly pick train_per_class columns per class; the rest is the test set."""
    rng = np.random.default_rng(seed)
    train_cols, test_cols = [], []
    for label in range(1, ds.n_classes + 1):
        cols = ds.class_columns(label)
        if cols.size <= train_per_class:
            raise ConfigurationError(
                f"class {label} has {cols.size} samples, cannot hold out a test set"
            )
        picked = rng.permutation(cols.size)
        train_cols.append(cols[picked[:train_per_class]])
        test_cols.append(cols[picked[train_per_class:]])
    train_cols = np.concatenate(train_cols)
    test_cols = np.concatenate(test_cols)
    make = lambda idx: data.LabeledDataset(
        ds.samples[:, idx], ds.labels[idx], max_value=ds.max_value
    )
    return make(train_cols), make(test_cols)


def _corrupt_pair(train, test, kind, level, image_shape, seed):
    if kind is None or kind == "none" or level == 0:
        return train, test
    shape = _parse_image_shape(image_shape) if isinstance(image_shape, str) else image_shape
    spec_train = data.CorruptionSpec(kind=kind, level=level, image_shape=shape, seed=seed)
    spec_test = data.CorruptionSpec(kind=kind, level=level, image_shape=shape, seed=seed + 1)
    return data.corrupt(train, spec_train), data.corrupt(test, spec_test)


def _run_cell(cfg, hp: Hyperparameters, kind, level, reps: int, base_seed: int) -> float:
    """Train/evaluate one grid cell, averaged over repetitions."""
    accuracies = []
    for rep in range(reps):
        seed = base_seed + rep
        full = load_config_dataset(cfg, seed)
        if _coerce(cfg.get("synthetic", "false")):
            train_n = int(cfg["per_class"])
        else:
            train_n = int(cfg.get("train_per_class", max(1, full.class_counts.min() // 2)))
        train, test = split_dataset(full, train_n, seed + 1)
        train, test = _corrupt_pair(
            train, test, kind, level, cfg.get("image_shape"), seed + 2
        )
        model = trainer.fit(train, dataclasses.replace(hp, seed=seed))
        accuracies.append(classifier.evaluate(model, test).accuracy)
    return float(np.mean(accuracies))


def cmd_train(args) -> int:
    try:
        cfg = parse_config(args.config)
        hp = hyperparams_from_config(cfg, seed=args.seed, dim=args.dim)
        if args.no_lowrank:
            hp = dataclasses.replace(hp, alpha=0.0)
        if args.fixed_projection:
            hp = dataclasses.replace(hp, fixed_projection=True)
        ds = load_config_dataset(cfg, hp.seed)
        kind = cfg.get("noise_kind")
        if kind and kind != "none":
            shape = cfg.get("image_shape")
            spec = data.CorruptionSpec(
                kind=kind,
                level=float(cfg.get("noise_level", 0.0)),
                image_shape=_parse_image_shape(shape) if shape else None,
                seed=hp.seed + 17,
            )
            ds = data.corrupt(ds, spec)
    except (ConfigurationError, data.ParseError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG

    try:
        model = trainer.fit(ds, hp)
    except Exception as exc:  # noqa: BLE001 - surface as exit code per contract
        print(f"training failed: {exc}", file=sys.stderr)
        return EXIT_TRAIN_FAILURE
    trainer.save_model(model, args.out)
    print("objective trace: " + " ".join(f"{v:.10g}" for v in model.objective_trace))
    if args.trace_out:
        with open(args.trace_out, "w", encoding="utf-8") as handle:
            handle.write("iteration,objective\n")
            for idx, value in enumerate(model.objective_trace):
                handle.write(f"{idx},{value:.17g}\n")
    print(f"model written to {args.out}")
    return 0


def cmd_eval(args) -> int:
    try:
        model = trainer.load_model(args.model)
        test = data.load_dataset(args.data, fmt=args.format)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    try:
        result = classifier.evaluate(model, test)
    except DimensionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIM_MISMATCH
    print(f"accuracy: {result.accuracy:.6f}")
    if args.out:
        k = model.n_classes
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write("true_label," + ",".join(f"pred_{j + 1}" for j in range(k)) + "\n")
            for i in range(k):
                handle.write(f"{i + 1}," + ",".join(str(c) for c in result.confusion[i]) + "\n")
    if args.per_sample:
        k = model.n_classes
        with open(args.per_sample, "w", encoding="utf-8") as handle:
            handle.write(
                "sample_index,true_label,predicted_label,"
                + ",".join(f"residual_{j + 1}" for j in range(k))
                + "\n"
            )
            for idx in range(test.n_samples):
                residuals = ",".join(f"{r:.17g}" for r in result.residuals[idx])
                handle.write(
                    f"{idx},{test.labels[idx]},{result.predictions[idx]},{residuals}\n"
                )
    return 0


def cmd_corrupt(args) -> int:
    try:
        ds = data.load_dataset(args.data, fmt=args.format)
        spec = data.CorruptionSpec(
            kind=args.noise_kind,
            level=args.noise_level,
            image_shape=_parse_image_shape(args.image_shape) if args.image_shape else None,
            seed=args.seed,
        )
        data.save_dataset(data.corrupt(ds, spec), args.out)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    print(f"corrupted dataset written to {args.out}")
    return 0


def _csv_list(text, cast):
    return [cast(part) for part in text.split(",") if part != ""]


def cmd_sweep(args) -> int:
    try:
        cfg = parse_config(args.config)
        hp = hyperparams_from_config(cfg, seed=args.seed)
        if args.no_lowrank:
            hp = dataclasses.replace(hp, alpha=0.0)
        if args.fixed_projection:
            hp = dataclasses.replace(hp, fixed_projection=True)
        dims = _csv_list(args.dims, int) if args.dims else [hp.dim]
        if args.noise_levels and not args.noise_kind:
            raise ConfigurationError("--noise-levels requires --noise-kind")
        kinds = _csv_list(args.noise_kind, str) if args.noise_kind else ["none"]
        levels = _csv_list(args.noise_levels, float) if args.noise_levels else [0.0]
        if not dims or not kinds or not levels:
            raise ConfigurationError("sweep lists must be nonempty")
    except (ConfigurationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG

    rows = []
    try:
        for dim in dims:
            for kind in kinds:
                for level in levels:
                    cell_hp = dataclasses.replace(hp, dim=dim)
                    acc = _run_cell(cfg, cell_hp, kind, level, args.reps, hp.seed)
                    rows.append((dim, kind, level, acc))
                    print(f"dim={dim} noise={kind}@{level:g} accuracy={acc:.6f}")
    except Exception as exc:  # noqa: BLE001
        print(f"sweep failed at cell {len(rows)}: {exc}", file=sys.stderr)
        return EXIT_TRAIN_FAILURE
    with open(args.out, "w", encoding="utf-8") as handle:
        handle.write("dimension,noise_kind,noise_level,accuracy\n")
        for dim, kind, level, acc in rows:
            handle.write(f"{dim},{kind},{level:g},{acc:.6f}\n")
    print(f"sweep results written to {args.out}")
    return 0


def cmd_ablate(args) -> int:
    """Compare the full model against the no-lowrank and fixed-projection variants."""
    try:
        cfg = parse_config(args.config)
        hp = hyperparams_from_config(cfg, seed=args.seed, dim=args.dim)
    except (ConfigurationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    variants = [
        ("full", hp),
        ("no_lowrank", dataclasses.replace(hp, alpha=0.0)),
        ("fixed_projection", dataclasses.replace(hp, fixed_projection=True)),
    ]
    rows = []
    try:
        for name, variant_hp in variants:
            acc = _run_cell(
                cfg, variant_hp, args.noise_kind, args.noise_level, args.reps, hp.seed
            )
            rows.append((name, acc))
            print(f"{name}: accuracy={acc:.6f}")
    except Exception as exc:  # noqa: BLE001
        print(f"ablation failed: {exc}", file=sys.stderr)
        return EXIT_TRAIN_FAILURE
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write("variant,accuracy\n")
            for name, acc in rows:
                handle.write(f"{name},{acc:.6f}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dictproj",
        description="Joint projection / structured dictionary learning toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a model from a config file")
    p_train.add_argument("--config", required=True)
    p_train.add_argument("--out", default="model.npz")
    p_train.add_argument("--seed", type=int, default=None)
    p_train.add_argument("--dim", type=int, default=None)
    p_train.add_argument("--trace-out", default=None, help="objective trace CSV")
    p_train.add_argument("--no-lowrank", action="store_true")
    p_train.add_argument("--fixed-projection", action="store_true")
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", help="evaluate a model on a dataset")
    p_eval.add_argument("--model", required=True)
    p_eval.add_argument("--data", required=True)
    p_eval.add_argument("--format", default="csv", choices=("csv", "idx"))
    p_eval.add_argument("--out", default=None, help="confusion matrix CSV")
    p_eval.add_argument("--per-sample", default=None, help="per-sample residual CSV")
    p_eval.set_defaults(func=cmd_eval)

    p_corrupt = sub.add_parser("corrupt", help="write a corrupted copy of a dataset")
    p_corrupt.add_argument("--data", required=True)
    p_corrupt.add_argument("--format", default="csv", choices=("csv", "idx"))
    p_corrupt.add_argument("--noise-kind", required=True, choices=data.CORRUPTION_KINDS)
    p_corrupt.add_argument("--noise-level", type=float, required=True)
    p_corrupt.add_argument("--image-shape", default=None, help="HxW, required for block noise")
    p_corrupt.add_argument("--seed", type=int, default=0)
    p_corrupt.add_argument("--out", required=True)
    p_corrupt.set_defaults(func=cmd_corrupt)

    p_sweep = sub.add_parser("sweep", help="grid over dimensions and noise levels")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--dims", default=None, help="comma list of target dimensions")
    p_sweep.add_argument("--noise-kind", default=None)
    p_sweep.add_argument("--noise-levels", default=None, help="comma list of levels")
    p_sweep.add_argument("--reps", type=int, default=3)
    p_sweep.add_argument("--seed", type=int, default=None)
    p_sweep.add_argument("--no-lowrank", action="store_true")
    p_sweep.add_argument("--fixed-projection", action="store_true")
    p_sweep.add_argument("--out", required=True)
    p_sweep.set_defaults(func=cmd_sweep)

    p_ablate = sub.add_parser("ablate", help="full vs no-lowrank vs fixed-projection")
    p_ablate.add_argument("--config", required=True)
    p_ablate.add_argument("--dim", type=int, default=None)
    p_ablate.add_argument("--noise-kind", default=None)
    p_ablate.add_argument("--noise-level", type=float, default=0.0)
    p_ablate.add_argument("--reps", type=int, default=3)
    p_ablate.add_argument("--seed", type=int, default=None)
    p_ablate.add_argument("--out", default=None)
    p_ablate.set_defaults(func=cmd_ablate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
