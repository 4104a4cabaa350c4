"""Labeled sample matrices: loading, saving, synthetic generation, corruption.

Samples are stored as the columns of an ``m x N`` float matrix; labels are
integers ``1..K``. Four corruption kinds are supported: ``pixel`` (replace a
fixed count of entries per column with the dataset maximum), ``block``
(overwrite a contiguous image rectangle with a deterministic texture patch),
``salt_pepper`` (set entries to 0 or the maximum with equal probability), and
``gaussian`` (additive zero-mean noise).
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigurationError, DimensionError, ParameterError, ParseError

CORRUPTION_KINDS = ("pixel", "block", "salt_pepper", "gaussian")


@dataclass(frozen=True)
class LabeledDataset:
    """Feature matrix (features x samples) with integer labels 1..K."""

    samples: np.ndarray
    labels: np.ndarray
    max_value: float = 255.0

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "labels", labels)
        if samples.ndim != 2:
            raise DimensionError("samples must be a 2-D matrix (features x samples)")
        if labels.ndim != 1 or labels.shape[0] != samples.shape[1]:
            raise DimensionError(
                f"labels length {labels.shape} does not match {samples.shape[1]} sample columns"
            )
        if samples.shape[1] == 0:
            raise ParseError("dataset has no samples")
        if not np.all(np.isfinite(samples)):
            raise ParameterError("samples contain non-finite entries")
        k = int(labels.max())
        present = np.unique(labels)
        if labels.min() < 1 or not np.array_equal(present, np.arange(1, k + 1)):
            raise ParameterError("labels must cover 1..K contiguously with every class non-empty")

    @property
    def dim(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def n_classes(self) -> int:
        return int(self.labels.max())

    @property
    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes + 1)[1:]

    def class_columns(self, label: int) -> np.ndarray:
        return np.flatnonzero(self.labels == label)


@dataclass(frozen=True)
class CorruptionSpec:
    """How to corrupt a dataset.

    ``level`` is a fraction in [0, 1] for pixel/block/salt_pepper and a
    standard deviation (>= 0) for gaussian. ``image_shape`` (height, width)
    is required for block corruption and must multiply out to the feature
    dimension.
    """

    kind: str
    level: float
    image_shape: tuple[int, int] | None = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in CORRUPTION_KINDS:
            raise ParameterError(f"unknown corruption kind {self.kind!r}")
        if self.kind == "gaussian":
            if self.level < 0:
                raise ParameterError("gaussian level is a standard deviation and must be >= 0")
        elif not 0.0 <= self.level <= 1.0:
            raise ParameterError(f"{self.kind} level must lie in [0, 1], got {self.level}")


def _remap_labels(raw: np.ndarray) -> np.ndarray:
    """Map arbitrary integer labels to contiguous 1..K by first appearance."""
    mapping: dict[int, int] = {}
    out = np.empty(raw.shape[0], dtype=np.int64)
    for idx, value in enumerate(raw):
        key = int(value)
        if key not in mapping:
            mapping[key] = len(mapping) + 1
        out[idx] = mapping[key]
    return out


def _load_csv(path: str) -> tuple[np.ndarray, np.ndarray]:
    rows: list[list[float]] = []
    raw_labels: list[int] = []
    width = None
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if width is None:
                width = len(parts)
                if width < 2:
                    raise ParseError(f"{path}: row {lineno}: need at least one feature and a label")
            elif len(parts) != width:
                raise DimensionError(
                    f"{path}: row {lineno}: expected {width} fields, got {len(parts)}"
                )
            try:
                values = [float(p) for p in parts[:-1]]
                label = int(float(parts[-1]))
            except ValueError as exc:
                raise ParseError(f"{path}: row {lineno}: {exc}") from exc
            rows.append(values)
            raw_labels.append(label)
    if not rows:
        raise ParseError(f"{path}: file contains no data rows")
    return np.asarray(rows, dtype=np.float64).T, np.asarray(raw_labels, dtype=np.int64)


def _read_idx(path: str, expect_magic: int) -> np.ndarray:
    with open(path, "rb") as handle:
        blob = handle.read()
    if len(blob) < 4:
        raise ParseError(f"{path}: truncated header at byte 0")
    magic = struct.unpack(">i", blob[:4])[0]
    if magic != expect_magic:
        raise ParseError(f"{path}: bad magic {magic:#x} at byte 0, expected {expect_magic:#x}")
    ndim = magic & 0xFF
    header = 4 + 4 * ndim
    if len(blob) < header:
        raise ParseError(f"{path}: truncated dimension block at byte {len(blob)}")
    dims = struct.unpack(f">{ndim}i", blob[4:header])
    count = int(np.prod(dims))
    if len(blob) != header + count:
        raise ParseError(f"{path}: expected {header + count} bytes, file ends at byte {len(blob)}")
    return np.frombuffer(blob, dtype=np.uint8, offset=header).reshape(dims)


def _idx_label_path(path: str) -> str:
    for old, new in (("idx3", "idx1"), ("images", "labels")):
        if old in path:
            return path.replace(old, new)
    raise ConfigurationError(f"cannot derive a label-file name from {path!r}; pass labels_path")


def load_dataset(path, fmt="csv", labels_path=None, normalize=False, max_value=255.0):
    """Load a labeled dataset from CSV (features..., label per row) or an IDX pair.

    Labels are remapped to contiguous 1..K preserving order of first
    appearance. ``normalize=True`` rescales every sample column to unit l2
    norm (off by default; raw values are kept as loaded).
    """
    if fmt == "csv":
        samples, raw_labels = _load_csv(path)
    elif fmt == "idx":
        images = _read_idx(path, 0x00000803)
        labels_file = labels_path if labels_path is not None else _idx_label_path(path)
        raw_labels = _read_idx(labels_file, 0x00000801).astype(np.int64)
        if images.shape[0] != raw_labels.shape[0]:
            raise DimensionError(
                f"{path}: {images.shape[0]} images but {raw_labels.shape[0]} labels"
            )
        samples = images.reshape(images.shape[0], -1).T.astype(np.float64)
    else:
        raise ConfigurationError(f"unknown format {fmt!r}; expected 'csv' or 'idx'")
    ds = LabeledDataset(samples, _remap_labels(raw_labels), max_value=max_value)
    return normalize_columns(ds) if normalize else ds


def save_dataset(ds: LabeledDataset, path: str) -> None:
    """Write the CSV form (features then label per row); round-trips exactly."""
    with open(path, "w", encoding="utf-8") as handle:
        for col in range(ds.n_samples):
            feats = ",".join(repr(v) for v in ds.samples[:, col])
            handle.write(f"{feats},{ds.labels[col]}\n")


def normalize_columns(ds: LabeledDataset) -> LabeledDataset:
    """Scale each sample column to unit l2 norm (zero columns left alone)."""
    norms = np.linalg.norm(ds.samples, axis=0)
    scale = np.where(norms > 0, norms, 1.0)
    return replace(ds, samples=ds.samples / scale)


def make_synthetic(classes, per_class, dim, class_separation, seed):
    """Gaussian blobs: K class means at pairwise distance >= class_separation,
    unit within-class covariance. Deterministic for a fixed seed.
    """
    if classes < 2 or per_class < 1 or dim < 2:
        raise ParameterError("need classes >= 2, per_class >= 1, dim >= 2")
    rng = np.random.default_rng(seed)
    means = rng.normal(size=(dim, classes))
    dists = np.linalg.norm(means[:, :, None] - means[:, None, :], axis=0)
    min_dist = dists[~np.eye(classes, dtype=bool)].min()
    # closest pair lands exactly at the requested separation
    means *= class_separation / max(min_dist, 1e-12)
    samples = np.empty((dim, classes * per_class))
    labels = np.empty(classes * per_class, dtype=np.int64)
    for i in range(classes):
        cols = slice(i * per_class, (i + 1) * per_class)
        samples[:, cols] = means[:, [i]] + rng.normal(size=(dim, per_class))
        labels[cols] = i + 1
    return LabeledDataset(samples, labels, max_value=float(np.abs(samples).max()))


def _texture_patch(height, width, max_value):
    """Checkerboard overlaid with a horizontal gradient, scaled to max_value."""
    rr, cc = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
    checker = 0.3 + 0.4 * ((rr + cc) % 2)
    gradient = 0.3 * (cc / max(width - 1, 1))
    return max_value * (checker + gradient)


def _block_shape(image_shape, level):
    h, w = image_shape
    bh = min(h, max(1, round(h * math.sqrt(level))))
    bw = min(w, max(1, round(w * math.sqrt(level))))
    return bh, bw


def corrupt(ds: LabeledDataset, spec: CorruptionSpec) -> LabeledDataset:
    """Return a corrupted copy of ``ds``; labels and column count are unchanged."""
    m, n = ds.samples.shape
    out = ds.samples.copy()
    rng = np.random.default_rng(spec.seed)
    if spec.kind == "pixel":
        count = math.ceil(spec.level * m)
        for col in range(n):
            if count:
                idx = rng.choice(m, size=count, replace=False)
                out[idx, col] = ds.max_value
    elif spec.kind == "salt_pepper":
        count = math.ceil(spec.level * m)
        for col in range(n):
            if count:
                idx = rng.choice(m, size=count, replace=False)
                out[idx, col] = np.where(rng.random(count) < 0.5, 0.0, ds.max_value)
    elif spec.kind == "gaussian":
        out += rng.normal(scale=spec.level, size=out.shape) if spec.level > 0 else 0.0
    else:  # block
        if spec.image_shape is None:
            raise ConfigurationError("block corruption requires image_shape")
        h, w = spec.image_shape
        if h * w != m:
            raise ConfigurationError(
                f"image_shape {spec.image_shape} does not multiply out to feature dim {m}"
            )
        if spec.level > 0:
            bh, bw = _block_shape((h, w), spec.level)
            patch = _texture_patch(bh, bw, ds.max_value)
            for col in range(n):
                top = rng.integers(0, h - bh + 1)
                left = rng.integers(0, w - bw + 1)
                img = out[:, col].reshape(h, w)
                img[top : top + bh, left : left + bw] = patch
                out[:, col] = img.ravel()
    return replace(ds, samples=out)
