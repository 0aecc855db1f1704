"""Encoded-dataset container (LCF v1), splitting and concatenation ensembling.

LCF v1 layout, little-endian:
    magic "LCF1" | u32 version=1 | u32 d | u64 n | u32 n_classes | u32 meta_len
    | meta_len bytes UTF-8 JSON | n x u32 labels | n*d x f32 features row-major
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    BadMagic,
    CorruptLabels,
    EmptyData,
    LabelMismatch,
    ShapeMismatch,
    Truncated,
)

_MAGIC = b"LCF1"
_HEADER = struct.Struct("<4sIIQII")


@dataclass(frozen=True)
class DatasetMeta:
    encoder_name: str
    latent_dim: int
    encode_flops_per_sample: int
    source_dataset: str


@dataclass(frozen=True)
class EncodedDataset:
    """Immutable matrix of latent features with dense 0-based labels."""

    features: np.ndarray  # (n, d) float32
    labels: np.ndarray  # (n,) int64
    class_names: list[str]
    meta: DatasetMeta

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def validate(self, require_all_classes: bool = True) -> "EncodedDataset":
        if self.features.ndim != 2 or self.n == 0:
            raise EmptyData("dataset has no rows")
        if not np.all(np.isfinite(self.features)):
            raise CorruptLabels("non-finite feature values")
        if self.labels.shape != (self.n,):
            raise ShapeMismatch("labels length differs from feature rows")
        if self.labels.min() < 0 or self.labels.max() >= self.n_classes:
            raise CorruptLabels("label outside [0, n_classes)")
        if self.meta.latent_dim != self.d:
            raise ShapeMismatch("meta.latent_dim differs from feature columns")
        if require_all_classes:
            present = np.unique(self.labels)
            if present.size != self.n_classes:
                raise CorruptLabels("some class ids have no samples")
        return self

    def restrict_to_classes(self, class_ids) -> "EncodedDataset":
        """Row subset containing only the given classes; label space unchanged."""
        mask = np.isin(self.labels, np.asarray(list(class_ids)))
        return replace(
            self,
            features=self.features[mask],
            labels=self.labels[mask],
        )

    def subset_rows(self, idx: np.ndarray) -> "EncodedDataset":
        return replace(self, features=self.features[idx], labels=self.labels[idx])


@dataclass(frozen=True)
class SplitDataset:
    train: EncodedDataset
    val: EncodedDataset
    test: EncodedDataset
    warnings: tuple[str, ...] = field(default=())


def make_dataset(features, labels, class_names, encoder_name="unknown",
                 encode_flops_per_sample=0, source_dataset="unknown") -> EncodedDataset:
    features = np.ascontiguousarray(np.asarray(features, dtype=np.float32))
    labels = np.asarray(labels, dtype=np.int64)
    meta = DatasetMeta(
        encoder_name=encoder_name,
        latent_dim=features.shape[1] if features.ndim == 2 else 0,
        encode_flops_per_sample=int(encode_flops_per_sample),
        source_dataset=source_dataset,
    )
    return EncodedDataset(features, labels, list(class_names), meta).validate()


def write_lcf(ds: EncodedDataset, path) -> None:
    ds.validate()
    meta_json = json.dumps(
        {
            "encoder_name": ds.meta.encoder_name,
            "encode_flops_per_sample": ds.meta.encode_flops_per_sample,
            "source_dataset": ds.meta.source_dataset,
            "class_names": list(ds.class_names),
        },
        sort_keys=True,
        separators=(",", ":"),
    ).encode("utf-8")
    header = _HEADER.pack(_MAGIC, 1, ds.d, ds.n, ds.n_classes, len(meta_json))
    labels = ds.labels.astype("<u4").tobytes()
    feats = np.ascontiguousarray(ds.features, dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(meta_json)
        fh.write(labels)
        fh.write(feats)


def read_lcf(path) -> EncodedDataset:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise Truncated("file shorter than header")
    magic, version, d, n, n_classes, meta_len = _HEADER.unpack_from(blob)
    if magic != _MAGIC:
        raise BadMagic(f"bad magic {magic!r}")
    if version != 1:
        raise BadMagic(f"unsupported LCF version {version}")
    off = _HEADER.size
    expected = off + meta_len + 4 * n + 4 * n * d
    if len(blob) != expected:
        raise Truncated(f"expected {expected} bytes, found {len(blob)}")
    meta = json.loads(blob[off : off + meta_len].decode("utf-8"))
    off += meta_len
    labels = np.frombuffer(blob, dtype="<u4", count=n, offset=off).astype(np.int64)
    off += 4 * n
    feats = np.frombuffer(blob, dtype="<f4", count=n * d, offset=off)
    feats = feats.reshape(n, d).copy()
    class_names = list(meta["class_names"])
    if len(class_names) != n_classes:
        raise CorruptLabels("class_names length differs from header n_classes")
    if n and labels.max(initial=0) >= n_classes:
        raise CorruptLabels("label >= n_classes")
    ds = EncodedDataset(
        features=feats,
        labels=labels,
        class_names=class_names,
        meta=DatasetMeta(
            encoder_name=meta["encoder_name"],
            latent_dim=d,
            encode_flops_per_sample=int(meta["encode_flops_per_sample"]),
            source_dataset=meta["source_dataset"],
        ),
    )
    return ds.validate()


def concat_ensemble(parts: list[EncodedDataset]) -> EncodedDataset:
    """Horizontal feature concatenation across encoders of the same samples."""
    if not parts:
        raise EmptyData("no datasets to concatenate")
    if len(parts) == 1:
        return parts[0]
    first = parts[0]
    for p in parts[1:]:
        if p.n != first.n:
            raise ShapeMismatch(f"row counts differ: {first.n} vs {p.n}")
        if not np.array_equal(p.labels, first.labels):
            raise LabelMismatch("labels differ row-for-row")
        if p.class_names != first.class_names:
            raise LabelMismatch("class_names differ")
    feats = np.hstack([p.features for p in parts])
    meta = DatasetMeta(
        encoder_name="+".join(p.meta.encoder_name for p in parts),
        latent_dim=feats.shape[1],
        encode_flops_per_sample=sum(p.meta.encode_flops_per_sample for p in parts),
        source_dataset=first.meta.source_dataset,
    )
    return EncodedDataset(feats, first.labels.copy(), list(first.class_names), meta)


def split_dataset(ds: EncodedDataset, fractions=(0.8, 0.1, 0.1), seed: int = 0) -> SplitDataset:
    """Stratified per-class split; floor sizes for val/test, remainder to train."""
    f_train, f_val, f_test = fractions
    if min(fractions) <= 0 and not (f_val == 0 and f_test == 0):
        if min(fractions) < 0:
            raise EmptyData("fractions must be positive")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise EmptyData("fractions must sum to 1")
    rng = np.random.default_rng(seed)
    train_idx, val_idx, test_idx = [], [], []
    warnings: list[str] = []
    for c in range(ds.n_classes):
        rows = np.flatnonzero(ds.labels == c)
        rows = rows[rng.permutation(rows.size)]
        if rows.size < 3 and f_val > 0 and f_test > 0:
            warnings.append(f"class {c} has {rows.size} samples; all kept in train")
            train_idx.append(rows)
            continue
        n_val = int(np.floor(f_val * rows.size))
        n_test = int(np.floor(f_test * rows.size))
        val_idx.append(rows[:n_val])
        test_idx.append(rows[n_val : n_val + n_test])
        train_idx.append(rows[n_val + n_test :])

    def gather(chunks):
        idx = np.concatenate(chunks) if chunks else np.empty(0, dtype=np.int64)
        return ds.subset_rows(np.sort(idx))

    return SplitDataset(
        train=gather(train_idx),
        val=gather(val_idx),
        test=gather(test_idx),
        warnings=tuple(warnings),
    )
