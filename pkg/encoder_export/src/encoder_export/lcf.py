"""Reader/writer for LCF v1, the binary latent-feature container.

Layout (little-endian): magic "LCF1" | u32 version=1 | u32 d | u64 n |
u32 n_classes | u32 meta_len | meta_len bytes UTF-8 JSON | n x u32 labels |
n*d x f32 features row-major. The JSON metadata holds encoder_name,
encode_flops_per_sample, source_dataset, and class_names.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import BadMagic, Truncated

_MAGIC = b"LCF1"
_VERSION = 1
_HEADER = struct.Struct("<4sIIQII")


@dataclass(frozen=True)
class LCFData:
    features: np.ndarray  # (n, d) float32
    labels: np.ndarray  # (n,) int64, dense from 0
    encoder_name: str
    source_dataset: str
    class_names: tuple[str, ...]
    encode_flops_per_sample: int = 0
    extra_meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]


def write_lcf(data: LCFData, path) -> None:
    features = np.ascontiguousarray(data.features, dtype=np.float32)
    labels = np.ascontiguousarray(data.labels, dtype=np.uint32)
    meta = {
        "encoder_name": data.encoder_name,
        "encode_flops_per_sample": int(data.encode_flops_per_sample),
        "source_dataset": data.source_dataset,
        "class_names": list(data.class_names),
    }
    meta.update(data.extra_meta)
    blob = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    header = _HEADER.pack(_MAGIC, _VERSION, features.shape[1],
                          features.shape[0], len(data.class_names), len(blob))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(blob)
        fh.write(labels.tobytes())
        fh.write(features.tobytes())


def read_lcf(path) -> LCFData:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise Truncated(f"{path}: {len(raw)} bytes is shorter than the header")
    magic, version, d, n, n_classes, meta_len = _HEADER.unpack_from(raw)
    if magic != _MAGIC or version != _VERSION:
        raise BadMagic(f"{path}: bad magic/version {magic!r} v{version}")
    offset = _HEADER.size
    expected = offset + meta_len + n * 4 + n * d * 4
    if len(raw) != expected:
        raise Truncated(f"{path}: expected {expected} bytes, found {len(raw)}")
    meta = json.loads(raw[offset:offset + meta_len].decode("utf-8"))
    offset += meta_len
    labels = np.frombuffer(raw, dtype="<u4", count=n, offset=offset).astype(np.int64)
    offset += n * 4
    features = np.frombuffer(raw, dtype="<f4", count=n * d, offset=offset)
    known = {"encoder_name", "encode_flops_per_sample", "source_dataset", "class_names"}
    return LCFData(
        features=features.reshape(n, d).copy(),
        labels=labels,
        encoder_name=meta["encoder_name"],
        source_dataset=meta["source_dataset"],
        class_names=tuple(meta["class_names"]),
        encode_flops_per_sample=meta["encode_flops_per_sample"],
        extra_meta={k: v for k, v in meta.items() if k not in known},
    )
