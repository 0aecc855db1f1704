"""Encode class-per-folder image datasets through frozen vision models.

Images are gathered from one subdirectory per class (labels are the sorted
folder order, dense from 0), preprocessed deterministically (resize, no
augmentation, fixed file order), and pushed through the requested encoder in
eval mode with gradients disabled. The result is one LCF v1 file whose
feature width equals the model's embedding width.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field

import numpy as np
import torch
from PIL import Image, UnidentifiedImageError

from .errors import BadSpec, NoImages, UnknownModel
from .lcf import LCFData, write_lcf
from .models import embedding_width, flops_per_sample, load_encoder, valid_taps

log = logging.getLogger("encoder_export")

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)
_EXTENSIONS = {".jpg", ".jpeg", ".png", ".bmp", ".gif", ".webp"}


@dataclass(frozen=True)
class ExportSpec:
    model: str
    image_size: int = 224
    mean: tuple[float, float, float] = IMAGENET_MEAN
    std: tuple[float, float, float] = IMAGENET_STD
    out_path: str = "features.lcf"
    taps: tuple[int, ...] = field(default=())
    batch_size: int = 32
    pretrained: bool = True
    init_seed: int = 0  # weight seed when pretrained weights are unavailable

    def validate(self) -> "ExportSpec":
        if self.image_size <= 0:
            raise BadSpec("image_size must be positive")
        if self.batch_size <= 0:
            raise BadSpec("batch_size must be positive")
        allowed = valid_taps(self.model)
        for tap in self.taps:
            if tap not in allowed:
                raise BadSpec(f"tap {tap} invalid for {self.model}; valid: {sorted(allowed)}")
        return self


def list_images(folder) -> tuple[list[tuple[str, int]], list[str]]:
    """(path, class_id) pairs in deterministic order plus sorted class names."""
    classes = sorted(
        entry for entry in os.listdir(folder)
        if os.path.isdir(os.path.join(folder, entry))
    )
    if not classes:
        raise NoImages(f"{folder} has no class subdirectories")
    pairs = []
    for cid, cls in enumerate(classes):
        cdir = os.path.join(folder, cls)
        for name in sorted(os.listdir(cdir)):
            if os.path.splitext(name)[1].lower() in _EXTENSIONS:
                pairs.append((os.path.join(cdir, name), cid))
    return pairs, classes


def _load_tensor(path: str, spec: ExportSpec) -> torch.Tensor | None:
    try:
        with Image.open(path) as img:
            img = img.convert("RGB").resize(
                (spec.image_size, spec.image_size), Image.BILINEAR)
    except (UnidentifiedImageError, OSError) as exc:
        log.warning("skipping unreadable image %s: %s", path, exc)
        return None
    arr = np.asarray(img, dtype=np.float32) / 255.0
    arr = (arr - np.asarray(spec.mean, dtype=np.float32)) / np.asarray(
        spec.std, dtype=np.float32)
    return torch.from_numpy(arr.transpose(2, 0, 1))


def export_features(spec: ExportSpec, folder) -> LCFData:
    """Encode every image under `folder` and write spec.out_path as LCF v1."""
    spec.validate()
    pairs, class_names = list_images(folder)

    encoder, pretrained_ok = load_encoder(spec)
    encoder.eval()
    torch.set_grad_enabled(False)

    tensors, labels = [], []
    for path, cid in pairs:
        t = _load_tensor(path, spec)
        if t is not None:
            tensors.append(t)
            labels.append(cid)
    if not tensors:
        raise NoImages(f"{folder} yielded no readable images")

    chunks = []
    for start in range(0, len(tensors), spec.batch_size):
        batch = torch.stack(tensors[start:start + spec.batch_size])
        chunks.append(encoder(batch).numpy().astype(np.float32))
    features = np.concatenate(chunks)

    flops = flops_per_sample(spec.model, spec.image_size)
    if flops == 0:
        log.warning("no flop estimate for %s at size %d; recording 0",
                    spec.model, spec.image_size)
    data = LCFData(
        features=features,
        labels=np.asarray(labels, dtype=np.int64),
        encoder_name=_encoder_label(spec),
        source_dataset=os.path.basename(os.path.abspath(folder)),
        class_names=tuple(class_names),
        encode_flops_per_sample=flops,
        extra_meta={"pretrained": pretrained_ok, "image_size": spec.image_size},
    )
    assert data.d == embedding_width(spec.model, spec.taps)
    write_lcf(data, spec.out_path)
    return data


def _encoder_label(spec: ExportSpec) -> str:
    if spec.taps:
        return f"{spec.model}@taps{'-'.join(map(str, spec.taps))}"
    return spec.model
