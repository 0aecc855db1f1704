"""Model registry: frozen torchvision encoders with pooled embeddings.

ResNets expose the global-average-pooled output of the final block (and,
optionally, of intermediate blocks via taps); the ViT exposes its class
token. Batch statistics stay frozen (eval mode). When pretrained weights
cannot be fetched, the encoder falls back to seeded random initialization so
exports stay deterministic; callers see the flag and it is recorded in the
output metadata.
"""

from __future__ import annotations

import logging

import torch
from torch import nn
from torchvision import models as tvm

from .errors import UnknownModel

log = logging.getLogger("encoder_export")

# name -> (constructor, weights enum, final width, per-tap widths)
_RESNET_TAPS = {1: 64, 2: 128, 3: 256, 4: 512}
_RESNET50_TAPS = {1: 256, 2: 512, 3: 1024, 4: 2048}

REGISTRY = {
    "resnet18": (tvm.resnet18, "ResNet18_Weights", 512, _RESNET_TAPS),
    "resnet34": (tvm.resnet34, "ResNet34_Weights", 512, _RESNET_TAPS),
    "resnet50": (tvm.resnet50, "ResNet50_Weights", 2048, _RESNET50_TAPS),
    "vit_b_16": (tvm.vit_b_16, "ViT_B_16_Weights", 768, {}),
}

# Approximate forward cost at 224x224, in flops (2 per multiply-accumulate).
_FLOPS_224 = {
    "resnet18": int(2 * 1.82e9),
    "resnet34": int(2 * 3.68e9),
    "resnet50": int(2 * 4.12e9),
    "vit_b_16": int(2 * 17.6e9),
}


def _entry(name: str):
    try:
        return REGISTRY[name]
    except KeyError:
        raise UnknownModel(f"unknown model {name!r}; known: {sorted(REGISTRY)}") from None


def embedding_width(name: str, taps: tuple[int, ...] = ()) -> int:
    _, _, final, tap_widths = _entry(name)
    if not taps:
        return final
    return sum(tap_widths[t] for t in taps)


def valid_taps(name: str) -> set[int]:
    return set(_entry(name)[3])


def flops_per_sample(name: str, image_size: int) -> int:
    _entry(name)
    if image_size != 224:
        return 0
    return _FLOPS_224.get(name, 0)


class _ResNetEmbedding(nn.Module):
    """Pooled embeddings from a ResNet backbone: the final block by default,
    or the concatenation of the requested intermediate blocks."""

    def __init__(self, backbone: nn.Module, taps: tuple[int, ...]):
        super().__init__()
        self.backbone = backbone
        self.taps = taps

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        b = self.backbone
        x = b.maxpool(b.relu(b.bn1(b.conv1(x))))
        outs = []
        for i, layer in enumerate((b.layer1, b.layer2, b.layer3, b.layer4), start=1):
            x = layer(x)
            if i in self.taps:
                outs.append(torch.flatten(b.avgpool(x), 1))
        if not self.taps:
            outs = [torch.flatten(b.avgpool(x), 1)]
        return torch.cat(outs, dim=1)


def load_encoder(spec) -> tuple[nn.Module, bool]:
    """(embedding module, pretrained weights actually loaded)."""
    ctor, weights_attr, _, _ = _entry(spec.model)
    pretrained_ok = False
    model = None
    if spec.pretrained:
        try:
            weights = getattr(tvm, weights_attr).DEFAULT
            model = ctor(weights=weights)
            pretrained_ok = True
        except Exception as exc:  # weight files unavailable (offline cache miss)
            log.warning("pretrained weights for %s unavailable (%s); "
                        "falling back to seeded random initialization",
                        spec.model, exc)
    if model is None:
        torch.manual_seed(spec.init_seed)
        model = ctor(weights=None)

    if spec.model.startswith("resnet"):
        return _ResNetEmbedding(model, spec.taps), pretrained_ok
    # ViT: drop the classification head to expose the class token.
    model.heads = nn.Identity()
    return model, pretrained_ok
