"""Synthetic encoded datasets with a controllable inter-class similarity knob.

Class prototypes are p_c = sqrt(rho) * u + sqrt(1 - rho) * v_c with u a fixed
seeded unit vector and v_c independent seeded unit vectors orthogonalized
against u, so the expected pairwise prototype cosine equals rho. Samples are
prototypes plus isotropic Gaussian noise of scale sigma.

When ``shared_noise_scale`` is positive, an additional noise component of
scale shared_noise_scale * sqrt(rho) is drawn inside a fixed seeded
low-dimensional subspace common to all classes. High-similarity regimes then
also share their principal variation directions across tasks, which is what
makes their task subspaces overlap; with the default scale of 0 the generator
is exactly the plain isotropic mixture.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadConfig
from .featurestore import EncodedDataset, make_dataset


@dataclass(frozen=True)
class SynthConfig:
    latent_dim: int
    n_classes: int
    samples_per_class: int
    test_samples_per_class: int
    target_similarity: float  # rho
    within_class_noise: float  # sigma
    seed: int
    shared_noise_scale: float = 0.0
    shared_noise_dim: int = 16

    def validate(self) -> "SynthConfig":
        if self.latent_dim < 8:
            raise BadConfig("latent_dim must be >= 8")
        if self.n_classes < 2:
            raise BadConfig("n_classes must be >= 2")
        if not 0.0 <= self.target_similarity <= 1.0:
            raise BadConfig("target_similarity must lie in [0, 1]")
        if self.within_class_noise < 0:
            raise BadConfig("within_class_noise must be >= 0")
        if self.samples_per_class < 1 or self.test_samples_per_class < 0:
            raise BadConfig("sample counts must be positive")
        if self.shared_noise_scale < 0 or not 1 <= self.shared_noise_dim < self.latent_dim:
            raise BadConfig("bad shared-noise settings")
        return self


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def _rngs(cfg: SynthConfig):
    proto_ss, sample_ss = np.random.SeedSequence(cfg.seed).spawn(2)
    return np.random.default_rng(proto_ss), np.random.default_rng(sample_ss)


def _draw_prototypes(rng: np.random.Generator, cfg: SynthConfig) -> np.ndarray:
    d, rho = cfg.latent_dim, cfg.target_similarity
    u = _unit(rng.normal(size=d))
    protos = np.empty((cfg.n_classes, d))
    for c in range(cfg.n_classes):
        v = rng.normal(size=d)
        v = _unit(v - (v @ u) * u)
        protos[c] = np.sqrt(rho) * u + np.sqrt(1.0 - rho) * v
    return protos


def prototypes(cfg: SynthConfig) -> np.ndarray:
    """The (n_classes, d) prototype matrix the generator samples around."""
    cfg.validate()
    rng, _ = _rngs(cfg)
    return _draw_prototypes(rng, cfg)


def generate_synthetic(cfg: SynthConfig) -> EncodedDataset:
    """Deterministic synthetic dataset; train and test rows concatenated.

    The first samples_per_class rows of each class are intended as train
    data, the trailing test_samples_per_class rows as test; callers slice
    via split_dataset or by position.
    """
    cfg.validate()
    proto_rng, rng = _rngs(cfg)
    d, rho, sigma = cfg.latent_dim, cfg.target_similarity, cfg.within_class_noise
    protos = _draw_prototypes(proto_rng, cfg)
    W = None
    if cfg.shared_noise_scale > 0:
        W, _ = np.linalg.qr(proto_rng.normal(size=(d, cfg.shared_noise_dim)))
    n_per = cfg.samples_per_class + cfg.test_samples_per_class
    feats = np.empty((cfg.n_classes * n_per, d), dtype=np.float32)
    labels = np.empty(cfg.n_classes * n_per, dtype=np.int64)
    for c in range(cfg.n_classes):
        rows = protos[c] + sigma * rng.normal(size=(n_per, d))
        if W is not None:
            amp = cfg.shared_noise_scale * np.sqrt(rho)
            rows = rows + amp * rng.normal(size=(n_per, cfg.shared_noise_dim)) @ W.T
        feats[c * n_per : (c + 1) * n_per] = rows.astype(np.float32)
        labels[c * n_per : (c + 1) * n_per] = c
    return make_dataset(
        feats,
        labels,
        class_names=[f"class_{c}" for c in range(cfg.n_classes)],
        encoder_name=f"synth(rho={rho},sigma={sigma},seed={cfg.seed})",
        encode_flops_per_sample=0,
        source_dataset="synthetic",
    )
