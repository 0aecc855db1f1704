"""Per-class replay buffer and the balanced epoch sampler.

Every built epoch contains exactly the same number of samples for each seen
class (new and buffered), oversampling or subsampling buffered classes as
needed so that all classes are drawn with equal probability.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DuplicateClass, EmptyData
from .featurestore import EncodedDataset


@dataclass
class ReplayBuffer:
    capacity_per_class: int
    per_class: dict[int, np.ndarray] = field(default_factory=dict)

    @property
    def classes(self) -> list[int]:
        return sorted(self.per_class)

    def n_stored(self) -> int:
        return sum(v.shape[0] for v in self.per_class.values())


def update_buffer(buf: ReplayBuffer, task_train: EncodedDataset, seed: int) -> ReplayBuffer:
    """Store up to capacity rows per new class, chosen uniformly w/o replacement."""
    rng = np.random.default_rng(seed)
    m = buf.capacity_per_class
    for c in sorted(int(c) for c in np.unique(task_train.labels)):
        if c in buf.per_class:
            raise DuplicateClass(f"class {c} already buffered")
        rows = np.flatnonzero(task_train.labels == c)
        if rows.size > m:
            rows = rng.choice(rows, size=m, replace=False)
        buf.per_class[c] = task_train.features[np.sort(rows)].copy()
    return buf


def build_balanced_epoch(
    task_train: EncodedDataset, buf: ReplayBuffer | None, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """One epoch with exactly equal per-class sample counts, shuffled.

    The per-class count s is the largest new-class size; smaller new classes
    are oversampled with replacement, buffered classes are resampled with
    replacement when s exceeds their stored count and subsampled otherwise.
    """
    if task_train.n == 0:
        raise EmptyData("task has no training rows")
    rng = np.random.default_rng(seed)
    new_classes = sorted(int(c) for c in np.unique(task_train.labels))
    s = max(int((task_train.labels == c).sum()) for c in new_classes)

    xs, ys = [], []
    for c in new_classes:
        rows = np.flatnonzero(task_train.labels == c)
        if rows.size < s:
            rows = np.concatenate([rows, rng.choice(rows, size=s - rows.size, replace=True)])
        xs.append(task_train.features[rows])
        ys.append(np.full(s, c, dtype=np.int64))
    if buf is not None:
        for c in buf.classes:
            if c in new_classes:
                continue
            stored = buf.per_class[c]
            if s > stored.shape[0]:
                idx = rng.choice(stored.shape[0], size=s, replace=True)
            elif s < stored.shape[0]:
                idx = rng.choice(stored.shape[0], size=s, replace=False)
            else:
                idx = np.arange(s)
            xs.append(stored[idx])
            ys.append(np.full(s, c, dtype=np.int64))

    X = np.concatenate(xs)
    y = np.concatenate(ys)
    order = rng.permutation(y.size)
    return X[order], y[order]
