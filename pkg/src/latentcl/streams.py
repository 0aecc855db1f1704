"""Class-incremental and multi-dataset stream construction."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import EmptyData, TooManyTasks
from .featurestore import DatasetMeta, EncodedDataset, SplitDataset


@dataclass(frozen=True)
class TaskSpec:
    task_id: int
    class_ids: tuple[int, ...]  # sorted, disjoint across tasks
    train: EncodedDataset
    val: EncodedDataset
    test: EncodedDataset


@dataclass(frozen=True)
class Stream:
    tasks: tuple[TaskSpec, ...]
    ordering_seed: int
    n_classes_total: int


def build_class_incremental(split: SplitDataset, n_tasks: int, ordering_seed: int) -> Stream:
    """Partition a seeded class permutation into n_tasks contiguous groups.

    Remainder classes go one-per-task to the earliest tasks.
    """
    n_classes = split.train.n_classes
    if n_tasks > n_classes:
        raise TooManyTasks(f"{n_tasks} tasks for {n_classes} classes")
    rng = np.random.default_rng(ordering_seed)
    order = rng.permutation(n_classes)
    base, rem = divmod(n_classes, n_tasks)
    tasks = []
    start = 0
    for t in range(n_tasks):
        size = base + (1 if t < rem else 0)
        ids = tuple(sorted(int(c) for c in order[start : start + size]))
        start += size
        tasks.append(
            TaskSpec(
                task_id=t,
                class_ids=ids,
                train=split.train.restrict_to_classes(ids),
                val=split.val.restrict_to_classes(ids),
                test=split.test.restrict_to_classes(ids),
            )
        )
    return Stream(tasks=tuple(tasks), ordering_seed=ordering_seed, n_classes_total=n_classes)


def _relabel(ds: EncodedDataset, offset: int, class_names: list[str]) -> EncodedDataset:
    meta = DatasetMeta(
        encoder_name=ds.meta.encoder_name,
        latent_dim=ds.meta.latent_dim,
        encode_flops_per_sample=ds.meta.encode_flops_per_sample,
        source_dataset=ds.meta.source_dataset,
    )
    return replace(ds, labels=ds.labels + offset, class_names=class_names, meta=meta)


def build_multi_dataset(splits: list[SplitDataset]) -> Stream:
    """One task per dataset; class ids shifted so tasks are class-disjoint."""
    if not splits:
        raise EmptyData("no datasets")
    all_names: list[str] = []
    for s in splits:
        all_names.extend(
            f"{s.train.meta.source_dataset}/{n}" for n in s.train.class_names
        )
    tasks = []
    offset = 0
    for t, s in enumerate(splits):
        c = s.train.n_classes
        ids = tuple(range(offset, offset + c))
        tasks.append(
            TaskSpec(
                task_id=t,
                class_ids=ids,
                train=_relabel(s.train, offset, all_names),
                val=_relabel(s.val, offset, all_names),
                test=_relabel(s.test, offset, all_names),
            )
        )
        offset += c
    return Stream(tasks=tuple(tasks), ordering_seed=0, n_classes_total=offset)
