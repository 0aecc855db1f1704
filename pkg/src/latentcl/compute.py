"""Analytic FLOP cost model for latent ER, end2end ER, NMC and SLDA.

Conventions: 2 flops per multiply-accumulate; a backward pass costs twice
the forward pass, so one training step is 3x the forward cost.
"""

from __future__ import annotations

from dataclasses import dataclass

BACKWARD_MULTIPLIER = 2


@dataclass(frozen=True)
class CostModel:
    c_enc: float  # encoder forward flops per sample
    n_z: int  # latent dim
    hidden: int = 1024


@dataclass(frozen=True)
class TaskLoad:
    n_classes: int
    samples_per_class: int

    @property
    def n_samples(self) -> int:
        return self.n_classes * self.samples_per_class


def mlp_flops_per_sample(d: int, h: int, n_classes: int) -> tuple[float, float]:
    """(forward, train_step) flops of the d -> h -> n_classes head."""
    forward = 2.0 * (d * h + h * n_classes)
    return forward, forward * (1 + BACKWARD_MULTIPLIER)


def _epoch_sizes(schedule: list[TaskLoad]) -> list[tuple[int, int]]:
    """Per task: (classes seen so far, balanced epoch size).

    The balanced sampler draws the new task's per-class count for every seen
    class, so the epoch grows linearly with the number of seen classes.
    """
    out = []
    seen = 0
    for load in schedule:
        seen += load.n_classes
        out.append((seen, seen * load.samples_per_class))
    return out


def latent_er_cost(
    schedule: list[TaskLoad], epochs_per_task: int, er_size: int, cost: CostModel
) -> tuple[list[float], list[float]]:
    """Per-task and cumulative flops: encode each sample once, then train the
    small head on balanced epochs. er_size never changes epoch sizes (buffered
    classes are re-sampled up or down to the new task's per-class count)."""
    del er_size
    per_task = []
    for load, (seen, epoch_size) in zip(schedule, _epoch_sizes(schedule)):
        _, train_step = mlp_flops_per_sample(cost.n_z, cost.hidden, seen)
        per_task.append(cost.c_enc * load.n_samples + epochs_per_task * epoch_size * train_step)
    return per_task, _cumulative(per_task)


def end2end_er_cost(
    schedule: list[TaskLoad], epochs_per_task: int, er_size: int, cost: CostModel
) -> tuple[list[float], list[float]]:
    """Every training sample pays a full encoder forward+backward each epoch."""
    del er_size
    per_task = []
    for load, (seen, epoch_size) in zip(schedule, _epoch_sizes(schedule)):
        _, head_step = mlp_flops_per_sample(cost.n_z, cost.hidden, seen)
        per_sample = cost.c_enc * (1 + BACKWARD_MULTIPLIER) + head_step
        per_task.append(epochs_per_task * epoch_size * per_sample)
    return per_task, _cumulative(per_task)


def metric_classifier_cost(
    kind: str, n_samples: int, n_classes: int, cost: CostModel,
    corrected_covariance_term: bool = False,
) -> float:
    """Total flops of NMC or SLDA over n_samples.

    NMC: c_enc*|D| + |D|*N_z + N_z*N_c. SLDA adds the covariance accumulation
    term (3*N_z*|D|)^2 (kept literally; pass corrected_covariance_term=True
    for the 9*N_z^2*|D| reading) and the N_z^3 inversion.
    """
    nz = cost.n_z
    base = cost.c_enc * n_samples + n_samples * nz + nz * n_classes
    if kind == "nmc":
        return base
    if kind == "slda":
        if corrected_covariance_term:
            cov = 9.0 * nz * nz * n_samples
        else:
            cov = (3.0 * nz * n_samples) ** 2
        return base + cov + float(nz) ** 3
    raise ValueError(f"unknown metric classifier kind {kind!r}")


def _cumulative(series: list[float]) -> list[float]:
    out, total = [], 0.0
    for v in series:
        total += v
        out.append(total)
    return out
