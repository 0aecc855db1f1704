"""Experiment orchestration: config parsing, cell enumeration, report emission.

A cell is one (dataset, classifier, er_size, ordering_seed) combination; MLP
cells vary over er_sizes while the metric classifiers ignore them. Every cell
yields a JSON record and one row of the aggregate CSV; across-ordering means
and standard deviations go into a summary CSV.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from .classifiers import Hyperparams, tune_first_task
from .compute import CostModel, TaskLoad, end2end_er_cost, latent_er_cost
from .errors import BadConfig, UnknownKey
from .featurestore import read_lcf, split_dataset
from .metrics import ClassifierSpec, run_protocol, metrics_report
from .replay import build_balanced_epoch
from .similarity import average_overlap, class_prototype_similarity
from .streams import build_class_incremental, build_multi_dataset
from .synth import SynthConfig, generate_synthetic

CSV_COLUMNS = [
    "dataset", "encoder", "classifier", "er_size", "ordering_seed",
    "a_cl", "a_cl_reinit", "a_nmc", "a_slda", "a_task_cl", "a_task_iid",
    "a_iid", "a_task_fs", "forgetting", "relative_forgetting", "transfer",
    "interference", "interference_total", "overlap_avg", "class_sim_avg",
    "latent_flops", "end2end_flops",
]

_CONFIG_KEYS = {
    "datasets", "n_tasks", "ordering_seeds", "er_sizes", "classifiers",
    "grid", "epochs", "output_dir", "seed", "split_fractions", "k",
    "epsilon", "hidden", "stream", "fewshot_epochs",
}
_SYNTH_KEYS = {
    "latent_dim", "n_classes", "samples_per_class", "test_samples_per_class",
    "target_similarity", "within_class_noise", "seed", "shared_noise_scale",
    "shared_noise_dim",
}
_GRID_KEYS = {"learning_rate", "weight_decay", "anneal", "epochs", "batch_size", "momentum"}


@dataclass(frozen=True)
class DatasetSource:
    name: str
    path: str | None = None
    synth: SynthConfig | None = None

    def load(self):
        if self.path is not None:
            return read_lcf(self.path)
        return generate_synthetic(self.synth)


@dataclass
class ExperimentConfig:
    datasets: list[DatasetSource]
    n_tasks: int = 5
    ordering_seeds: list[int] = field(default_factory=lambda: [0])
    er_sizes: list[int] = field(default_factory=lambda: [2])
    classifiers: list[str] = field(default_factory=lambda: ["mlp", "nmc", "slda"])
    grid: list[Hyperparams] = field(default_factory=lambda: [Hyperparams()])
    epochs: int = 10
    output_dir: str = "results"
    seed: int = 0
    split_fractions: tuple[float, float, float] = (0.8, 0.1, 0.1)
    k: int = 20
    epsilon: float = 1e-4
    hidden: int = 1024
    stream: str = "class_incremental"  # or "multi_dataset"
    fewshot_epochs: int = 20

    def validate(self) -> "ExperimentConfig":
        if not self.datasets:
            raise BadConfig("no datasets configured")
        if not self.ordering_seeds:
            raise BadConfig("ordering_seeds must be non-empty")
        if any(e < 0 for e in self.er_sizes):
            raise BadConfig("er_sizes must be >= 0")
        if "mlp" in self.classifiers and not self.er_sizes:
            raise BadConfig("er_sizes must be non-empty when the MLP is requested")
        if self.stream not in ("class_incremental", "multi_dataset"):
            raise BadConfig(f"unknown stream kind {self.stream!r}")
        if not self.grid:
            raise BadConfig("hyperparameter grid is empty")
        return self


def _reject_unknown(d: dict, allowed: set, where: str) -> None:
    for key in d:
        if key not in allowed:
            raise UnknownKey(f"unknown key {key!r} in {where}")


def parse_synth_config(raw: dict) -> SynthConfig:
    _reject_unknown(raw, _SYNTH_KEYS, "synth config")
    try:
        return SynthConfig(**raw).validate()
    except TypeError as exc:
        raise BadConfig(str(exc)) from exc


def parse_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> ExperimentConfig:
    _reject_unknown(raw, _CONFIG_KEYS, "experiment config")
    datasets = []
    for i, entry in enumerate(raw.get("datasets", [])):
        _reject_unknown(entry, {"name", "path", "synth"}, f"datasets[{i}]")
        if ("path" in entry) == ("synth" in entry):
            raise BadConfig(f"datasets[{i}] needs exactly one of path/synth")
        synth = parse_synth_config(entry["synth"]) if "synth" in entry else None
        name = entry.get("name") or (entry.get("path") or f"synth_{i}")
        datasets.append(DatasetSource(name=name, path=entry.get("path"), synth=synth))
    grid = []
    for i, g in enumerate(raw.get("grid", [{}])):
        _reject_unknown(g, _GRID_KEYS, f"grid[{i}]")
        try:
            grid.append(Hyperparams(**g).validate())
        except TypeError as exc:
            raise BadConfig(str(exc)) from exc
    kwargs = {k: v for k, v in raw.items() if k not in ("datasets", "grid")}
    if "split_fractions" in kwargs:
        kwargs["split_fractions"] = tuple(kwargs["split_fractions"])
    try:
        cfg = ExperimentConfig(datasets=datasets, grid=grid, **kwargs)
    except TypeError as exc:
        raise BadConfig(str(exc)) from exc
    # Propagate epoch count into grid points that did not pin it themselves.
    cfg.grid = [
        hp if "epochs" in raw.get("grid", [{}])[i] else
        Hyperparams(hp.learning_rate, hp.weight_decay, hp.anneal,
                    cfg.epochs, hp.batch_size, hp.momentum)
        for i, hp in enumerate(cfg.grid)
    ]
    return cfg.validate()


# ---------------------------------------------------------------------------
# Execution
# ---------------------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        if math.isnan(v):
            return ""
        return repr(v)
    return str(v)


def _stream_for(ds, cfg: ExperimentConfig, ordering_seed: int):
    split = split_dataset(ds, cfg.split_fractions, seed=cfg.seed)
    return build_class_incremental(split, cfg.n_tasks, ordering_seed)


def _tuned_hp(stream, cfg: ExperimentConfig, seed: int) -> Hyperparams:
    if len(cfg.grid) == 1:
        return cfg.grid[0]
    task0 = stream.tasks[0]

    def factory(hp):
        def builder(epoch_seed):
            return build_balanced_epoch(task0.train, None, epoch_seed)

        return builder

    return tune_first_task(task0, task0.val, cfg.grid, factory, seed, cfg.hidden)


def _flop_estimates(stream, cfg: ExperimentConfig, hp: Hyperparams, er_size: int, meta):
    schedule = []
    for task in stream.tasks:
        counts = [int((task.train.labels == c).sum()) for c in task.class_ids]
        schedule.append(TaskLoad(n_classes=len(task.class_ids),
                                 samples_per_class=max(counts)))
    cost = CostModel(c_enc=meta.encode_flops_per_sample,
                     n_z=meta.latent_dim, hidden=cfg.hidden)
    _, latent = latent_er_cost(schedule, hp.epochs, er_size, cost)
    _, end2end = end2end_er_cost(schedule, hp.epochs, er_size, cost)
    return latent[-1], end2end[-1]


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Run every cell; returns {"cells": [...], "csv_path": ..., "summary_path": ...}."""
    cfg.validate()
    os.makedirs(cfg.output_dir, exist_ok=True)
    cells = []
    failures = []
    if cfg.stream == "multi_dataset":
        try:
            cells.extend(_run_multi_dataset(cfg))
        except Exception as exc:
            failures.append({"dataset": "multi", "error": f"{type(exc).__name__}: {exc}"})
    else:
        for source in cfg.datasets:
            try:
                ds = source.load()
            except Exception as exc:  # keep remaining datasets running
                failures.append({
                    "dataset": source.name,
                    "error": f"{type(exc).__name__}: {exc}",
                })
                continue
            for ordering_seed in cfg.ordering_seeds:
                try:
                    cells.extend(_run_dataset_seed(source, ds, cfg, ordering_seed))
                except Exception as exc:  # keep remaining cells running
                    failures.append({
                        "dataset": source.name,
                        "ordering_seed": ordering_seed,
                        "error": f"{type(exc).__name__}: {exc}",
                    })
    csv_path = os.path.join(cfg.output_dir, "cells.csv")
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for cell in cells:
            writer.writerow([_fmt(cell.get(col)) for col in CSV_COLUMNS])
    for cell in cells:
        name = f"{cell['dataset']}_{cell['classifier']}_er{cell['er_size']}_seed{cell['ordering_seed']}.json"
        with open(os.path.join(cfg.output_dir, _safe(name)), "w") as fh:
            json.dump(cell, fh, sort_keys=True, indent=1, default=_json_default)
    summary_path = os.path.join(cfg.output_dir, "summary.csv")
    _write_summary(cells, summary_path)
    if failures:
        with open(os.path.join(cfg.output_dir, "failures.json"), "w") as fh:
            json.dump(failures, fh, sort_keys=True, indent=1)
    return {"cells": cells, "csv_path": csv_path, "summary_path": summary_path,
            "failures": failures}


def _safe(name: str) -> str:
    return "".join(c if c.isalnum() or c in "._-" else "-" for c in name)


def _json_default(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"not serializable: {type(v)}")


def _run_dataset_seed(source, ds, cfg: ExperimentConfig, ordering_seed: int) -> list[dict]:
    stream = _stream_for(ds, cfg, ordering_seed)
    hp = _tuned_hp(stream, cfg, cfg.seed)
    spec = ClassifierSpec(kind="mlp", hyperparams=hp, hidden=cfg.hidden,
                          epsilon=cfg.epsilon, fewshot_epochs=cfg.fewshot_epochs)

    overlap = average_overlap(
        [t.train.features for t in stream.tasks],
        min(cfg.k, min(t.train.n - 1 for t in stream.tasks), ds.d),
    )
    _, class_sim = class_prototype_similarity(ds)

    a_nmc = a_slda = math.nan
    metric_cells = []
    for kind in ("nmc", "slda"):
        if kind not in cfg.classifiers:
            continue
        mspec = ClassifierSpec(kind=kind, epsilon=cfg.epsilon)
        A, a_final = run_protocol(stream, mspec, "CL", 0, cfg.seed)
        if kind == "nmc":
            a_nmc = a_final
        else:
            a_slda = a_final
        atc = float(np.diag(A.values).mean())
        metric_cells.append({
            "dataset": source.name,
            "encoder": ds.meta.encoder_name,
            "classifier": kind,
            "er_size": 0,
            "ordering_seed": ordering_seed,
            "a_cl": a_final,
            "a_task_cl": atc,
            "forgetting": atc - a_final,
            "relative_forgetting": _safe_rel_forgetting(A),
            "overlap_avg": overlap,
            "class_sim_avg": class_sim,
            "accuracy_matrix": A.values,
        })

    cells = []
    if "mlp" in cfg.classifiers:
        a_task_iid = run_protocol(stream, spec, "task-iid", 0, cfg.seed)
        a_iid = run_protocol(stream, spec, "iid", 0, cfg.seed)
        a_task_fs = run_protocol(stream, spec, "few-shot", 0, cfg.seed)
        for er_size in cfg.er_sizes:
            A, a_cl = run_protocol(stream, spec, "CL", er_size, cfg.seed)
            _, a_cl_reinit = run_protocol(stream, spec, "CL-reinit", er_size, cfg.seed)
            report = metrics_report(
                A, a_cl, a_cl_reinit, a_iid, a_task_iid, a_task_fs,
                a_nmc=a_nmc, a_slda=a_slda, er_size=er_size,
                ordering_seed=ordering_seed,
            )
            latent_flops, end2end_flops = _flop_estimates(stream, cfg, hp, er_size, ds.meta)
            cell = {
                "dataset": source.name,
                "encoder": ds.meta.encoder_name,
                "classifier": "mlp",
                "overlap_avg": overlap,
                "class_sim_avg": class_sim,
                "latent_flops": latent_flops,
                "end2end_flops": end2end_flops,
                "accuracy_matrix": A.values,
            }
            cell.update(asdict(report))
            cells.append(cell)
    return cells + metric_cells


def _run_multi_dataset(cfg: ExperimentConfig) -> list[dict]:
    """One task per dataset; hyperparameters tuned per task, not just task 0."""
    splits = [split_dataset(src.load(), cfg.split_fractions, seed=cfg.seed)
              for src in cfg.datasets]
    stream = build_multi_dataset(splits)
    name = "multi:" + "+".join(src.name for src in cfg.datasets)

    hp_schedule = []
    for task in stream.tasks:
        def factory(hp, task=task):
            def builder(epoch_seed):
                return build_balanced_epoch(task.train, None, epoch_seed)

            return builder

        if len(cfg.grid) == 1:
            hp_schedule.append(cfg.grid[0])
        else:
            hp_schedule.append(
                tune_first_task(task, task.val, cfg.grid, factory, cfg.seed, cfg.hidden)
            )
    spec = ClassifierSpec(kind="mlp", hyperparams=hp_schedule[0], hidden=cfg.hidden,
                          epsilon=cfg.epsilon, fewshot_epochs=cfg.fewshot_epochs)

    overlap = average_overlap(
        [t.train.features for t in stream.tasks],
        min(cfg.k, min(t.train.n - 1 for t in stream.tasks),
            stream.tasks[0].train.d),
    )

    a_nmc = a_slda = math.nan
    cells = []
    metric_cells = []
    for kind in ("nmc", "slda"):
        if kind not in cfg.classifiers:
            continue
        mspec = ClassifierSpec(kind=kind, epsilon=cfg.epsilon)
        A, a_final = run_protocol(stream, mspec, "CL", 0, cfg.seed)
        if kind == "nmc":
            a_nmc = a_final
        else:
            a_slda = a_final
        atc = float(np.diag(A.values).mean())
        metric_cells.append({
            "dataset": name,
            "encoder": stream.tasks[0].train.meta.encoder_name,
            "classifier": kind,
            "er_size": 0,
            "ordering_seed": 0,
            "a_cl": a_final,
            "a_task_cl": atc,
            "forgetting": atc - a_final,
            "relative_forgetting": _safe_rel_forgetting(A),
            "overlap_avg": overlap,
            "accuracy_matrix": A.values,
        })

    if "mlp" in cfg.classifiers:
        a_task_iid = run_protocol(stream, spec, "task-iid", 0, cfg.seed, hp_schedule)
        a_iid = run_protocol(stream, spec, "iid", 0, cfg.seed)
        a_task_fs = run_protocol(stream, spec, "few-shot", 0, cfg.seed)
        for er_size in cfg.er_sizes:
            A, a_cl = run_protocol(stream, spec, "CL", er_size, cfg.seed, hp_schedule)
            _, a_cl_reinit = run_protocol(stream, spec, "CL-reinit", er_size,
                                          cfg.seed, hp_schedule)
            report = metrics_report(
                A, a_cl, a_cl_reinit, a_iid, a_task_iid, a_task_fs,
                a_nmc=a_nmc, a_slda=a_slda, er_size=er_size, ordering_seed=0,
            )
            cell = {
                "dataset": name,
                "encoder": stream.tasks[0].train.meta.encoder_name,
                "classifier": "mlp",
                "overlap_avg": overlap,
                "accuracy_matrix": A.values,
            }
            cell.update(asdict(report))
            cells.append(cell)
    return cells + metric_cells


def _safe_rel_forgetting(A):
    from .metrics import relative_forgetting

    try:
        return relative_forgetting(A)
    except Exception:
        return math.nan


def _write_summary(cells: list[dict], path: str) -> None:
    """Across-ordering mean and standard deviation per (dataset, classifier, er)."""
    numeric_cols = CSV_COLUMNS[5:]
    groups: dict[tuple, list[dict]] = {}
    for cell in cells:
        key = (cell["dataset"], cell.get("encoder", ""), cell["classifier"], cell["er_size"])
        groups.setdefault(key, []).append(cell)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["dataset", "encoder", "classifier", "er_size", "n_orderings"]
        for col in numeric_cols:
            header += [f"{col}_mean", f"{col}_std"]
        writer.writerow(header)
        for key in sorted(groups, key=lambda k: tuple(str(x) for x in k)):
            rows = groups[key]
            line = list(key) + [len(rows)]
            for col in numeric_cols:
                vals = [row[col] for row in rows
                        if row.get(col) is not None and not _is_nan(row.get(col))]
                if vals:
                    line += [_fmt(float(np.mean(vals))), _fmt(float(np.std(vals)))]
                else:
                    line += ["", ""]
            writer.writerow(line)


def _is_nan(v) -> bool:
    return isinstance(v, float) and math.isnan(v)
