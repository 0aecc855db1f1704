"""Accuracy-matrix algebra, protocol execution, and the forgetting regression."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from dataclasses import replace as _dc_replace

from .classifiers import (
    Hyperparams,
    NMCModel,
    SLDAState,
    mlp_expand_head,
    mlp_init,
    mlp_predict,
    mlp_reinit,
    mlp_train_task,
    nmc_predict,
    nmc_update,
    slda_predict,
    slda_update_batch,
)
from .errors import (BadConfig, EmptyData, RelativeForgettingUndefined,
                     ShapeMismatch)
from .numeric import ols_r2
from .replay import ReplayBuffer, build_balanced_epoch, update_buffer
from .streams import Stream

PROTOCOLS = ("CL", "CL-reinit", "task-iid", "iid", "few-shot")


@dataclass
class AccuracyMatrix:
    """A[i][t]: accuracy of task i's test set after learning task t (t >= i)."""

    n_tasks: int
    values: np.ndarray = None  # (T, T), NaN where undefined
    test_sizes: list[int] = field(default_factory=list)

    def __post_init__(self):
        if self.values is None:
            self.values = np.full((self.n_tasks, self.n_tasks), np.nan)

    def record(self, task: int, time: int, acc: float) -> None:
        if not 0 <= task <= time < self.n_tasks:
            raise ShapeMismatch(f"cell ({task}, {time}) outside {self.n_tasks}-task matrix")
        self.values[task, time] = acc

    def diag(self) -> np.ndarray:
        return np.diag(self.values)

    def final_column(self) -> np.ndarray:
        return self.values[:, self.n_tasks - 1]


@dataclass(frozen=True)
class MetricsReport:
    a_cl: float
    a_cl_reinit: float
    a_nmc: float
    a_slda: float
    a_task_cl: float
    a_task_fs: float
    a_iid: float
    a_task_iid: float
    forgetting: float
    relative_forgetting: float
    transfer: float
    interference: float
    interference_total: float
    er_size: int
    ordering_seed: int


def final_cl_accuracy(predictions: np.ndarray, labels: np.ndarray) -> float:
    """Sample-weighted accuracy over the concatenated test sets."""
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    if labels.size == 0:
        raise EmptyData("empty test union")
    return float((predictions == labels).mean())


def a_task_cl(A: AccuracyMatrix) -> float:
    return float(A.diag().mean())


def relative_forgetting(A: AccuracyMatrix) -> float:
    """(1/T) sum_t (A[t][t] - A[t][T-1]) / A[t][t]."""
    diag = A.diag()
    if np.any(diag == 0):
        raise RelativeForgettingUndefined("A[t][t] = 0 for some task")
    return float(((diag - A.final_column()) / diag).mean())


def metrics_report(
    A: AccuracyMatrix,
    a_cl: float,
    a_cl_reinit: float,
    a_iid: float,
    a_task_iid: float,
    a_task_fs: float,
    a_nmc: float = math.nan,
    a_slda: float = math.nan,
    er_size: int = 0,
    ordering_seed: int = 0,
) -> MetricsReport:
    atc = a_task_cl(A)
    return MetricsReport(
        a_cl=a_cl,
        a_cl_reinit=a_cl_reinit,
        a_nmc=a_nmc,
        a_slda=a_slda,
        a_task_cl=atc,
        a_task_fs=a_task_fs,
        a_iid=a_iid,
        a_task_iid=a_task_iid,
        forgetting=atc - a_cl,
        relative_forgetting=relative_forgetting(A),
        transfer=a_cl - a_cl_reinit,
        interference=a_task_iid - atc,
        interference_total=a_task_iid - a_iid,
        er_size=er_size,
        ordering_seed=ordering_seed,
    )


# ---------------------------------------------------------------------------
# Protocols
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClassifierSpec:
    kind: str  # "mlp" | "nmc" | "slda"
    hyperparams: Hyperparams = Hyperparams()
    hidden: int = 1024
    epsilon: float = 1e-4
    fewshot_epochs: int = 20

    def validate(self) -> "ClassifierSpec":
        if self.kind not in ("mlp", "nmc", "slda"):
            raise BadConfig(f"unknown classifier kind {self.kind!r}")
        return self


def _union_test(stream: Stream):
    X = np.concatenate([t.test.features for t in stream.tasks])
    y = np.concatenate([t.test.labels for t in stream.tasks])
    return X, y


def _epoch_builder(task_train, buf):
    def build(epoch_seed: int):
        return build_balanced_epoch(task_train, buf, epoch_seed)

    return build


def _train_mlp_on(train_ds, buf, hp, seed, model):
    return mlp_train_task(model, _epoch_builder(train_ds, buf), hp, seed)


def _eval_matrix_row(predict, stream, A, t):
    for i in range(t + 1):
        task = stream.tasks[i]
        acc = float((predict(task.test.features) == task.test.labels).mean())
        A.record(i, t, acc)


def _task_seed(seed: int, *branch: int) -> int:
    return int(np.random.SeedSequence((seed, *branch)).generate_state(1)[0])


def run_protocol(
    stream: Stream,
    spec: ClassifierSpec,
    protocol: str,
    er_size: int,
    seed: int,
    hp_schedule: list[Hyperparams] | None = None,
):
    """Execute one benchmark protocol; see PROTOCOLS for the choices.

    Returns (AccuracyMatrix, final union accuracy) for CL-style protocols and
    a scalar for the task-iid / iid / few-shot summaries. hp_schedule, when
    given, supplies one tuned Hyperparams per task (multi-dataset streams).
    """
    spec.validate()
    if protocol not in PROTOCOLS:
        raise BadConfig(f"unknown protocol {protocol!r}")
    T = len(stream.tasks)

    if spec.kind in ("nmc", "slda"):
        return _run_metric_protocol(stream, spec, protocol)

    if hp_schedule is not None and len(hp_schedule) != T:
        raise BadConfig("hp_schedule length must match the number of tasks")

    def hp_for(t: int) -> Hyperparams:
        return spec.hyperparams if hp_schedule is None else hp_schedule[t]

    hp = spec.hyperparams
    d = stream.tasks[0].train.d

    if protocol in ("CL", "CL-reinit"):
        A = AccuracyMatrix(T, test_sizes=[t.test.n for t in stream.tasks])
        buf = ReplayBuffer(capacity_per_class=er_size)
        model = mlp_init(d, spec.hidden, _task_seed(seed, 0))
        for t, task in enumerate(stream.tasks):
            if protocol == "CL-reinit" and t > 0:
                model = mlp_reinit(model, _task_seed(seed, 0, t))
            model = mlp_expand_head(model, task.class_ids)
            replay_buf = buf if er_size > 0 else None
            model = _train_mlp_on(task.train, replay_buf, hp_for(t), _task_seed(seed, 1, t), model)
            if er_size > 0:
                update_buffer(buf, task.train, _task_seed(seed, 2, t))
            _eval_matrix_row(lambda X: mlp_predict(model, X), stream, A, t)
        Xu, yu = _union_test(stream)
        return A, final_cl_accuracy(mlp_predict(model, Xu), yu)

    if protocol == "task-iid":
        accs = []
        for t, task in enumerate(stream.tasks):
            model = mlp_init(d, spec.hidden, _task_seed(seed, 3, t))
            model = mlp_expand_head(model, task.class_ids)
            model = _train_mlp_on(task.train, None, hp_for(t), _task_seed(seed, 4, t), model)
            accs.append(float((mlp_predict(model, task.test.features) == task.test.labels).mean()))
        return float(np.mean(accs))

    if protocol == "iid":
        model = mlp_init(d, spec.hidden, _task_seed(seed, 5))
        all_ids = sorted(c for t in stream.tasks for c in t.class_ids)
        model = mlp_expand_head(model, all_ids)
        union_train = _dc_replace(
            stream.tasks[0].train,
            features=np.concatenate([t.train.features for t in stream.tasks]),
            labels=np.concatenate([t.train.labels for t in stream.tasks]),
        )
        model = _train_mlp_on(union_train, None, hp, _task_seed(seed, 6), model)
        Xu, yu = _union_test(stream)
        return final_cl_accuracy(mlp_predict(model, Xu), yu)

    # few-shot: fresh model per task, 2 seeded samples per class, full batch
    fs_hp = Hyperparams(
        learning_rate=hp.learning_rate,
        weight_decay=hp.weight_decay,
        anneal=hp.anneal,
        epochs=spec.fewshot_epochs,
        batch_size=2 * stream.n_classes_total,
        momentum=hp.momentum,
    )
    accs = []
    for t, task in enumerate(stream.tasks):
        rng = np.random.default_rng(_task_seed(seed, 7, t))
        rows = []
        for c in task.class_ids:
            cand = np.flatnonzero(task.train.labels == c)
            take = min(2, cand.size)
            rows.extend(rng.choice(cand, size=take, replace=False))
        shot = task.train.subset_rows(np.sort(np.array(rows)))
        model = mlp_init(d, spec.hidden, _task_seed(seed, 8, t))
        model = mlp_expand_head(model, task.class_ids)

        def builder(epoch_seed, shot=shot):
            order = np.random.default_rng(epoch_seed).permutation(shot.n)
            return shot.features[order], shot.labels[order]

        model = mlp_train_task(model, builder, fs_hp, _task_seed(seed, 9, t))
        accs.append(float((mlp_predict(model, task.test.features) == task.test.labels).mean()))
    return float(np.mean(accs))


def _run_metric_protocol(stream: Stream, spec: ClassifierSpec, protocol: str):
    T = len(stream.tasks)
    d = stream.tasks[0].train.d

    def fresh():
        if spec.kind == "nmc":
            return NMCModel()
        return SLDAState(d=d, epsilon=spec.epsilon)

    def fit(model, task):
        if spec.kind == "nmc":
            nmc_update(model, task.train.features, task.train.labels)
        else:
            slda_update_batch(model, task.train.features, task.train.labels)
        return model

    def predict(model, X):
        return nmc_predict(model, X) if spec.kind == "nmc" else slda_predict(model, X)

    if protocol in ("CL", "CL-reinit"):
        A = AccuracyMatrix(T, test_sizes=[t.test.n for t in stream.tasks])
        model = fresh()
        for t, task in enumerate(stream.tasks):
            model = fit(model, task)
            if t == 0 and spec.kind == "slda" and len(model.means) < 2:
                continue  # cannot score a single class
            _eval_matrix_row(lambda X: predict(model, X), stream, A, t)
        Xu, yu = _union_test(stream)
        return A, final_cl_accuracy(predict(model, Xu), yu)

    if protocol == "task-iid":
        accs = []
        for task in stream.tasks:
            model = fit(fresh(), task)
            accs.append(float((predict(model, task.test.features) == task.test.labels).mean()))
        return float(np.mean(accs))

    if protocol == "iid":
        model = fresh()
        for task in stream.tasks:
            model = fit(model, task)
        Xu, yu = _union_test(stream)
        return final_cl_accuracy(predict(model, Xu), yu)

    raise BadConfig(f"protocol {protocol!r} is not defined for {spec.kind}")


def forgetting_regression(predictors: dict[str, np.ndarray], forgetting) -> dict[str, float]:
    """One single-predictor OLS R^2 per named predictor of forgetting."""
    target = np.asarray(forgetting, dtype=np.float64)
    if target.size < 5:
        raise EmptyData("need at least 5 observations")
    return {
        name: ols_r2(np.asarray(vals, dtype=np.float64)[:, None], target)
        for name, vals in predictors.items()
    }
