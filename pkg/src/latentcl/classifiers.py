"""Classifier families: replay MLP, nearest-mean, and streaming LDA.

The MLP is a single-hidden-layer ReLU network trained with mini-batch SGD
with momentum, decoupled weight decay and optional cosine annealing on a
softmax cross-entropy loss. Its output head grows as new classes appear;
existing columns are never touched by an expansion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    BadConfig,
    DivergedTraining,
    DuplicateClass,
    EmptyModel,
    ShapeMismatch,
)
from .numeric import spd_solve


@dataclass(frozen=True)
class Hyperparams:
    learning_rate: float = 0.01
    weight_decay: float = 0.0
    anneal: bool = False
    epochs: int = 10
    batch_size: int = 64
    momentum: float = 0.9

    def validate(self) -> "Hyperparams":
        if self.learning_rate <= 0:
            raise BadConfig("learning_rate must be positive")
        if self.weight_decay < 0:
            raise BadConfig("weight_decay must be >= 0")
        if self.epochs < 0 or self.batch_size < 1:
            raise BadConfig("bad epochs/batch_size")
        return self


# ---------------------------------------------------------------------------
# MLP
# ---------------------------------------------------------------------------


@dataclass
class MLPModel:
    W1: np.ndarray  # (d, h)
    b1: np.ndarray  # (h,)
    W2: np.ndarray  # (h, C)
    b2: np.ndarray  # (C,)
    class_ids: list[int]  # column -> global class id
    init_seed: int

    @property
    def d(self) -> int:
        return self.W1.shape[0]

    @property
    def hidden(self) -> int:
        return self.W1.shape[1]

    @property
    def n_classes(self) -> int:
        return self.W2.shape[1]

    def copy(self) -> "MLPModel":
        return MLPModel(
            self.W1.copy(), self.b1.copy(), self.W2.copy(), self.b2.copy(),
            list(self.class_ids), self.init_seed,
        )


def mlp_init(d: int, hidden: int = 1024, seed: int = 0) -> MLPModel:
    """Fresh model with He-scaled weights, zero biases, and an empty head."""
    rng = np.random.default_rng(seed)
    W1 = rng.normal(size=(d, hidden)) * math.sqrt(2.0 / d)
    return MLPModel(
        W1=W1,
        b1=np.zeros(hidden),
        W2=np.empty((hidden, 0)),
        b2=np.empty(0),
        class_ids=[],
        init_seed=seed,
    )


def mlp_reinit(model: MLPModel, seed: int) -> MLPModel:
    """Fresh parameters for the same architecture and class ids."""
    fresh = mlp_init(model.d, model.hidden, seed)
    return mlp_expand_head(fresh, model.class_ids)


def mlp_expand_head(model: MLPModel, new_class_ids) -> MLPModel:
    """Add head columns for new classes; existing columns stay bit-identical."""
    new_ids = [int(c) for c in new_class_ids]
    dup = set(new_ids) & set(model.class_ids)
    if dup:
        raise DuplicateClass(f"classes already present: {sorted(dup)}")
    if not new_ids:
        return model
    # Column init derives from (init_seed, class id) so growth order is
    # irrelevant and expansion is deterministic.
    cols = []
    for c in new_ids:
        rng = np.random.default_rng(np.random.SeedSequence((model.init_seed, c)))
        cols.append(rng.normal(size=model.hidden) * math.sqrt(2.0 / model.hidden))
    W2 = np.hstack([model.W2, np.column_stack(cols)])
    b2 = np.concatenate([model.b2, np.zeros(len(new_ids))])
    return MLPModel(model.W1.copy(), model.b1.copy(), W2, b2,
                    model.class_ids + new_ids, model.init_seed)


def _forward(model: MLPModel, X: np.ndarray):
    Z1 = X @ model.W1 + model.b1
    H = np.maximum(Z1, 0.0)
    logits = H @ model.W2 + model.b2
    return Z1, H, logits


def _softmax_ce(logits: np.ndarray, targets: np.ndarray):
    """Mean cross-entropy and d(loss)/d(logits) for integer column targets."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    probs = exp / exp.sum(axis=1, keepdims=True)
    n = logits.shape[0]
    nll = -np.log(probs[np.arange(n), targets] + 1e-300)
    grad = probs.copy()
    grad[np.arange(n), targets] -= 1.0
    return float(nll.mean()), grad / n


def mlp_loss_and_grads(model: MLPModel, X: np.ndarray, cols: np.ndarray):
    """Cross-entropy loss and analytic gradients for every parameter tensor."""
    Z1, H, logits = _forward(model, X)
    loss, dlogits = _softmax_ce(logits, cols)
    dW2 = H.T @ dlogits
    db2 = dlogits.sum(axis=0)
    dH = dlogits @ model.W2.T
    dZ1 = dH * (Z1 > 0)
    dW1 = X.T @ dZ1
    db1 = dZ1.sum(axis=0)
    return loss, {"W1": dW1, "b1": db1, "W2": dW2, "b2": db2}


def _columns_for(model: MLPModel, y: np.ndarray) -> np.ndarray:
    lookup = {c: i for i, c in enumerate(model.class_ids)}
    try:
        return np.array([lookup[int(c)] for c in y], dtype=np.int64)
    except KeyError as exc:
        raise ShapeMismatch(f"label {exc} not covered by the model head") from exc


def mlp_train_task(model: MLPModel, epoch_builder, hp: Hyperparams, seed: int) -> MLPModel:
    """Train for hp.epochs epochs, each freshly drawn from epoch_builder(epoch_seed).

    SGD with momentum on softmax cross-entropy; weight decay is decoupled and
    applied to W1/W2 only. With hp.anneal the learning rate follows a cosine
    decay to zero over the whole task.
    """
    hp.validate()
    model = model.copy()
    vel = {k: np.zeros_like(getattr(model, k)) for k in ("W1", "b1", "W2", "b2")}
    seeds = np.random.SeedSequence(seed).generate_state(max(hp.epochs, 1))
    # Fixed step count per epoch so the cosine schedule is well defined.
    X0, _ = epoch_builder(int(seeds[0]))
    steps_per_epoch = max(1, math.ceil(X0.shape[0] / hp.batch_size))
    total_steps = max(1, hp.epochs * steps_per_epoch)
    step = 0
    for epoch in range(hp.epochs):
        X, y = epoch_builder(int(seeds[epoch]))
        cols = _columns_for(model, y)
        X = X.astype(np.float64, copy=False)
        for start in range(0, X.shape[0], hp.batch_size):
            xb = X[start : start + hp.batch_size]
            cb = cols[start : start + hp.batch_size]
            loss, grads = mlp_loss_and_grads(model, xb, cb)
            if not math.isfinite(loss):
                raise DivergedTraining(
                    f"non-finite loss at epoch {epoch}, step {step}"
                )
            lr = hp.learning_rate
            if hp.anneal:
                lr *= 0.5 * (1.0 + math.cos(math.pi * step / total_steps))
            for k in ("W1", "b1", "W2", "b2"):
                vel[k] = hp.momentum * vel[k] + grads[k]
                param = getattr(model, k)
                param -= lr * vel[k]
                if hp.weight_decay and k in ("W1", "W2"):
                    param -= lr * hp.weight_decay * param
            step += 1
    return model


def mlp_logits(model: MLPModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[1] != model.d:
        raise ShapeMismatch(f"expected (n, {model.d}) input, got {X.shape}")
    return _forward(model, X.astype(np.float64, copy=False))[2]


def mlp_predict(model: MLPModel, X: np.ndarray) -> np.ndarray:
    """Argmax over logits, mapped back to global class ids; ties -> lowest id."""
    if model.n_classes == 0:
        raise EmptyModel("model head has no classes")
    logits = mlp_logits(model, X)
    ids = np.array(model.class_ids)
    order = np.argsort(ids)
    best = np.argmax(logits[:, order], axis=1)  # first max wins, ids ascending
    return ids[order][best]


def mlp_train_accuracy(model: MLPModel, X: np.ndarray, y: np.ndarray) -> float:
    return float((mlp_predict(model, X) == y).mean())


def tune_first_task(task, val, grid: list[Hyperparams], epoch_builder_factory, seed: int,
                    hidden: int = 1024) -> Hyperparams:
    """Pick the grid point with the best first-task validation accuracy.

    Ties break toward the earliest grid position. epoch_builder_factory(hp)
    must return the epoch builder used for training a fresh model.
    """
    if not grid:
        raise BadConfig("hyperparameter grid is empty")
    best_acc, best_hp = -1.0, None
    for hp in grid:
        model = mlp_init(task.train.d, hidden, seed)
        model = mlp_expand_head(model, task.class_ids)
        try:
            model = mlp_train_task(model, epoch_builder_factory(hp), hp, seed)
            acc = mlp_train_accuracy(model, val.features, val.labels)
        except DivergedTraining:
            acc = -1.0
        if acc > best_acc:
            best_acc, best_hp = acc, hp
    return best_hp if best_hp is not None else grid[0]


# ---------------------------------------------------------------------------
# Nearest-mean classifier
# ---------------------------------------------------------------------------


@dataclass
class NMCModel:
    means: dict[int, np.ndarray] = field(default_factory=dict)
    counts: dict[int, int] = field(default_factory=dict)


def nmc_update(model: NMCModel, X: np.ndarray, y: np.ndarray) -> NMCModel:
    """Maintain exact running means with count-weighted 64-bit accumulation."""
    X = np.asarray(X, dtype=np.float64)
    for c in sorted(int(c) for c in np.unique(y)):
        rows = X[y == c]
        n_new = rows.shape[0]
        total = rows.sum(axis=0)
        if c in model.means:
            n_old = model.counts[c]
            model.means[c] = (model.means[c] * n_old + total) / (n_old + n_new)
            model.counts[c] = n_old + n_new
        else:
            model.means[c] = total / n_new
            model.counts[c] = n_new
    return model


def nmc_predict(model: NMCModel, X: np.ndarray) -> np.ndarray:
    """Nearest prototype in Euclidean distance; ties -> lowest class id."""
    if not model.means:
        raise EmptyModel("no classes seen")
    ids = np.array(sorted(model.means))
    M = np.stack([model.means[c] for c in ids])  # (C, d)
    X = np.asarray(X, dtype=np.float64)
    if X.shape[1] != M.shape[1]:
        raise ShapeMismatch(f"dim mismatch: {X.shape[1]} vs {M.shape[1]}")
    d2 = ((X[:, None, :] - M[None, :, :]) ** 2).sum(axis=2) if X.shape[0] * M.shape[0] < 4096 \
        else (X * X).sum(1)[:, None] - 2 * X @ M.T + (M * M).sum(1)[None, :]
    return ids[np.argmin(d2, axis=1)]


# ---------------------------------------------------------------------------
# Streaming LDA
# ---------------------------------------------------------------------------


@dataclass
class SLDAState:
    d: int
    epsilon: float = 1e-4
    means: dict[int, np.ndarray] = field(default_factory=dict)
    counts: dict[int, int] = field(default_factory=dict)
    scatter: np.ndarray = None  # class-centered scatter; sigma = scatter / N
    total: int = 0

    def __post_init__(self):
        if self.scatter is None:
            self.scatter = np.zeros((self.d, self.d))

    @property
    def sigma(self) -> np.ndarray:
        if self.total == 0:
            return np.zeros((self.d, self.d))
        return self.scatter / self.total


def slda_update(state: SLDAState, x: np.ndarray, y: int) -> SLDAState:
    """One streaming step; reproduces the population covariance of the
    class-centered data seen so far (Welford with the pre-update class mean)."""
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size != state.d:
        raise ShapeMismatch(f"expected dim {state.d}, got {x.size}")
    c = int(y)
    if c not in state.means:
        state.means[c] = x.copy()
        state.counts[c] = 1
    else:
        n = state.counts[c]
        delta = x - state.means[c]
        state.means[c] = state.means[c] + delta / (n + 1)
        state.scatter += np.outer(delta, delta) * (n / (n + 1))
        state.counts[c] = n + 1
    state.total += 1
    return state


def slda_update_batch(state: SLDAState, X: np.ndarray, y: np.ndarray) -> SLDAState:
    for xi, yi in zip(np.asarray(X), np.asarray(y)):
        slda_update(state, xi, int(yi))
    return state


def _slda_weights(state: SLDAState):
    if len(state.means) < 2:
        raise EmptyModel("SLDA prediction needs at least two classes")
    ids = np.array(sorted(state.means))
    M = np.stack([state.means[c] for c in ids])  # (C, d)
    eps = state.epsilon
    sigma_eps = (1.0 - eps) * state.sigma + eps * np.eye(state.d)
    W = spd_solve(sigma_eps, M.T)  # (d, C)
    bias = -0.5 * np.einsum("cd,dc->c", M, W)
    return ids, W, bias


def slda_scores(state: SLDAState, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Linear discriminant scores delta_c(x) = w_c.x - mu_c.w_c / 2."""
    ids, W, bias = _slda_weights(state)
    X = np.asarray(X, dtype=np.float64)
    if X.shape[1] != state.d:
        raise ShapeMismatch(f"dim mismatch: {X.shape[1]} vs {state.d}")
    return ids, X @ W + bias


def slda_predict(state: SLDAState, X: np.ndarray) -> np.ndarray:
    ids, scores = slda_scores(state, X)
    return ids[np.argmax(scores, axis=1)]  # ids ascending: first max = lowest id
