"""Task subspace overlap and class-prototype cosine similarity."""

from __future__ import annotations

import numpy as np

from .errors import BadK, NeedTwoTasks, ShapeMismatch, ZeroPrototype
from .featurestore import EncodedDataset
from .numeric import top_k_eigs

DEFAULT_K = 20


def _top_directions(t: np.ndarray, k: int) -> np.ndarray:
    t = np.asarray(t, dtype=np.float64)
    tc = t - t.mean(axis=0)
    return top_k_eigs(tc.T @ tc, k).vectors


def subspace_overlap(ti: np.ndarray, tj: np.ndarray, k: int = DEFAULT_K) -> float:
    """(1/k) ||U_k^T V_k||_F^2 between the top-k principal subspaces of the
    column-centered representations of two tasks; 1 = identical, 0 = orthogonal."""
    ti = np.asarray(ti)
    tj = np.asarray(tj)
    if ti.ndim != 2 or tj.ndim != 2 or ti.shape[1] != tj.shape[1]:
        raise ShapeMismatch(f"column counts differ: {ti.shape} vs {tj.shape}")
    limit = min(ti.shape[0] - 1, tj.shape[0] - 1, ti.shape[1])
    if not 1 <= k <= limit:
        raise BadK(f"k={k} exceeds usable rank {limit}")
    U = _top_directions(ti, k)
    V = _top_directions(tj, k)
    return float(np.sum((U.T @ V) ** 2) / k)


def average_overlap(tasks: list[np.ndarray], k: int = DEFAULT_K) -> float:
    """Mean subspace overlap over all unordered task pairs."""
    if len(tasks) < 2:
        raise NeedTwoTasks("average overlap needs at least two tasks")
    vals = [
        subspace_overlap(tasks[i], tasks[j], k)
        for i in range(len(tasks))
        for j in range(i + 1, len(tasks))
    ]
    return float(np.mean(vals))


def class_prototype_similarity(ds: EncodedDataset) -> tuple[np.ndarray, float]:
    """Full C x C cosine matrix between per-class mean features, plus the
    average over the pairs above the diagonal."""
    classes = sorted(int(c) for c in np.unique(ds.labels))
    if len(classes) < 2:
        raise NeedTwoTasks("need at least two classes")
    protos = np.stack([
        ds.features[ds.labels == c].mean(axis=0, dtype=np.float64) for c in classes
    ])
    norms = np.linalg.norm(protos, axis=1)
    if np.any(norms == 0):
        raise ZeroPrototype("a class prototype has zero norm")
    unit = protos / norms[:, None]
    sim = unit @ unit.T
    np.fill_diagonal(sim, 1.0)
    iu = np.triu_indices(len(classes), k=1)
    return sim, float(sim[iu].mean())
