"""Dense linear-algebra kernels and statistics.

All functions are pure. Inputs may be float32 (the on-disk feature dtype);
every accumulation happens in float64.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadK, EmptyData, NotSymmetric, SingularMatrix, ZeroVariance

SYMMETRY_TOL = 1e-6


@dataclass(frozen=True)
class EigPair:
    """Top eigenvalues (descending) with orthonormal eigenvectors as columns."""

    values: np.ndarray
    vectors: np.ndarray


def covariance(X: np.ndarray) -> np.ndarray:
    """Population covariance (denominator n) of the rows of X, in float64."""
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[0] < 1:
        raise EmptyData("covariance requires a 2-d array with at least one row")
    Xc = X.astype(np.float64) - X.mean(axis=0, dtype=np.float64)
    return (Xc.T @ Xc) / X.shape[0]


def _check_symmetric(S: np.ndarray) -> None:
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise NotSymmetric(f"expected a square matrix, got shape {S.shape}")
    scale = max(1.0, float(np.abs(S).max(initial=0.0)))
    if np.abs(S - S.T).max(initial=0.0) > SYMMETRY_TOL * scale:
        raise NotSymmetric("matrix is not symmetric within tolerance")


def _fix_signs(V: np.ndarray) -> np.ndarray:
    """Make each column's largest-magnitude entry positive (reproducible signs)."""
    idx = np.abs(V).argmax(axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def top_k_eigs(S: np.ndarray, k: int) -> EigPair:
    """Top-k eigenpairs of a symmetric matrix, eigenvalues descending."""
    S = np.asarray(S, dtype=np.float64)
    _check_symmetric(S)
    q = S.shape[0]
    if not 1 <= k <= q:
        raise BadK(f"k={k} out of range [1, {q}]")
    w, V = np.linalg.eigh((S + S.T) / 2.0)
    order = np.argsort(w)[::-1][:k]
    return EigPair(values=w[order], vectors=_fix_signs(V[:, order]))


def spd_solve(S: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Solve S X = B for symmetric PSD S via Cholesky with escalating jitter.

    Jitter starts at 1e-10 * trace / q and grows tenfold, up to 3 retries.
    """
    S = np.asarray(S, dtype=np.float64)
    _check_symmetric(S)
    B = np.asarray(B, dtype=np.float64)
    q = S.shape[0]
    jitter = 1e-10 * max(float(np.trace(S)), 1.0) / q
    eye = np.eye(q)
    shifted = S
    for attempt in range(4):
        try:
            L = np.linalg.cholesky(shifted)
        except np.linalg.LinAlgError:
            shifted = S + jitter * eye
            jitter *= 10.0
            continue
        Y = np.linalg.solve(L, B)
        return np.linalg.solve(L.T, Y)
    raise SingularMatrix("matrix not positive definite after jitter escalation")


def pearson_r(x, y) -> float:
    """Pearson correlation coefficient; raises ZeroVariance on constant input."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape or x.size < 3:
        raise EmptyData("pearson_r needs two equal-length sequences of >= 3 values")
    xc = x - x.mean()
    yc = y - y.mean()
    sx = np.sqrt((xc * xc).sum())
    sy = np.sqrt((yc * yc).sum())
    if sx == 0.0 or sy == 0.0:
        raise ZeroVariance("pearson_r is undefined for a constant sequence")
    r = float((xc * yc).sum() / (sx * sy))
    return max(-1.0, min(1.0, r))


def ols_r2(predictors: np.ndarray, target) -> float:
    """Coefficient of determination of an OLS fit with intercept."""
    X = np.asarray(predictors, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(target, dtype=np.float64).ravel()
    n, p = X.shape
    if n != y.size or n < p + 2:
        raise EmptyData(f"need >= cols+2 rows, got {n} rows for {p} predictors")
    yc = y - y.mean()
    sst = float(yc @ yc)
    if sst == 0.0:
        raise ZeroVariance("target has zero variance")
    D = np.hstack([np.ones((n, 1)), X])
    # Normal equations through the jittered SPD path; rank deficiency is
    # handled by the same escalation as every other solve in the package.
    beta = spd_solve(D.T @ D, D.T @ y)
    resid = y - D @ beta
    ssr = float(resid @ resid)
    return 1.0 - ssr / sst
