"""Multinomial softmax GLM fit by Newton/IRLS, one-vs-rest logistic
regression, and the Gaussian identity-link length regressor.
"""

from __future__ import annotations

import time

import numpy as np

from ..cohort import N_CLASSES
from ..errors import DegenerateLabels
from ..preprocess import FeatureMatrix
from .artifact import CLASS_NAMES, ModelArtifact, _with_intercept
from .config import ModelConfig

# Finite stand-in for the -inf intercept of a class with zero observed
# mass: exp(-30) is ~1e-13, far below every tolerance in the test surface.
ABSENT_CLASS_INTERCEPT = -30.0

_MAX_HALVINGS = 60
_MAX_RIDGE_BUMPS = 20


def _penalty(B_free: np.ndarray, lam: float) -> float:
    return 0.5 * lam * float((B_free[:, 1:] ** 2).sum())


def _log_softmax_ll(scores: np.ndarray, y_col: np.ndarray) -> float:
    shifted = scores - scores.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    return float((shifted[np.arange(len(y_col)), y_col] - log_norm).sum())


def _newton_softmax(Xi: np.ndarray, y_col: np.ndarray, m: int, lam: float,
                    max_iter: int, tol: float):
    """Maximize the ridge-penalized softmax log-likelihood over m classes.

    Class indices in y_col are 0..m-1; class m-1 is the pinned reference.
    Intercepts are unpenalized. The Newton step falls back to halving so
    the penalized objective never decreases.

    Returns (B_free of shape (m-1, p), iterations, objective, flags).
    """
    n, p = Xi.shape
    r = m - 1
    flags: list[str] = []
    B_free = np.zeros((r, p))
    if r == 0:
        return B_free, 0, 0.0, tuple(flags)

    noint = np.ones(p)
    noint[0] = 0.0
    Y = np.column_stack([(y_col == a).astype(float) for a in range(r)])

    def objective(B):
        scores = np.hstack([Xi @ B.T, np.zeros((n, 1))])
        return _log_softmax_ll(scores, y_col) - _penalty(B, lam)

    def probabilities(B):
        scores = np.hstack([Xi @ B.T, np.zeros((n, 1))])
        shifted = scores - scores.max(axis=1, keepdims=True)
        e = np.exp(shifted)
        return (e / e.sum(axis=1, keepdims=True))[:, :r]

    current = objective(B_free)
    iterations = 0
    relative = float("inf")
    lam_eff = lam
    for iterations in range(1, max_iter + 1):
        P = probabilities(B_free)
        grad = np.empty((r, p))
        for a in range(r):
            grad[a] = Xi.T @ (Y[:, a] - P[:, a]) - lam * B_free[a] * noint

        delta = None
        for _ in range(_MAX_RIDGE_BUMPS):
            A = np.empty((r * p, r * p))
            for a in range(r):
                for b in range(r):
                    w = P[:, a] * (1.0 - P[:, a]) if a == b else -P[:, a] * P[:, b]
                    block = Xi.T @ (Xi * w[:, None])
                    if a == b:
                        block = block + lam_eff * np.diag(noint)
                    A[a * p:(a + 1) * p, b * p:(b + 1) * p] = block
            try:
                # Cholesky doubles as the positive-definiteness gate: exact
                # rank deficiency raises here where LU may slip through.
                np.linalg.cholesky(A)
                delta = np.linalg.solve(A, grad.reshape(-1)).reshape(r, p)
                break
            except np.linalg.LinAlgError:
                lam_eff = max(lam_eff, 1e-10) * 10.0
                if "SingularSystem" not in flags:
                    flags.append("SingularSystem")
        if delta is None:
            break

        step, value, candidate = 1.0, None, None
        for _ in range(_MAX_HALVINGS):
            candidate = B_free + step * delta
            value = objective(candidate)
            if value >= current - 1e-12:
                break
            step *= 0.5
        else:
            # No improving step exists; treat as a stationary point.
            relative = 0.0
            break
        relative = abs(value - current) / (abs(current) + 1.0)
        B_free, current = candidate, value
        if relative < tol:
            break
    if iterations >= max_iter and relative > 100.0 * tol:
        flags.append("NonConvergence")
    return B_free, iterations, current, tuple(flags)


def _assemble_rows(present: np.ndarray, B_free: np.ndarray, p: int) -> np.ndarray:
    """Expand free softmax rows into the full 6x(d+1) coefficient matrix."""
    B = np.zeros((N_CLASSES, p))
    present_set = set(int(k) for k in present)
    for k in range(N_CLASSES):
        if k not in present_set:
            B[k, 0] = ABSENT_CLASS_INTERCEPT
    for a, k in enumerate(present[:-1]):
        B[int(k)] = B_free[a]
    return B


def fit_glm(matrix: FeatureMatrix, labels: np.ndarray, config: ModelConfig) -> ModelArtifact:
    """Fit the multinomial softmax GLM by penalized Newton/IRLS.

    The last class present in the training labels is the pinned reference
    row; classes never observed get a large negative constant intercept so
    prediction still emits all six probabilities.
    """
    start = time.perf_counter()
    y = np.asarray(labels, dtype=int)
    Xi = _with_intercept(matrix.X)
    present = np.unique(y)
    index_of = {int(k): a for a, k in enumerate(present)}
    y_col = np.array([index_of[int(k)] for k in y])
    B_free, iterations, objective, flags = _newton_softmax(
        Xi, y_col, len(present), config.ridge_lambda,
        config.irls_max_iterations, config.irls_tolerance)
    B = _assemble_rows(present, B_free, Xi.shape[1])
    return ModelArtifact(
        kind="glm",
        schema=matrix.schema,
        classes=CLASS_NAMES,
        params={"coefficients": B},
        training_meta={"iterations": iterations, "objective": objective,
                       "seconds": time.perf_counter() - start},
        flags=flags,
    )


def fit_logreg(matrix: FeatureMatrix, labels: np.ndarray, config: ModelConfig) -> ModelArtifact:
    """Fit six one-vs-rest ridge logistic regressions.

    Each class gets an independent binary IRLS fit; prediction applies the
    sigmoid per class and renormalizes onto the simplex.
    """
    start = time.perf_counter()
    y = np.asarray(labels, dtype=int)
    if len(np.unique(y)) < 2:
        raise DegenerateLabels("one-vs-rest fitting needs at least two observed classes")
    Xi = _with_intercept(matrix.X)
    p = Xi.shape[1]
    B = np.zeros((N_CLASSES, p))
    flags: list[str] = []
    total_iterations = 0
    total_objective = 0.0
    for k in range(N_CLASSES):
        positive = (y == k).astype(int)
        if positive.sum() == 0:
            B[k, 0] = ABSENT_CLASS_INTERCEPT
            continue
        # Binary softmax with the negative class as reference = logistic fit.
        y_col = 1 - positive
        row, iterations, objective, fit_flags = _newton_softmax(
            Xi, y_col, 2, config.ridge_lambda,
            config.irls_max_iterations, config.irls_tolerance)
        B[k] = row[0]
        total_iterations += iterations
        total_objective += objective
        for flag in fit_flags:
            if flag not in flags:
                flags.append(flag)
    return ModelArtifact(
        kind="logreg",
        schema=matrix.schema,
        classes=CLASS_NAMES,
        params={"coefficients": B},
        training_meta={"iterations": total_iterations, "objective": total_objective,
                       "seconds": time.perf_counter() - start},
        flags=tuple(flags),
    )


def fit_length_glm(matrix: FeatureMatrix, lengths: np.ndarray,
                   config: ModelConfig) -> ModelArtifact:
    """Ridge linear regression for treatment length via normal equations.

    The identity-link Gaussian GLM has a closed-form maximizer; predictions
    are clamped at 0 months at use time.
    """
    start = time.perf_counter()
    y = np.asarray(lengths, dtype=float)
    Xi = _with_intercept(matrix.X)
    p = Xi.shape[1]
    penalty_diag = np.ones(p)
    penalty_diag[0] = 0.0
    flags: list[str] = []
    lam = config.ridge_lambda
    beta = None
    for _ in range(_MAX_RIDGE_BUMPS):
        A = Xi.T @ Xi + lam * np.diag(penalty_diag)
        try:
            # Cholesky doubles as the positive-definiteness gate: exact
            # rank deficiency raises here where LU may slip through.
            np.linalg.cholesky(A)
            candidate = np.linalg.solve(A, Xi.T @ y)
        except np.linalg.LinAlgError:
            candidate = None
        if candidate is not None and np.isfinite(candidate).all():
            beta = candidate
            break
        lam = max(lam, 1e-10) * 10.0
        if "SingularSystem" not in flags:
            flags.append("SingularSystem")
    assert beta is not None, "ridge bumps exhausted without a solvable system"
    residuals = y - Xi @ beta
    objective = 0.5 * float(residuals @ residuals) + \
        0.5 * lam * float((beta[1:] ** 2).sum())
    clamped = np.maximum(Xi @ beta, 0.0)
    return ModelArtifact(
        kind="length_glm",
        schema=matrix.schema,
        classes=None,
        params={"coefficients": beta, "response_units": "months"},
        training_meta={"iterations": 1, "objective": objective,
                       "seconds": time.perf_counter() - start,
                       "mae_months": float(np.mean(np.abs(y - clamped)))},
        flags=tuple(flags),
    )
