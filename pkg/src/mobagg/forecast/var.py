"""Vector autoregression fitted equation-by-equation with least squares.

    y_t = c + A_1 y_{t-1} + ... + A_p y_{t-p} + e_t

where y_t stacks one target series with its correlated helpers. Each row of
(c, A_1..A_p) solves an independent OLS problem over the same lagged design
matrix, which is what makes per-equation fitting equivalent to the joint fit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


class CollinearInputs(ValueError):
    """The lagged design matrix is rank-deficient (collinear inputs)."""


@dataclass(frozen=True)
class VarModel:
    k: int
    p: int
    const: np.ndarray        # (k,)
    coef: np.ndarray         # (p, k, k); coef[i][m, j] = effect of series j at lag i+1 on series m
    residual_cov: np.ndarray  # (k, k)
    n_obs: int


def _stack(series_set: Sequence) -> np.ndarray:
    cols = []
    for s in series_set:
        v = np.asarray(getattr(s, "values", s), dtype=np.float64)
        if v.ndim != 1:
            raise ValueError("each series must be one-dimensional")
        cols.append(v)
    lengths = {c.size for c in cols}
    if len(lengths) != 1:
        raise ValueError(f"series lengths differ: {sorted(lengths)}")
    return np.column_stack(cols)


def lagged_design(data: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Response rows y_t and regressors [1, y_{t-1}, ..., y_{t-p}] for t >= p."""
    n, k = data.shape
    rows = n - p
    X = np.empty((rows, 1 + k * p))
    X[:, 0] = 1.0
    for i in range(1, p + 1):
        X[:, 1 + (i - 1) * k : 1 + i * k] = data[p - i : n - i]
    return data[p:], X


def fit_var(series_set: Sequence, p: int) -> VarModel:
    """Fit VAR(p) over two or more aligned series."""
    if p < 1:
        raise ValueError("VAR order must be >= 1")
    data = _stack(series_set)
    n, k = data.shape
    if k < 2:
        raise ValueError("VAR needs at least two series; fit an ARMA model for one")
    if not np.isfinite(data).all():
        raise ValueError("series must be finite")
    n_params = 1 + k * p
    need = 10 * n_params
    if n < need:
        raise ValueError(f"VAR({p}) over {k} series needs >= {need} observations, got {n}")

    resp, X = lagged_design(data, p)
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise CollinearInputs("collinear inputs")
    B, *_ = np.linalg.lstsq(X, resp, rcond=None)
    resid = resp - X @ B

    coef = np.empty((p, k, k))
    for i in range(p):
        # Block rows for lag i+1, transposed so coef[i][m, j] multiplies
        # series j's value at lag i+1 in equation m.
        coef[i] = B[1 + i * k : 1 + (i + 1) * k].T
    dof = resp.shape[0] - n_params
    residual_cov = resid.T @ resid / dof
    return VarModel(
        k=k,
        p=p,
        const=B[0].copy(),
        coef=coef,
        residual_cov=residual_cov,
        n_obs=n,
    )


def forecast_var(model: VarModel, history: np.ndarray) -> np.ndarray:
    """One-step-ahead conditional mean from the trailing ``p`` rows."""
    h = np.asarray(history, dtype=np.float64)
    if h.ndim != 2 or h.shape[1] != model.k:
        raise ValueError(f"history must be (*, {model.k}), got {h.shape}")
    if h.shape[0] < model.p:
        raise ValueError(f"need at least {model.p} history rows, got {h.shape[0]}")
    value = model.const.copy()
    for i in range(1, model.p + 1):
        value += model.coef[i - 1] @ h[-i]
    return value
