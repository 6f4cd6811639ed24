"""Scalar ARMA(p, q) estimation by conditional sum of squares.

The model is

    y_t = c + sum_i phi_i * y_{t-i} + eps_t + sum_j theta_j * eps_{t-j}

conditioned on the first p observations with pre-sample innovations fixed at
zero. Pure AR fits (q = 0) reduce to ordinary least squares on lagged values;
mixed models start from that AR solution and refine all coefficients with a
derivative-free simplex search on the innovation sum of squares.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from scipy.optimize import minimize
from scipy.signal import lfilter


class FitError(RuntimeError):
    """Optimizer failed; carries the best model found so far when available."""

    def __init__(self, message: str, model: "ArmaModel | None" = None) -> None:
        super().__init__(message)
        self.model = model


@dataclass(frozen=True)
class ArmaModel:
    """A fitted ARMA model over one training window.

    ``residuals`` are the innovations aligned to the training series; the
    first p entries are zero by the conditioning convention. ``aic`` uses the
    full training length n: n * ln(sigma2) + 2 * (p + q + 1).
    """

    p: int
    q: int
    const: float
    ar: np.ndarray
    ma: np.ndarray
    sigma2: float
    residuals: np.ndarray
    loglik: float
    aic: float
    n_obs: int


def _validate_series(y: np.ndarray, p: int, q: int) -> None:
    if p < 0 or q < 0:
        raise ValueError("orders must be non-negative")
    if y.ndim != 1:
        raise ValueError("series must be one-dimensional")
    if not np.isfinite(y).all():
        raise ValueError("series must be finite")
    need = 10 * (p + q + 1)
    if y.size < need:
        raise ValueError(
            f"ARMA({p},{q}) needs at least {need} observations, got {y.size}"
        )


def css_innovations(
    y: np.ndarray,
    const: float,
    ar: np.ndarray,
    ma: np.ndarray,
) -> np.ndarray:
    """Innovations for given coefficients; first len(ar) entries are zero."""
    p, q = ar.size, ma.size
    n = y.size
    r = y[p:] - const
    for i in range(1, p + 1):
        r = r - ar[i - 1] * y[p - i : n - i]
    if q:
        # eps_t = r_t - sum_j theta_j eps_{t-j} is an IIR filter with zero
        # initial state, which is exactly the pre-sample-zero convention.
        r = lfilter([1.0], np.concatenate(([1.0], ma)), r)
    eps = np.zeros(n)
    eps[p:] = r
    return eps


def _in_identifiable_region(ar: np.ndarray, ma: np.ndarray) -> bool:
    """True when the AR polynomial is stationary and the MA one invertible.

    Both conditions require the lag-polynomial roots to lie strictly outside
    the unit circle. Without this restriction the simplex search can settle
    on coefficient vectors whose in-sample innovations look small but whose
    forecasts explode.
    """
    for lowest_first in (
        np.concatenate(([1.0], -ar)),
        np.concatenate(([1.0], ma)),
    ):
        if lowest_first.size > 1:
            roots = np.roots(lowest_first[::-1])
            if roots.size and np.abs(roots).min() <= 1.0:
                return False
    return True


def _ols_ar(y: np.ndarray, p: int) -> tuple[float, np.ndarray, np.ndarray]:
    """Least-squares AR(p) fit: (const, ar coefficients, innovations tail)."""
    n = y.size
    X = np.empty((n - p, p + 1))
    X[:, 0] = 1.0
    for i in range(1, p + 1):
        X[:, i] = y[p - i : n - i]
    resp = y[p:]
    coef, *_ = np.linalg.lstsq(X, resp, rcond=None)
    return float(coef[0]), coef[1:].copy(), resp - X @ coef


def _finish(y: np.ndarray, p: int, q: int, const: float, ar: np.ndarray,
            ma: np.ndarray) -> ArmaModel:
    n = y.size
    eps = css_innovations(y, const, ar, ma)
    n_eff = n - p
    sse = float(eps[p:] @ eps[p:])
    sigma2 = sse / n_eff
    k = p + q + 1
    if sigma2 > 0:
        loglik = -0.5 * n_eff * (math.log(2.0 * math.pi * sigma2) + 1.0)
        aic = n * math.log(sigma2) + 2 * k
    else:
        loglik = float("inf")
        aic = float("-inf")
    return ArmaModel(
        p=p,
        q=q,
        const=const,
        ar=ar.copy(),
        ma=ma.copy(),
        sigma2=sigma2,
        residuals=eps,
        loglik=loglik,
        aic=aic,
        n_obs=n,
    )


def fit_arma(series: Sequence[float] | np.ndarray, p: int, q: int) -> ArmaModel:
    """Fit ARMA(p, q) by conditional sum of squares."""
    y = np.asarray(getattr(series, "values", series), dtype=np.float64)
    _validate_series(y, p, q)

    const0, ar0, _ = _ols_ar(y, p)
    if q == 0:
        return _finish(y, p, q, const0, ar0, np.empty(0))

    # Shrink an (unusual) explosive OLS start back inside the feasible set.
    while not _in_identifiable_region(ar0, np.empty(0)):
        ar0 = 0.9 * ar0
    start = np.concatenate(([const0], ar0, np.zeros(q)))

    def objective(params: np.ndarray) -> float:
        ar, ma = params[1 : 1 + p], params[1 + p :]
        if not _in_identifiable_region(ar, ma):
            return 1e300
        eps = css_innovations(y, params[0], ar, ma)
        sse = float(eps[p:] @ eps[p:])
        return sse if math.isfinite(sse) else 1e300

    result = minimize(
        objective,
        start,
        method="Nelder-Mead",
        options={
            "xatol": 1e-6,
            "fatol": 1e-10,
            "maxiter": 800 * start.size,
            "maxfev": 800 * start.size,
        },
    )
    model = _finish(
        y, p, q,
        float(result.x[0]),
        np.asarray(result.x[1 : 1 + p]),
        np.asarray(result.x[1 + p :]),
    )
    if not result.success:
        raise FitError(f"simplex search did not converge: {result.message}", model)
    return model


def select_order(
    series: Sequence[float] | np.ndarray,
    max_p: int = 5,
    max_q: int = 5,
) -> Tuple[int, int]:
    """Pick (p, q) over the grid by AIC; ties prefer fewer, then more AR, terms.

    The series must satisfy the fit precondition for the largest candidate.
    Candidates whose fit fails are skipped; if every candidate fails the
    error from the last failure is raised.
    """
    y = np.asarray(getattr(series, "values", series), dtype=np.float64)
    _validate_series(y, max_p, max_q)
    best_key: tuple[float, int, int] | None = None
    best_orders: Tuple[int, int] = (0, 0)
    last_error: Exception | None = None
    for p in range(max_p + 1):
        for q in range(max_q + 1):
            try:
                model = fit_arma(y, p, q)
            except (FitError, ValueError, np.linalg.LinAlgError) as exc:
                last_error = exc
                continue
            key = (model.aic, p + q, p)
            if best_key is None or key < best_key:
                best_key = key
                best_orders = (p, q)
    if best_key is None:
        raise FitError(f"no ARMA order could be fitted: {last_error}")
    return best_orders


def forecast_one(
    model: ArmaModel,
    history: Sequence[float] | np.ndarray,
    residuals: Sequence[float] | np.ndarray | None = None,
) -> float:
    """One-step-ahead conditional mean given trailing history and innovations."""
    h = np.asarray(history, dtype=np.float64)
    if h.size < model.p:
        raise ValueError(f"need at least {model.p} history values, got {h.size}")
    value = model.const
    for i in range(1, model.p + 1):
        value += model.ar[i - 1] * h[-i]
    if model.q:
        if residuals is None:
            raise ValueError("an MA model needs recent residuals")
        r = np.asarray(residuals, dtype=np.float64)
        if r.size < model.q:
            raise ValueError(f"need at least {model.q} residuals, got {r.size}")
        for j in range(1, model.q + 1):
            value += model.ma[j - 1] * r[-j]
    return float(value)
