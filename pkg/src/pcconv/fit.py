"""Fitting PC-Conv filter banks to target spectral responses on [0, 2]."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InvalidArgumentError, SingularMatrixError
from .filters import FilterParams, scalar_response
from .linalg import dense_solve
from .pcpoly import build_table, check_t, series_eval_G

__all__ = [
    "TargetFilter",
    "FitResult",
    "TARGETS",
    "target_zoo",
    "spectral_grid",
    "design_matrix",
    "fit_least_squares",
    "interpolation_matrix",
    "interpolate_polynomial",
    "DEFAULT_GRID_SIZE",
    "RIDGE",
]

DEFAULT_GRID_SIZE = 201
RIDGE = 1e-10


@dataclass(frozen=True)
class TargetFilter:
    name: str
    eval: Callable[[np.ndarray], np.ndarray]

    def __call__(self, lam):
        return np.asarray(self.eval(np.asarray(lam, dtype=np.float64)), dtype=np.float64)


def _low_band_pass(lam):
    low = (lam >= 0.0) & (lam <= 0.5)
    shoulder = (lam > 0.5) & (lam < 1.0)
    band = (lam >= 1.0) & (lam <= 2.0)
    return (
        low.astype(float)
        + np.exp(-100.0 * (lam - 0.5) ** 2) * shoulder
        + np.exp(-50.0 * (lam - 1.5) ** 2) * band
    )


TARGETS = {
    "low_band_pass": _low_band_pass,
    # |sin(pi lam)|, the comb response commonly used for spectral-filter benchmarks
    "comb": lambda lam: np.abs(np.sin(np.pi * lam)),
    "low_pass": lambda lam: 1.0 - lam / 2.0,
    "high_pass": lambda lam: lam / 2.0,
    "identity": lambda lam: np.ones_like(lam),
}


def target_zoo(name: str) -> TargetFilter:
    try:
        return TargetFilter(name, TARGETS[name])
    except KeyError:
        raise InvalidArgumentError(f"unknown target filter {name!r}; choose from {sorted(TARGETS)}") from None


def spectral_grid(grid_size: int = DEFAULT_GRID_SIZE) -> np.ndarray:
    return np.linspace(0.0, 2.0, grid_size)


def design_matrix(lam, K: int, N: int, t: float) -> np.ndarray:
    """Columns ``[1, P_{1,t}(lam), ..., P_{K,t}(lam)]``."""
    lam = np.asarray(lam, dtype=np.float64)
    cols = [np.ones_like(lam)] + [series_eval_G(k, t, lam, N) for k in range(1, K + 1)]
    return np.column_stack(cols)


@dataclass(frozen=True, eq=False)
class FitResult:
    theta: np.ndarray
    rmse: float
    grid: np.ndarray
    responses: np.ndarray
    target_values: np.ndarray
    params: FilterParams


def fit_least_squares(target: TargetFilter, grid_size: int = DEFAULT_GRID_SIZE, K: int = 10,
                      N: int = 25, t: float = 0.5) -> FitResult:
    """Least-squares filter weights on a uniform grid over [0, 2].

    Solves the ridge-damped normal equations ``(F^T F + 1e-10 I) theta = F^T y``.
    """
    if N < K:
        raise InvalidArgumentError(f"fitting needs N >= K, got N={N}, K={K}")
    if grid_size < K + 2:
        raise InvalidArgumentError(f"grid_size must be at least K+2={K + 2}")
    check_t(t, K)
    lam = spectral_grid(grid_size)
    y = target(lam)
    if not np.all(np.isfinite(y)):
        raise InvalidArgumentError(f"target {target.name!r} is not finite on [0, 2]")
    F = design_matrix(lam, K, N, t)
    gram = F.T @ F + RIDGE * np.eye(K + 1)
    theta = dense_solve(gram, F.T @ y)
    params = FilterParams(theta, t, N=N, K=K)
    fitted = scalar_response(params, lam)
    rmse = float(np.sqrt(np.mean((fitted - y) ** 2)))
    return FitResult(theta, rmse, lam, fitted, y, params)


def interpolation_matrix(K: int, t: float) -> np.ndarray:
    """Maps filter weights to power-basis coefficients of orders ``0..K``.

    Column 0 is ``e_0`` (the identity channel); column ``k`` holds
    ``(-1)^n C_n(k, t) / n!`` for ``n = 0..K``.
    """
    M = np.zeros((K + 1, K + 1))
    M[0, 0] = 1.0
    if K >= 1:
        M[:, 1:] = build_table(t, K, K).taylor()
    return M


def interpolate_polynomial(poly_coeffs, K: int, N: int, t: float) -> np.ndarray:
    """Weights whose order-``0..K`` Taylor coefficients equal ``poly_coeffs``.

    With ``N == K`` the resulting response equals ``sum_n b_n lam^n`` exactly; for
    ``N > K`` the orders above ``K`` are whatever the basis carries.
    """
    b = np.asarray(poly_coeffs, dtype=np.float64).ravel()
    if len(b) != K + 1:
        raise InvalidArgumentError(f"expected K+1={K + 1} polynomial coefficients, got {len(b)}")
    if N < K:
        raise InvalidArgumentError(f"interpolation needs N >= K, got N={N}, K={K}")
    check_t(t, K)
    M = interpolation_matrix(K, t)
    # row equilibration: the n-th row scales like 1/n!
    scale = np.abs(M).max(axis=1)
    try:
        return dense_solve(M / scale[:, None], b / scale)
    except SingularMatrixError as exc:
        raise SingularMatrixError(
            exc.pivot, exc.magnitude,
            f"interpolation matrix singular at pivot {exc.pivot} for K={K}, t={t}: "
            "this contradicts the expressiveness guarantee for t outside 1..K",
        ) from exc
