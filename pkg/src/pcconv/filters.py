"""PC-Conv filter banks: scalar responses, sparse propagation and dense oracles.

A filter bank with weights ``theta = (theta_0, ..., theta_K)`` has response

    g_t(lam) = theta_0 + sum_k theta_k * P_{k,t}(lam),
    P_{k,t}(lam) = sum_{n<=N} (-lam)^n / n! * C_n(k, t),

and acts on node signals as ``g_t(L) X``.  The production path folds the double
sum into power-basis coefficients ``a_n`` and makes a single pass over
``L^n X``; the oracles below go through a dense eigendecomposition instead.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError, PreconditionError
from .graph import psd_feasible_p
from .linalg import SparseMatrix, dense_solve, spmm, sym_eig
from .pcpoly import DEFAULT_N, PCCoeffTable, build_table, check_t, series_eval_G

__all__ = [
    "FilterParams",
    "FoldedCoeffs",
    "scalar_response",
    "fold_coefficients",
    "propagate",
    "apply_conv",
    "spectral_oracle",
    "exact_filter_oracle",
    "twofold_closed_form",
    "heat_kernel_oracle",
    "heat_series_terms",
]

_MAX_TWOFOLD = 500


@dataclass(frozen=True, eq=False)
class FilterParams:
    theta: np.ndarray
    t: float
    p: float = 2.0
    eta: float = 0.5
    N: int = DEFAULT_N
    K: int = field(default=-1)

    def __post_init__(self):
        theta = np.array(self.theta, dtype=np.float64).ravel()
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        if self.K == -1:
            object.__setattr__(self, "K", len(theta) - 1)
        if self.K < 0 or len(theta) != self.K + 1:
            raise InvalidArgumentError(f"theta must have K+1={self.K + 1} entries, got {len(theta)}")
        if self.N < 0:
            raise InvalidArgumentError("N must be non-negative")
        check_t(self.t, self.K)

    def with_theta(self, theta) -> "FilterParams":
        return FilterParams(theta, self.t, self.p, self.eta, self.N, self.K)

    def table(self) -> PCCoeffTable:
        return build_table(self.t, self.N, max(self.K, 1))


@dataclass(frozen=True, eq=False)
class FoldedCoeffs:
    """Power-basis coefficients: ``g_t(lam) = sum_n a[n] lam^n``."""

    a: np.ndarray

    def __call__(self, lam):
        # Horner, for evaluating the polynomial on scalars/grids only
        lam = np.asarray(lam, dtype=np.float64)
        out = np.zeros_like(lam)
        for coef in self.a[::-1]:
            out = out * lam + coef
        return out


def scalar_response(params: FilterParams, lam):
    """``g_t(lam)``, summed filter by filter with the truncated series."""
    lam = np.asarray(lam, dtype=np.float64)
    out = np.full_like(lam, params.theta[0])
    for k in range(1, params.K + 1):
        out = out + params.theta[k] * series_eval_G(k, params.t, lam, params.N)
    return out if out.ndim else float(out)


def fold_coefficients(params: FilterParams, table: PCCoeffTable | None = None) -> FoldedCoeffs:
    """``a_n = sum_k theta_k (-1)^n C_n(k, t) / n!``, plus ``theta_0`` at ``n = 0``."""
    if table is None:
        table = params.table()
    elif table.t != params.t or table.N != params.N or table.K < params.K:
        raise InvalidArgumentError(
            f"coefficient table (t={table.t}, N={table.N}, K={table.K}) does not match "
            f"filter (t={params.t}, N={params.N}, K={params.K})"
        )
    a = table.taylor()[:, : params.K] @ params.theta[1:]
    a[0] += params.theta[0]
    a.setflags(write=False)
    return FoldedCoeffs(a)


def propagate(L: SparseMatrix, X, N: int) -> list[np.ndarray]:
    """``[X, L X, ..., L^N X]``."""
    X = np.asarray(X, dtype=np.float64)
    if L.n_rows != L.n_cols or L.n_cols != X.shape[0]:
        raise InvalidArgumentError(f"operator {L.shape} does not match features {X.shape}")
    powers = [X]
    for _ in range(N):
        powers.append(spmm(L, powers[-1]))
    return powers


def apply_conv(L: SparseMatrix, X, params: FilterParams, table: PCCoeffTable | None = None) -> np.ndarray:
    """``g_t(L) X`` in one forward pass of ``N`` sparse products."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise InvalidArgumentError("features must be a 2-D array")
    if L.n_rows != L.n_cols or L.n_cols != X.shape[0]:
        raise InvalidArgumentError(f"operator {L.shape} does not match features {X.shape}")
    a = fold_coefficients(params, table).a
    v = X
    z = a[0] * X
    for n in range(1, params.N + 1):
        v = spmm(L, v)
        z = z + a[n] * v
    return z


def _spectral_apply(L_dense, X, response):
    L_dense = np.asarray(L_dense, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or L_dense.shape != (X.shape[0], X.shape[0]):
        raise InvalidArgumentError(f"operator {L_dense.shape} does not match features {X.shape}")
    w, U = sym_eig(L_dense)
    return U @ (np.asarray(response(w))[:, None] * (U.T @ X))


def spectral_oracle(L_dense, X, params: FilterParams) -> np.ndarray:
    """``U diag(g_t(lam_i)) U^T X``."""
    return _spectral_apply(L_dense, X, lambda w: scalar_response(params, w))


def exact_filter_oracle(L_dense, X, k: int, t: float) -> np.ndarray:
    """Untruncated single filter ``(I - L)^k exp(t L) X``."""
    if k < 0:
        raise InvalidArgumentError("k must be non-negative")
    return _spectral_apply(L_dense, X, lambda w: (1.0 - w) ** k * np.exp(t * w))


def heat_kernel_oracle(L_dense, X, t: float, sign: str = "homophilic") -> np.ndarray:
    """``exp(-t L) X`` (homophilic) or ``exp(+t L) X`` (heterophilic)."""
    s = _heat_sign(sign)
    return _spectral_apply(L_dense, X, lambda w: np.exp(s * t * w))


def _heat_sign(sign):
    if sign in ("homophilic", "homo", -1):
        return -1.0
    if sign in ("heterophilic", "hetero", 1):
        return 1.0
    raise InvalidArgumentError(f"unknown heat-kernel sign {sign!r}")


def heat_series_terms(L: SparseMatrix, x, t: float, n_terms: int, sign: str = "heterophilic") -> list[np.ndarray]:
    """Taylor terms ``(s t L)^n x / n!`` of the heat kernel, ``n = 0..n_terms-1``."""
    s = _heat_sign(sign)
    x = np.asarray(x, dtype=np.float64)
    col = x[:, None] if x.ndim == 1 else x
    scaled = SparseMatrix(L.n_rows, L.n_cols, L.row_ptr, L.col_idx, s * L.values, L.symmetric)
    terms = [col]
    for n in range(1, n_terms):
        terms.append(spmm(scaled, terms[-1]) * (t / n))
    return [term[:, 0] for term in terms] if x.ndim == 1 else terms


def twofold_closed_form(L_dense, X, alpha1: float, alpha2: float, t: float, p: float,
                        order: str = "hetero_first") -> np.ndarray:
    """Closed-form optimum of the chained heterophilic/homophilic problems.

    Solves ``(alpha1 I + h1(L)) (alpha2 I + h2(L)) Z = X`` with
    ``h1(lam) = exp(-t (p - 2 + lam)) - alpha1`` and ``h2(lam) = p - 2 + lam``;
    ``order`` picks which factor multiplies first.
    """
    if not alpha2 > 0:
        raise PreconditionError(f"alpha2 must be positive, got {alpha2}")
    interval = psd_feasible_p(t, alpha1)
    if p not in interval:
        raise PreconditionError(f"p={p} lies outside the feasible interval [{interval.lower}, {interval.upper})")
    L_dense = np.asarray(L_dense, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    m = L_dense.shape[0]
    if m > _MAX_TWOFOLD:
        raise InvalidArgumentError(f"twofold_closed_form is limited to m <= {_MAX_TWOFOLD}")
    if L_dense.shape != (m, m) or X.shape[0] != m:
        raise InvalidArgumentError(f"operator {L_dense.shape} does not match features {X.shape}")

    w, U = sym_eig(L_dense)
    h1 = np.exp(-t * (p - 2.0 + w)) - alpha1
    hetero = alpha1 * np.eye(m) + (U * h1) @ U.T
    homo = (alpha2 + p - 2.0) * np.eye(m) + L_dense
    if order == "hetero_first":
        M = hetero @ homo
    elif order == "homo_first":
        M = homo @ hetero
    else:
        raise InvalidArgumentError(f"order must be 'hetero_first' or 'homo_first', got {order!r}")
    return dense_solve(M, X)
