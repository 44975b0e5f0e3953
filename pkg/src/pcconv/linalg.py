"""Small linear-algebra kernel: an immutable CSR matrix, a Jacobi eigensolver
for dense symmetric matrices and an LU solver with partial pivoting.

Dense matrices are plain 2-D ``float64`` numpy arrays.  The eigensolver and the
dense solver exist for oracles and tests; the propagation path only touches
:func:`spmv` and :func:`spmm`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import ConvergenceError, InvalidArgumentError, SingularMatrixError

__all__ = [
    "SparseMatrix",
    "spmv",
    "spmm",
    "sym_eig",
    "dense_solve",
    "MAX_EIG_SIZE",
]

MAX_EIG_SIZE = 1000
_EIG_TOL = 1e-12
_MAX_SWEEPS = 60
_PIVOT_TOL = 1e-12


def _frozen(a, dtype):
    a = np.ascontiguousarray(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    """Compressed-sparse-row matrix with sorted, duplicate-free rows.

    Use the ``from_*`` constructors; the raw constructor validates but does not
    repair its input.
    """

    n_rows: int
    n_cols: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    values: np.ndarray
    symmetric: bool = field(default=False)

    def __post_init__(self):
        object.__setattr__(self, "row_ptr", _frozen(self.row_ptr, np.int64))
        object.__setattr__(self, "col_idx", _frozen(self.col_idx, np.int64))
        object.__setattr__(self, "values", _frozen(self.values, np.float64))
        self._validate()

    def _validate(self):
        rp, ci = self.row_ptr, self.col_idx
        if self.n_rows < 0 or self.n_cols < 0:
            raise InvalidArgumentError("negative matrix dimension")
        if rp.shape != (self.n_rows + 1,):
            raise InvalidArgumentError(f"row_ptr must have length n_rows+1={self.n_rows + 1}")
        if rp[0] != 0 or rp[-1] != len(self.values) or len(ci) != len(self.values):
            raise InvalidArgumentError("row_ptr endpoints disagree with the number of stored entries")
        if np.any(np.diff(rp) < 0):
            raise InvalidArgumentError("row_ptr must be non-decreasing")
        if len(ci) and (ci.min() < 0 or ci.max() >= self.n_cols):
            raise InvalidArgumentError("column index out of range")
        # strictly increasing columns inside each row
        if len(ci) > 1:
            step = np.diff(ci)
            row_start = np.zeros(len(ci), dtype=bool)
            row_start[rp[:-1][rp[:-1] < len(ci)]] = True
            if np.any((step <= 0) & ~row_start[1:]):
                raise InvalidArgumentError("column indices must be strictly increasing within a row")
        if self.symmetric:
            if self.n_rows != self.n_cols:
                raise InvalidArgumentError("a symmetric matrix must be square")
            diff = self.to_scipy() - self.to_scipy().T
            if diff.nnz and np.any(diff.data != 0):
                raise InvalidArgumentError("matrix flagged symmetric is not symmetric")

    # -- constructors -------------------------------------------------
    @classmethod
    def from_coo(cls, rows, cols, vals, shape, symmetric=False) -> "SparseMatrix":
        """Build from triplets; duplicates are summed and rows sorted."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        n_rows, n_cols = shape
        if len(rows) and (rows.min() < 0 or rows.max() >= n_rows or cols.min() < 0 or cols.max() >= n_cols):
            raise InvalidArgumentError("triplet index out of range")
        m = sp.coo_matrix((vals, (rows, cols)), shape=shape).tocsr()
        m.sum_duplicates()
        m.sort_indices()
        return cls.from_scipy(m, symmetric=symmetric)

    @classmethod
    def from_scipy(cls, m, symmetric=False) -> "SparseMatrix":
        m = sp.csr_matrix(m, dtype=np.float64, copy=True)
        m.sum_duplicates()
        m.sort_indices()
        return cls(m.shape[0], m.shape[1], m.indptr, m.indices, m.data, symmetric)

    @classmethod
    def from_dense(cls, a, symmetric=False) -> "SparseMatrix":
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 2:
            raise InvalidArgumentError("dense input must be 2-D")
        return cls.from_scipy(sp.csr_matrix(a), symmetric=symmetric)

    @classmethod
    def identity(cls, n: int, scale: float = 1.0) -> "SparseMatrix":
        return cls(n, n, np.arange(n + 1), np.arange(n), np.full(n, float(scale)), symmetric=True)

    @classmethod
    def zeros(cls, n_rows: int, n_cols: int | None = None) -> "SparseMatrix":
        n_cols = n_rows if n_cols is None else n_cols
        return cls(n_rows, n_cols, np.zeros(n_rows + 1), np.zeros(0), np.zeros(0), symmetric=n_rows == n_cols)

    # -- views --------------------------------------------------------
    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_rows, self.n_cols)

    @property
    def nnz(self) -> int:
        return len(self.values)

    @cached_property
    def _csr(self):
        return sp.csr_matrix((self.values, self.col_idx, self.row_ptr), shape=self.shape, copy=False)

    def to_scipy(self):
        """A scipy CSR view sharing (read-only) storage."""
        return self._csr

    def to_dense(self) -> np.ndarray:
        return self._csr.toarray()

    def __repr__(self):
        return f"SparseMatrix(shape={self.shape}, nnz={self.nnz}, symmetric={self.symmetric})"


def spmv(A: SparseMatrix, x) -> np.ndarray:
    """``y = A @ x``; rows are summed in stored (row-major) order."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != A.n_cols:
        raise InvalidArgumentError(f"spmv: vector of length {x.shape} does not match {A.shape}")
    return A.to_scipy() @ x


def spmm(A: SparseMatrix, X) -> np.ndarray:
    """``A @ X`` for a dense ``X``; each column equals ``spmv(A, X[:, c])``."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != A.n_cols:
        raise InvalidArgumentError(f"spmm: operand of shape {X.shape} does not match {A.shape}")
    return np.asarray(A.to_scipy() @ X)


def _check_square(A, name):
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidArgumentError(f"{name}: expected a square matrix, got shape {A.shape}")
    return A


def _round_robin(n):
    """Pairings of a round-robin tournament on ``n`` (even) players.

    Every unordered pair appears exactly once over the ``n - 1`` rounds, and
    pairs inside a round are disjoint, so their rotations commute.
    """
    players = list(range(n))
    rounds = []
    for _ in range(n - 1):
        half = n // 2
        p = np.array(players[:half])
        q = np.array(players[half:][::-1])
        rounds.append((np.minimum(p, q), np.maximum(p, q)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _off_norm(a):
    # direct sum; ||a||_F^2 - sum(diag^2) cancels catastrophically near convergence
    off = a.copy()
    np.fill_diagonal(off, 0.0)
    return float(np.linalg.norm(off))


def sym_eig(A):
    """Eigen-decomposition of a dense symmetric matrix by cyclic Jacobi sweeps.

    Each sweep annihilates every off-diagonal pair once, in round-robin order
    so that ``n/2`` disjoint rotations are applied per vectorized step.  Sweeps
    stop when the off-diagonal Frobenius norm falls to ``1e-12 * ||A||_F``.

    Returns ``(w, U)`` with ``w`` ascending and ``A @ U == U @ diag(w)``.
    """
    A = _check_square(A, "sym_eig")
    n = A.shape[0]
    if n > MAX_EIG_SIZE:
        raise InvalidArgumentError(f"sym_eig is limited to n <= {MAX_EIG_SIZE}, got {n}")
    scale = max(1.0, float(np.abs(A).max())) if n else 1.0
    if not np.all(np.isfinite(A)):
        raise InvalidArgumentError("sym_eig: non-finite entries")
    if n and np.abs(A - A.T).max() > 1e-12 * scale:
        raise InvalidArgumentError("sym_eig: matrix is not symmetric")
    if n <= 1:
        return A.diagonal().copy(), np.eye(n)

    a = 0.5 * (A + A.T)
    v = np.eye(n)
    norm = np.linalg.norm(a)
    if norm == 0.0:
        return np.zeros(n), v

    # odd sizes get a phantom player whose pairings are dropped
    size = n + (n % 2)
    rounds = []
    for p, q in _round_robin(size):
        keep = q < n
        rounds.append((p[keep], q[keep]))

    target = _EIG_TOL * norm
    for _ in range(_MAX_SWEEPS):
        if _off_norm(a) <= target:
            break
        for p, q in rounds:
            apq = a[p, q]
            active = apq != 0.0
            if not active.any():
                continue
            p, q, apq = p[active], q[active], apq[active]
            theta = (a[q, q] - a[p, p]) / (2.0 * apq)
            t = np.sign(theta) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
            t[theta == 0.0] = 1.0
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c

            # a <- J^T a J, with J[p,p]=J[q,q]=c, J[p,q]=s, J[q,p]=-s
            ap, aq = a[:, p], a[:, q]
            a[:, p], a[:, q] = c * ap - s * aq, s * ap + c * aq
            rp, rq = a[p, :], a[q, :]
            a[p, :], a[q, :] = c[:, None] * rp - s[:, None] * rq, s[:, None] * rp + c[:, None] * rq
            a[p, q] = 0.0
            a[q, p] = 0.0
            vp, vq = v[:, p], v[:, q]
            v[:, p], v[:, q] = c * vp - s * vq, s * vp + c * vq
    else:
        off = _off_norm(a)
        if off > target:
            raise ConvergenceError(f"Jacobi did not converge in {_MAX_SWEEPS} sweeps (off-norm {off:.3e})")

    w = a.diagonal().copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def dense_solve(A, B):
    """Solve ``A X = B`` by LU factorization with partial pivoting.

    ``B`` may be a vector or a matrix.  A pivot whose magnitude is at most
    ``1e-12 * max|A|`` raises :class:`SingularMatrixError` naming its index.
    """
    A = _check_square(A, "dense_solve")
    B = np.asarray(B, dtype=np.float64)
    vector = B.ndim == 1
    if vector:
        B = B[:, None]
    n = A.shape[0]
    if B.ndim != 2 or B.shape[0] != n:
        raise InvalidArgumentError(f"dense_solve: right-hand side of shape {B.shape} does not match {A.shape}")
    if n == 0:
        return B[:, 0].copy() if vector else B.copy()

    lu = A.copy()
    x = B.copy()
    threshold = _PIVOT_TOL * max(float(np.abs(A).max()), np.finfo(float).tiny)
    for k in range(n):
        piv = k + int(np.argmax(np.abs(lu[k:, k])))
        mag = abs(lu[piv, k])
        if not mag > threshold:
            raise SingularMatrixError(k, mag)
        if piv != k:
            lu[[k, piv]] = lu[[piv, k]]
            x[[k, piv]] = x[[piv, k]]
        factors = lu[k + 1:, k] / lu[k, k]
        lu[k + 1:, k:] -= np.outer(factors, lu[k, k:])
        x[k + 1:] -= np.outer(factors, x[k])

    for k in range(n - 1, -1, -1):
        x[k] = (x[k] - lu[k, k + 1:] @ x[k + 1:]) / lu[k, k]
    return x[:, 0] if vector else x
