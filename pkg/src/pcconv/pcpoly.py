"""Poisson-Charlier coefficients ``C_n(gamma, t)``.

They are the Taylor coefficients of ``G(gamma, t, lam) = (1 - lam)**gamma * exp(t * lam)``
in the form ``G = sum_n (-lam)**n / n! * C_n(gamma, t)``, and obey

    C_0 = 1,  C_1 = gamma - t,
    C_n = (gamma - n - t + 1) C_{n-1} - (n - 1) t C_{n-2}.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvalidArgumentError

__all__ = [
    "PCCoeffTable",
    "pc_coeff_recurrence",
    "pc_coeff_explicit",
    "series_eval_G",
    "closed_form_G",
    "build_table",
    "check_t",
    "DEFAULT_N",
]

DEFAULT_N = 10
T_INTEGER_TOL = 1e-9


def check_t(t: float, K: int) -> None:
    """Reject ``t <= 0`` and ``t`` within ``1e-9`` of any integer in ``1..K``."""
    if not (np.isfinite(t) and t > 0):
        raise InvalidArgumentError(f"t must be positive and finite, got {t}")
    nearest = round(t)
    if 1 <= nearest <= K and abs(t - nearest) <= T_INTEGER_TOL:
        raise InvalidArgumentError(f"t={t} coincides with a filter order in 1..{K}")


def pc_coeff_recurrence(gamma: float, t: float, N: int) -> np.ndarray:
    """``[C_0, ..., C_N]`` by the three-term recurrence."""
    if N < 0:
        raise InvalidArgumentError("N must be non-negative")
    c = np.empty(N + 1)
    c[0] = 1.0
    if N >= 1:
        c[1] = gamma - t
    for n in range(2, N + 1):
        c[n] = (gamma - n - t + 1.0) * c[n - 1] - (n - 1) * t * c[n - 2]
    return c


def pc_coeff_explicit(gamma: float, t: float, n: int) -> float:
    """``sum_k binom(n, k) (-t)^k gamma (gamma-1) ... (gamma-n+k+1)``.

    Independent of the recurrence; used as its oracle.
    """
    if n < 0:
        raise InvalidArgumentError("n must be non-negative")
    total = 0.0
    for k in range(n + 1):
        falling = 1.0
        for j in range(n - k):
            falling *= gamma - j
        total += math.comb(n, k) * (-t) ** k * falling
    return total


def series_eval_G(gamma: float, t: float, lam, N: int):
    """Truncated series ``sum_{n<=N} (-lam)^n / n! * C_n(gamma, t)``.

    ``lam`` may be a scalar or an array.  The factor ``(-lam)^n / n!`` is
    updated incrementally, never through an explicit factorial.
    """
    c = pc_coeff_recurrence(gamma, t, N)
    lam = np.asarray(lam, dtype=np.float64)
    term = np.ones_like(lam)
    total = c[0] * term
    for n in range(1, N + 1):
        term = term * (-lam) / n
        total = total + c[n] * term
    return total if total.ndim else float(total)


def closed_form_G(gamma: float, t: float, lam):
    """``(1 - lam)**gamma * exp(t * lam)``; non-integer ``gamma`` needs ``lam < 1``."""
    lam = np.asarray(lam, dtype=np.float64)
    integral = float(gamma).is_integer()
    if not integral and np.any(lam >= 1.0):
        raise DomainError(f"(1 - lam)**{gamma} is not real for lam >= 1")
    base = 1.0 - lam
    power = base ** int(gamma) if integral else base**gamma
    out = power * np.exp(t * lam)
    return out if out.ndim else float(out)


@dataclass(frozen=True, eq=False)
class PCCoeffTable:
    """``coeffs[n, k - 1] = C_n(k, t)`` for ``n = 0..N`` and ``k = 1..K``."""

    t: float
    N: int
    K: int
    coeffs: np.ndarray

    def column(self, k: int) -> np.ndarray:
        if not 1 <= k <= self.K:
            raise InvalidArgumentError(f"k must lie in 1..{self.K}")
        return self.coeffs[:, k - 1]

    def __getitem__(self, nk):
        n, k = nk
        return float(self.column(k)[n])

    def taylor(self) -> np.ndarray:
        """Series coefficients ``(-1)^n C_n(k, t) / n!`` with the same layout."""
        scale = np.ones(self.N + 1)
        for n in range(1, self.N + 1):
            scale[n] = scale[n - 1] * (-1.0) / n
        return self.coeffs * scale[:, None]


def build_table(t: float, N: int, K: int) -> PCCoeffTable:
    if N < 0:
        raise InvalidArgumentError("N must be non-negative")
    if K < 1:
        raise InvalidArgumentError("K must be at least 1")
    coeffs = np.column_stack([pc_coeff_recurrence(k, t, N) for k in range(1, K + 1)])
    coeffs.setflags(write=False)
    return PCCoeffTable(float(t), int(N), int(K), coeffs)
