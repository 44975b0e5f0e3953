"""
Poisson-Charlier coefficients and the filter series
===================================================

The coefficients C_n(k, t) come from a three-term recurrence.  Scaled by
(-1)^n / n! they are the Taylor coefficients of (1 - lam)^k exp(t lam).
"""
import numpy as np

from pcconv.pcpoly import build_table, closed_form_G, pc_coeff_explicit, pc_coeff_recurrence, series_eval_G

# the recurrence and the explicit sum agree
t = 0.5
for k in (1, 2, 3):
    rec = pc_coeff_recurrence(k, t, 6)
    exp = [pc_coeff_explicit(k, t, n) for n in range(7)]
    print(f"k={k}  recurrence {np.round(rec, 4)}  max diff {np.abs(rec - exp).max():.1e}")

# a table holds every filter order at once; row 0 is all ones, row 1 is k - t
table = build_table(t, 4, 3)
print(table.coeffs)

# inside |lam| < 1 the truncated series converges quickly to the closed form
lam = np.linspace(0.0, 0.9, 10)
for N in (2, 5, 10, 20):
    err = np.abs(series_eval_G(3, t, lam, N) - closed_form_G(3, t, lam)).max()
    print(f"N={N:2d}  max error on [0, 0.9]: {err:.2e}")

# towards lam = 2 the alternating terms grow before they shrink, so N matters more
lam = np.linspace(1.0, 1.99, 10)
for N in (10, 25, 40):
    err = np.abs(series_eval_G(3, 2.0, lam, N) - closed_form_G(3, 2.0, lam)).max()
    print(f"t=2, N={N:2d}  max error on [1, 2): {err:.2e}")
