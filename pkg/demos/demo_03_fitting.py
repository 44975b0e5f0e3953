"""
Fitting spectral responses
==========================

Least-squares filter weights for a few target responses on [0, 2], and exact
interpolation of a polynomial response.
"""
import numpy as np

from pcconv.filters import FilterParams, scalar_response
from pcconv.fit import fit_least_squares, interpolate_polynomial, spectral_grid, target_zoo

for name in ("low_band_pass", "comb", "high_pass"):
    rmse = [fit_least_squares(target_zoo(name), K=K, N=25, t=0.5).rmse for K in (2, 5, 10)]
    print(f"{name:14s} rmse at K=2, 5, 10: " + "  ".join(f"{r:.4f}" for r in rmse))

# a larger diffusion scale changes the basis and with it the fit quality
for t in (0.5, 1.5, 2.5, 4.5):
    print(f"low_band_pass, K=10, t={t}: rmse {fit_least_squares(target_zoo('low_band_pass'), K=10, N=25, t=t).rmse:.4f}")

# any polynomial of degree K is reproduced exactly with N = K
b = np.array([1.0, -0.8, 0.3, 0.05])
theta = interpolate_polynomial(b, K=3, N=3, t=0.5)
lam = spectral_grid()
err = np.abs(scalar_response(FilterParams(theta, 0.5, N=3), lam) - np.polyval(b[::-1], lam)).max()
print("theta:", np.round(theta, 6), f" max residual {err:.1e}")
