# %% [markdown]
# # zeta on the critical line
#
# Euler-Maclaurin through B_12 with N about 1.2|t| terms. Prime phases are
# reduced mod 2 pi in double-double so accuracy holds up to |t| = 1e5.

# %%
import math

import mpmath
import numpy as np

from delta_lab import jutila as ju
from delta_lab import zeta_engine as ze

# %%
for t in (0.0, 14.134725141734693, 1e3, 1e5):
    p = ze.zeta_em(0.5, t)
    ref = complex(mpmath.zeta(mpmath.mpc(0.5, t)))
    print(f"t = {t:>10}: |error| = {abs(p.value - ref):.1e}, bound {p.err_bound:.1e}, N = {p.terms_used}")

# %% [markdown]
# Moments at the abscissae sigma(k), with the doubling exponent.

# %%
print(ze.MomentResult.CSV_HEADER)
for k, sigma in ze.SIGMA_K.items():
    print(ze.moment_integral(k, sigma, 2000).csv_row())

# %% [markdown]
# E(T) and its short-interval mean square.

# %%
tab = ze.MeanSquareTable(step=0.125)
print("E(T) at T = 1000, 2000, 4000:", np.round(ze.e_term(np.array([1e3, 2e3, 4e3]), tab), 4))
X = 4000
for h in (2, 4, 8, 16):
    v = ze.e_short_diff_ms(X, h, table=tab)
    print(f"h = {h:>2}: value = {v:.4g}, cubic main term = {ju.expected_cubic_main(X, h):.4g}")
