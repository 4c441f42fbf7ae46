# %% [markdown]
# # The divisor series as a second route to I_2
#
# The series weights d(n)^2 / n^(3/2) against an oscillatory integral over
# [X, 2X]; it is evaluated with panels that keep the phase advance below pi/4.

# %%
from delta_lab import delta as dl
from delta_lab import jutila as ju

# %%
X, h = 10**6, 50
direct = dl.continuous_mean_square(2, X, h)
print(ju.JutilaComparison.CSV_HEADER)
for factor in (1, 2, 4, 10):
    s = ju.jutila_series(X, h)
    s = ju.jutila_series(X, h, n_max=s.n_max * factor)
    print(ju.JutilaComparison(X, h, s.value, direct).csv_row(), f"# n_max = {s.n_max}")

# %% [markdown]
# Extending the truncation moves the series toward the direct value, so the
# default cut-off carries most of the gap.

# %%
r = ju.omega_scan(2, X, 100, 100_000)
print(ju.OmegaReport.CSV_HEADER)
print(r.csv_row())
