# %% [markdown]
# # Truncated Perron integral
#
# The partial sum of d_k(n) up to a half-integer x is recovered from a vertical
# line integral of x^s zeta(s)^k / s at Re s = 1 + 1/log x.

# %%
from delta_lab import zeta_engine as ze

# %%
print(ze.PerronReport.CSV_HEADER)
for k, x in ((2, 2.5), (3, 2.5), (2, 100.5)):
    for T in (250, 500, 1000, 2000):
        print(ze.perron_truncated(k, x, T).csv_row(), f"# k = {k}")

# %% [markdown]
# The error shrinks on average like x/T but oscillates: terms with n close to
# x contribute sin(T log(x/n)) / T pieces that do not decay monotonically.
