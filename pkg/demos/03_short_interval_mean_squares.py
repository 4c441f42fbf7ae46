# %% [markdown]
# # Short-interval mean squares
#
# Sigma_k sums (Delta_k(x+h) - Delta_k(x))^2 over integer x in [X, 2X]; I_k
# integrates the same quantity. On each unit cell the window sum is constant,
# so I_k is an exact sum of smooth cell integrals.

# %%
from delta_lab import delta as dl
from delta_lab import jutila as ju

X = 10**6

# %%
print(dl.MeanSquareResult.CSV_HEADER)
for k in (2, 3):
    for h in (10, 100, 500):
        print(dl.theorem2_report(k, X, h).csv_row())

# %% [markdown]
# Dividing by X h isolates a cubic in L = log(sqrt(X)/h); its leading
# coefficient should approach 8/pi^2.

# %%
X = 10**6
hs = (8, 12, 16, 24, 32, 48, 64, 96, 128)
fit = ju.fit_log_cubic([(X, h, dl.discrete_mean_square(2, X, h)) for h in hs])
print("c_j:", [round(c, 4) for c in fit.c], "residual", f"{fit.residual:.2e}")
print("8/pi^2 =", round(ju.C3, 5))

# %% [markdown]
# The global mean square of Delta_k gives a slope estimate for beta_k.

# %%
for k in (2, 3):
    g = dl.global_mean_square(k, 2 * 10**6)
    print(f"k={k}: beta_hat = {g.beta_hat:.4f}, reference (k-1)/(2k) = {(k - 1) / (2 * k):.4f}")
