# %% [markdown]
# # The main-term polynomial
#
# P_{k-1} comes from the residue of x^s zeta(s)^k / s at s = 1, built from the
# Laurent coefficients of zeta (Stieltjes constants) in 40-digit arithmetic.

# %%
import mpmath

from delta_lab import divisor_sieve as ds
from delta_lab import mainterm as mt

# %%
for k in (2, 3, 4):
    print(f"k={k}:", [mpmath.nstr(c, 12) for c in mt.mainterm_poly(k).p_coeffs])

# %% [markdown]
# A contour integral around s = 1 gives the same number as the polynomial.

# %%
x, k, M = 100, 3, 96
acc = 0
for j in range(M):
    u = 0.5 * mpmath.expj(2 * mpmath.pi * j / M)
    acc += mpmath.power(x, 1 + u) * mpmath.zeta(1 + u) ** k / (1 + u) * u
print("contour :", mpmath.nstr((acc / M).real, 15))
print("residue :", mpmath.nstr(mt.eval_main(k, x), 15))

# %% [markdown]
# The remainder Delta_2(x) stays far below sqrt(x).

# %%
for x in (10**3, 10**5, 10**7):
    d = ds.summatory_dk(2, x) - mt.eval_main(2, x)
    print(f"x = {x:>8}: Delta_2 = {float(d):10.4f}, Delta_2 / sqrt(x) = {float(d) / x**0.5:.5f}")
