# %% [markdown]
# # Counting d_k(n) with the segmented sieve
#
# d_k(n) counts ordered k-tuples with product n. The sieve fills a block of
# consecutive n at once; the brute-force enumerator is kept around as an oracle.

# %%
import math

import numpy as np

from delta_lab import divisor_sieve as ds

# %%
block = ds.sieve_dk_block(3, 1, 12)
print("d_3(1..12):", block.values.tolist())
print("oracle    :", [ds.brute_force_dk(3, n) for n in range(1, 13)])

# %% [markdown]
# Prime powers follow the binomial law d_k(p^a) = C(a+k-1, k-1).

# %%
for a in range(1, 6):
    print(f"d_4(2^{a}) = {ds.sieve_dk_block(4, 2**a, 2**a)[2**a]}, binomial = {math.comb(a + 3, 3)}")

# %% [markdown]
# Summatory values are exact Python integers. A checkpoint cache lets later
# calls start from the nearest stored x instead of from 1.

# %%
cache = ds.CheckpointCache(".delta_lab_cache")
for x in (10**4, 10**6, 10**7):
    print(f"sum_(n <= {x:>8}) d_2(n) = {ds.summatory_dk(2, x, cache=cache)}")

# %%
x = 10**6
short = [ds.interval_sum_dk(3, x, h) / (h * math.log(x) ** 2) for h in (32, 100, 1000, 10**4)]
print("interval sums of d_3 over h log^2 x:", np.round(short, 4))
