import math
from math import comb, gcd

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from delta_lab import divisor_sieve as ds
from delta_lab.errors import ConsistencyError, ResourceGuardError, ValidationError

SIEVE_1E6 = {k: ds.sieve_dk_block(k, 1, 10**6) for k in (2, 3, 5, 8)}


@pytest.mark.parametrize("k,n,expected", [(2, 12, 6), (3, 1, 1), (3, 8, 10)])
def test_brute_force_examples(k, n, expected):
    assert ds.brute_force_dk(k, n) == expected


def test_brute_force_counts_tuples():
    # d_3(12) by explicit enumeration of ordered triples
    n = 12
    count = sum(1 for a in range(1, n + 1) for b in range(1, n + 1)
                if n % (a * b) == 0)
    assert ds.brute_force_dk(3, n) == count


@pytest.mark.parametrize("k,n", [(1, 5), (9, 5), (2, 0)])
def test_brute_force_rejects(k, n):
    with pytest.raises(ValidationError):
        ds.brute_force_dk(k, n)


@pytest.mark.parametrize("k,lo,hi,expected", [
    (2, 1, 6, [1, 2, 2, 3, 2, 4]),
    (3, 1, 6, [1, 3, 3, 6, 3, 9]),
    (4, 2, 2, [4]),
])
def test_sieve_examples(k, lo, hi, expected):
    b = ds.sieve_dk_block(k, lo, hi)
    assert b.values.tolist() == expected
    assert len(b) == hi - lo + 1


def test_sieve_matches_oracle_offset_block():
    lo, hi = 999_000, 1_000_000
    b = ds.sieve_dk_block(3, lo, hi)
    assert all(b[n] == ds.brute_force_dk(3, n) for n in range(lo, hi + 1, 37))


def test_sieve_block_guard():
    with pytest.raises(ResourceGuardError):
        ds.sieve_dk_block(2, 1, 1000, block_size=100)


@pytest.mark.parametrize("k", [2, 3, 5, 8])
def test_prime_power_law(k):
    vals = SIEVE_1E6[k].values
    for p in ds.primes_upto(1000).tolist():
        a, q = 1, p
        while q <= 10**6:
            assert int(vals[q - 1]) == comb(a + k - 1, k - 1)
            a, q = a + 1, q * p
    # primes above 1000 only appear to the first power
    for p in ds.primes_upto(10**6)[-50:].tolist():
        assert int(vals[p - 1]) == k


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 1000), st.integers(1, 1000), st.sampled_from([2, 3, 5, 8]))
def test_multiplicativity(m, n, k):
    if gcd(m, n) != 1:
        return
    v = SIEVE_1E6[k].values
    assert int(v[m * n - 1]) == int(v[m - 1]) * int(v[n - 1])


@pytest.mark.parametrize("k,x,expected", [(2, 6, 14), (3, 1, 1), (3, 6, 25)])
def test_summatory_examples(k, x, expected, cache):
    assert ds.summatory_dk(k, x, cache=cache) == expected


@pytest.mark.parametrize("k,x,h,expected", [(2, 6, 6, 21), (2, 6, 0, 0), (3, 1, 5, 24)])
def test_interval_examples(k, x, h, expected):
    assert ds.interval_sum_dk(k, x, h) == expected


def test_summatory_range_guard():
    with pytest.raises(ResourceGuardError):
        ds.summatory_dk(3, ds.max_x_for(3) + 1)


@pytest.mark.parametrize("k", [3, 4])
def test_hyperbola_recursion(k):
    # S_k(x) = sum_{m<=x} S_{k-1}(x // m), with S_{k-1} from the prefix array
    N = 10**5
    prev = np.cumsum(ds.dk_range(k - 1, 1, N).astype(np.int64))
    cur = np.cumsum(ds.dk_range(k, 1, N).astype(np.int64))
    for x in (1, 2, 97, 1000, 65_537, N):
        m = np.arange(1, x + 1)
        assert int(prev[x // m - 1].sum()) == int(cur[x - 1])


def test_summatory_matches_prefix_sums(cache):
    N = 200_000
    pref = np.cumsum(ds.dk_range(3, 1, N).astype(np.int64))
    for x in (1, 5, 12345, N):
        assert ds.summatory_dk(3, x, cache=cache, block_size=1 << 12) == int(pref[x - 1])


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 10**6), st.integers(0, 5000), st.sampled_from([2, 3, 4]))
def test_interval_equals_summatory_difference(x, h, k):
    assert ds.interval_sum_dk(k, x, h) == (
        ds.summatory_dk(k, x + h, block_size=1 << 16) - ds.summatory_dk(k, x, block_size=1 << 16))


def test_checkpoint_cache_roundtrip(tmp_path):
    c = ds.CheckpointCache(tmp_path)
    v = ds.summatory_dk(2, 300_000, cache=c, block_size=1 << 16)
    c.save()
    text = (tmp_path / ds.CHECKPOINT_FILE).read_text().splitlines()
    rows = [tuple(int(p) for p in line.split(",")) for line in text]
    assert rows == sorted(rows)
    assert (2, 300_000, v) in rows
    assert all(s >= x for _, x, s in rows)
    again = ds.CheckpointCache(tmp_path)
    assert again.get(2, 300_000) == v
    # resuming from the floor checkpoint gives the same answer
    assert ds.summatory_dk(2, 400_000, cache=again, block_size=1 << 16) == ds.summatory_dk(2, 400_000)


def test_checkpoint_conflict_is_consistency_error(tmp_path):
    c = ds.CheckpointCache(tmp_path)
    c.add(ds.SummatoryCheckpoint(2, 6, 14))
    with pytest.raises(ConsistencyError):
        c.add(ds.SummatoryCheckpoint(2, 6, 15))


def test_summatory_deterministic_across_workers():
    x = 3_000_000
    vals = {ds.summatory_dk(2, x, workers=w, block_size=1 << 18) for w in (1, 2, 4)}
    assert len(vals) == 1


def test_shiu_type_constant():
    # sum over (x, x+h] against h log^(k-1) x for x^(1/4) <= h; constant recorded
    rng = np.random.default_rng(7)
    worst = {}
    for k in (2, 3):
        for _ in range(60):
            x = int(rng.integers(10**3, 10**8))
            h = int(rng.integers(math.ceil(x**0.25), min(x, 10**5) + 1))
            r = ds.interval_sum_dk(k, x, h) / (h * math.log(x) ** (k - 1))
            worst[k] = max(worst.get(k, 0.0), r)
    print(f"empirical Shiu constants: {worst}")
    assert all(v < 5.0 for v in worst.values())
