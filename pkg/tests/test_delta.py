import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from delta_lab import delta as dl
from delta_lab import jutila as ju
from delta_lab import mainterm as mt
from delta_lab.errors import ResourceGuardError, ValidationError

GAMMA = 0.5772156649015329


def test_delta_k_examples(cache):
    assert abs(dl.delta_k(2, 1, cache=cache) - (2 - 2 * GAMMA)) < 1e-12
    assert abs(dl.delta_k(2, 6, cache=cache) - (14 - 6 * (math.log(6) + 2 * GAMMA - 1))) < 1e-12
    p0 = float(mt.mainterm_poly(3).p_coeffs[0])
    assert abs(dl.delta_k(3, 1, cache=cache) - (1 - p0)) < 1e-12


def test_delta_k_rejects():
    with pytest.raises(ValidationError):
        dl.delta_k(2, 0.5)
    with pytest.raises(ResourceGuardError):
        dl.delta_k(3, 10**9)


def test_short_diff_examples(cache):
    assert dl.short_diff(2, 6, 0).value == 0.0
    with mpmath.workdps(40):
        expected = 21 - (mt.eval_main(2, 12) - mt.eval_main(2, 6))
    assert abs(dl.short_diff(2, 6, 6, cache=cache).value - float(expected)) < 1e-9


@settings(max_examples=1000, deadline=None)
@given(st.floats(1.0, 2e5), st.floats(0.0, 2e3), st.sampled_from([2, 3, 4]))
def test_short_diff_identity(x, h, k):
    # raises ConsistencyError if the two routes disagree beyond 1e-6
    s = dl.short_diff(k, x, h)
    assert math.isfinite(s.value)


def test_short_diff_size_envelope():
    # |Delta(x+h) - Delta(x)| <= C h log^(k-1) x on samples; C recorded
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(200):
        x = int(rng.integers(10**4, 10**6))
        h = int(rng.integers(math.ceil(x**0.25), 5000))
        v = dl.short_diff_array(3, x, x, h)[0]
        worst = max(worst, abs(v) / (h * math.log(x) ** 2))
    print(f"short-difference envelope constant: {worst:.4f}")
    assert worst < 1.0


def test_short_diff_array_matches_scalar():
    arr = dl.short_diff_array(2, 1000, 1010, 7)
    ref = [dl.short_diff(2, x, 7).value for x in range(1000, 1011)]
    assert np.allclose(arr, ref, atol=1e-9, rtol=0)


def test_discrete_tiny_oracle():
    ref = math.fsum((dl.delta_k(2, x + 1) - dl.delta_k(2, x)) ** 2 for x in range(10, 21))
    assert abs(dl.discrete_mean_square(2, 10, 1) - ref) < 1e-9


def test_h_zero_is_zero():
    assert dl.discrete_mean_square(2, 1000, 0) == 0.0
    assert dl.continuous_mean_square(2, 1000, 0) == 0.0


@pytest.mark.parametrize("k,h", [(2, 1), (2, 37), (3, 12)])
def test_streaming_equals_naive(k, h):
    X = 10**4
    assert dl.discrete_mean_square(k, X, h, chunk=999) == dl.discrete_mean_square_naive(k, X, h)


def test_streaming_independent_of_chunk_and_workers():
    X, h = 200_000, 50
    vals = {dl.discrete_mean_square(2, X, h, chunk=c, workers=w)
            for c, w in ((1 << 18, 1), (12_345, 4), (7_777, 8))}
    assert len(vals) == 1
    vals = {dl.continuous_mean_square(3, X, h, chunk=c, workers=w)
            for c, w in ((1 << 18, 1), (12_345, 4), (7_777, 8))}
    assert len(vals) == 1


def test_cell_additivity():
    X, h = 100_000, 40
    whole = dl.continuous_mean_square(2, X, h)
    mid = 3 * X // 2
    parts = dl.continuous_mean_square(2, X, h, upper=mid) + dl.continuous_mean_square(2, mid, h, upper=2 * X)
    assert abs(parts / whole - 1) < 1e-10


@pytest.mark.parametrize("k", [2, 3])
def test_quad_order_doubling(k):
    a = dl.continuous_mean_square(k, 10**5, 30, 16)
    b = dl.continuous_mean_square(k, 10**5, 30, 32)
    assert abs(a / b - 1) < 1e-8


def test_bad_quad_order_and_real_h():
    with pytest.raises(ValidationError):
        dl.continuous_mean_square(2, 1000, 5, 12)
    with pytest.raises(ValidationError):
        dl.continuous_mean_square(2, 1000, 2.5)


def test_extended_profile_agrees():
    a = dl.continuous_mean_square(2, 10**5, 50)
    b = dl.continuous_mean_square(2, 10**5, 50, extended=True)
    assert abs(a / b - 1) < 1e-10


def test_discrete_consistency_window():
    X, h = 10**6, 100
    r = dl.discrete_mean_square(2, X, h) / ju.expected_cubic_main(X, h)
    print(f"Sigma_2(1e6, 100) / cubic main term = {r:.4f}")
    assert 0.5 <= r <= 2.0


def test_theorem2_report_fields():
    X = 10**4
    r = dl.theorem2_report(2, X, 50)
    assert r.in_range and r.discrete >= 0 and r.continuous >= 0 and r.bound > 0
    assert r.discrepancy == r.discrete - r.continuous
    assert len(r.csv_row().split(",")) == len(dl.MeanSquareResult.CSV_HEADER.split(","))
    assert not dl.theorem2_report(2, X, 51).in_range
    assert not dl.theorem2_report(2, X, 1).in_range


def test_global_mean_square_edges():
    assert dl.global_mean_square(2, 1).value == 0.0


def test_global_mean_square_direct_oracle():
    # cell integrals against mpmath quadrature of Delta^2 on a few cells
    X = 40
    g = dl.global_mean_square(2, X)
    with mpmath.workdps(30):
        total = mpmath.mpf(0)
        for m in range(1, X):
            A = sum(dl_d(n) for n in range(1, m + 1))
            total += mpmath.quad(lambda t: (A - t * (mpmath.log(t) + 2 * mpmath.euler - 1)) ** 2, [m, m + 1])
    assert abs(g.value - float(total)) < 1e-9 * float(total)


def dl_d(n):
    return sum(1 for d in range(1, n + 1) if n % d == 0)


def test_omega_envelope():
    r = ju.omega_scan(2, 10**6, 100, 100_000)
    print(f"omega statistic max_ratio = {r.max_ratio:.4f} at x = {r.argmax_x}")
    assert r.max_ratio >= 0.1
