import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from delta_lab import jutila as ju
from delta_lab import zeta_engine as ze
from delta_lab.errors import ResourceGuardError, ValidationError


@pytest.fixture(scope="module")
def table():
    return ze.MeanSquareTable(step=0.125)


def test_zeta_examples():
    assert abs(ze.zeta_em(2, 0).value - math.pi**2 / 6) < 1e-12
    assert abs(ze.zeta_em(0.5, 0).value - (-1.4603545088095868)) < 1e-12
    assert abs(ze.zeta_em(0.5, 14.134725141734693).value) < 1e-10


def test_zeta_rejects():
    for s, t in ((0.0, 1.0), (2.5, 1.0), (0.5, 1.1e5)):
        with pytest.raises(ValidationError):
            ze.zeta_em(s, t)
    with pytest.raises(ValidationError):
        ze.zeta_em(1.0, 0.0)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.05, 2.0), st.floats(-2000, 2000))
def test_zeta_against_mpmath(sigma, t):
    if abs(sigma - 1) < 1e-6 and abs(t) < 1e-6:
        return
    p = ze.zeta_em(sigma, t)
    ref = complex(mpmath.zeta(mpmath.mpc(sigma, t)))
    assert abs(p.value - ref) <= max(p.err_bound, 1e-10) + 1e-12 * abs(ref)


@pytest.mark.parametrize("t", [1e2, 1e3, 1e4, 1e5])
def test_error_bound_below_invariant(t):
    assert ze.zeta_em(0.5, t).err_bound < 1e-10


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 2.0), st.floats(1, 5e4))
def test_raising_terms_within_bound(sigma, t):
    a = ze.zeta_em(sigma, t)
    b = ze.zeta_em(sigma, t, n_factor=2.0)
    assert abs(a.value - b.value) <= a.err_bound + b.err_bound + 1e-12


@settings(max_examples=100, deadline=None)
@given(st.floats(0.05, 2.0), st.floats(0.5, 1e5))
def test_conjugate_symmetry(sigma, t):
    a = ze.zeta_em(sigma, t).value
    b = ze.zeta_em(sigma, -t).value
    assert abs(abs(a) - abs(b)) < 1e-12 * max(1.0, abs(a))


def test_grid_matches_pointwise():
    offs = np.array([0.0, 0.3, 0.77])
    g = ze.zeta_on_grid(0.5, 100.0, 0.5, 5000, offs)
    t = 100.0 + np.arange(5000)[:, None] * 0.5 + offs[None, :]
    v, _, _ = ze.zeta_em_array(0.5, t.ravel())
    assert np.max(np.abs(g.ravel() - v)) < 1e-9


def test_moment_small_T_oracle():
    r = ze.moment_integral(2, 0.5, 20.0)
    with mpmath.workdps(15):
        ref = mpmath.quad(lambda t: abs(mpmath.zeta(mpmath.mpc(0.5, t))) ** 4, mpmath.linspace(0, 20, 41))
    # fixed 0.25 node spacing resolves |zeta|^4 to about 2e-6 relative
    assert abs(r.integral / float(ref) - 1) < 1e-5


def test_moment_basics():
    assert ze.moment_integral(2, 0.5, 0.0).integral == 0.0
    a = ze.moment_integral(3, 7 / 12, 200.0)
    b = ze.moment_integral(3, 7 / 12, 400.0)
    assert 0 < a.integral < b.integral
    assert a.sigma_k_reference == 7 / 12
    assert abs(b.integral - a.integral_2T) < 1e-9 * b.integral
    assert ze.SIGMA_K == {2: 0.5, 3: 7 / 12, 4: 5 / 8, 5: 41 / 60}
    with pytest.raises(ResourceGuardError):
        ze.moment_integral(2, 0.5, 6e4)


def test_moment_spacing_halving():
    a = ze.moment_integral(2, 0.5, 1000.0).integral
    b = ze.moment_integral(2, 0.5, 1000.0, spacing=0.125).integral
    assert abs(a / b - 1) < 1e-5


def test_e_term_small_T():
    assert abs(ze.e_term(1e-9)) < 1e-6
    assert ze.e_term(0.0) == 0.0


def test_e_term_against_denser_oracle(table):
    dense = ze.MeanSquareTable(step=0.0625, order=16)
    for T in (137.3, 1000.0):
        assert abs(ze.e_term(T, table) - ze.e_term(T, dense)) < 1e-3
    print(f"E(1000) = {ze.e_term(1000.0, table):.6f}")


def test_table_against_mpmath():
    tab = ze.MeanSquareTable(step=0.25)
    with mpmath.workdps(15):
        ref = mpmath.quad(lambda t: abs(mpmath.zeta(mpmath.mpc(0.5, t))) ** 2, mpmath.linspace(0, 30, 61))
    assert abs(tab(30.0)[0] - float(ref)) < 1e-8


def test_e_derivative_law_midpoint(table):
    # centred form of the finite-difference law; truncation error O(delta^2)
    rng = np.random.default_rng(11)
    T = rng.uniform(10, 1e4, 100)
    d = 1e-3
    lhs = (ze.e_term(T + d, table) - ze.e_term(T, table)) / d
    mid = T + d / 2
    z, _, _ = ze.zeta_em_array(0.5, mid)
    rhs = np.abs(z) ** 2 - np.log(mid / (2 * math.pi)) - 2 * ze.GAMMA
    assert np.max(np.abs(lhs - rhs)) < 1e-3


def test_e_ms_edges(table):
    assert ze.e_short_diff_ms(1e4, 0, table=table) == 0.0
    v = ze.e_short_diff_ms(1e4, 100, table=table)
    assert v > 0 and ju.expected_cubic_main(1e4, 100) == 0.0
    with pytest.raises(ResourceGuardError):
        ze.e_short_diff_ms(2e4, 10, table=table)


def test_e_ms_simpson_vs_direct(table):
    # Simpson on the table grid against a plain trapezoid on the same samples
    X, h = 2000, 10
    v = ze.e_short_diff_ms(X, h, table=table)
    x = np.arange(X, 2 * X + 0.0625, 0.125)
    f = (ze.e_term(x + h, table) - ze.e_term(x, table)) ** 2
    trap = 0.125 * (f.sum() - (f[0] + f[-1]) / 2)
    assert abs(v / trap - 1) < 1e-3


def test_e_ms_order_of_magnitude(table):
    X, h = 10**4, 20
    r = ze.e_short_diff_ms(X, h, table=table) / ju.expected_cubic_main(X, h)
    print(f"E-analogue mean square / cubic main term at (1e4, 20): {r:.3f}")
    assert 0.5 <= r <= 2.0


@pytest.mark.parametrize("k,exact", [(2, 3), (3, 4)])
def test_perron_small_x(k, exact):
    r = ze.perron_truncated(k, 2.5, 2000)
    assert r.exact_sum == exact
    assert abs(r.integral_value - exact) < 0.1


def test_perron_step_converged():
    a = ze.perron_truncated(2, 100.5, 500, step=0.05).integral_value
    b = ze.perron_truncated(2, 100.5, 500, step=0.01).integral_value
    assert abs(a - b) < 1e-3


def test_perron_rejects():
    with pytest.raises(ValidationError):
        ze.perron_truncated(2, 100.05, 100)
    with pytest.raises(ValidationError):
        ze.perron_truncated(2, 100.5, 100, step=0.1)
    with pytest.raises(ValidationError):
        ze.perron_truncated(5, 100.5, 100)


def test_perron_csv_schema():
    r = ze.perron_truncated(2, 10.5, 100)
    assert len(r.csv_row().split(",")) == len(ze.PerronReport.CSV_HEADER.split(","))
