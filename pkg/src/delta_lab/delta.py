"""Error terms Delta_k(x) and their short-interval mean squares.

The bulk routines stream over integer x in fixed-size chunks. For each chunk
the divisor counts on (a, b+h] are sieved once and prefix-summed, which gives
every window sum S(x) = sum_{x<n<=x+h} d_k(n) with integer arithmetic. The
short difference is then

    Delta_k(x+h) - Delta_k(x) = S(x) - [M(x+h) - M(x)],   M(x) = x P_{k-1}(log x),

with the bracket evaluated by ``mainterm.main_diff_array`` (no cancellation).

For the integral over [X, 2X] note that S(x) is constant on each unit cell
[m, m+1), so each cell is a smooth integrand handled by Gauss-Legendre.
Every floating sum is exactly rounded (``math.fsum``) in ascending x, so
results depend neither on chunking nor on the number of workers.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from typing import Iterator

import mpmath
import numpy as np

from . import divisor_sieve as ds
from .errors import ConsistencyError, ResourceGuardError, ValidationError
from .mainterm import WORK_DPS, main_array, main_diff_array, mainterm_poly
from .parallel import ordered_map, resolve_workers

DEFAULT_CHUNK = 1 << 18
QUAD_ORDERS = (8, 16, 32)
DEFAULT_QUAD_ORDER = 16
SHORT_DIFF_TOL = 1e-6
# epsilon in the X^eps h^3 envelope for k >= 3
REPORT_EPS = 0.01


def _check_range(k: int, top: int) -> None:
    limit = ds.max_x_for(k)
    if top > limit:
        raise ResourceGuardError(f"x range reaches {top}, beyond the sieve limit {limit} for k={k}")


def _main_mp(k: int, x) -> mpmath.mpf:
    # x P(log x) for x >= 1; eval_main itself refuses x <= 1
    poly = mainterm_poly(k)
    with mpmath.workdps(WORK_DPS):
        xm = mpmath.mpf(x)
        return +(xm * mpmath.polyval(poly.p_coeffs[::-1], mpmath.log(xm)))


def delta_k(k: int, x, *, cache: ds.CheckpointCache | None = None, workers: int | None = 1) -> float:
    """Delta_k(x) = sum_{n<=x} d_k(n) - x P_{k-1}(log x)."""
    if x < 1:
        raise ValidationError(f"Delta_k needs x >= 1, got {x}")
    _check_range(k, math.floor(x))
    count = ds.summatory_dk(k, x, cache=cache, workers=workers)
    with mpmath.workdps(WORK_DPS):
        return float(count - _main_mp(k, x))


@dataclass(frozen=True)
class ShortDiffSample:
    k: int
    x: float
    h: float
    value: float


def short_diff(k: int, x, h, *, cache: ds.CheckpointCache | None = None,
               tol: float = SHORT_DIFF_TOL) -> ShortDiffSample:
    """Delta_k(x+h) - Delta_k(x), cross-checked against the interval-sum form.

    Raises ConsistencyError if the two routes differ by more than ``tol``.
    """
    if h < 0:
        raise ValidationError(f"h must be >= 0, got {h}")
    if h == 0:
        return ShortDiffSample(k, x, h, 0.0)
    via_delta = delta_k(k, x + h, cache=cache) - delta_k(k, x, cache=cache)
    # integer endpoints: floor(x + h') can round past x + h when x is real
    lo = math.floor(x)
    window = ds.interval_sum_dk(k, lo, math.floor(x + h) - lo)
    with mpmath.workdps(WORK_DPS):
        via_window = float(window - (_main_mp(k, x + h) - _main_mp(k, x)))
    if abs(via_delta - via_window) > tol:
        raise ConsistencyError(
            f"short difference routes disagree at k={k}, x={x}, h={h}: "
            f"{via_delta!r} vs {via_window!r}"
        )
    return ShortDiffSample(k, x, h, via_delta)


# ---------------------------------------------------------------------------
# streaming machinery
# ---------------------------------------------------------------------------

def window_sums(k: int, a: int, b: int, h: int) -> np.ndarray:
    """S(x) = sum_{x<n<=x+h} d_k(n) for integer x in [a, b], as int64."""
    d = ds.sieve_dk_block(k, a + 1, b + h, block_size=max(ds.DEFAULT_BLOCK_SIZE, b - a + h + 1)).values
    c = np.empty(len(d) + 1, dtype=np.int64)
    c[0] = 0
    np.cumsum(d, out=c[1:])
    return c[h : h + b - a + 1] - c[: b - a + 1]


def _chunks(lo: int, hi: int, chunk: int) -> list[tuple[int, int]]:
    return list(ds.iter_blocks(lo, hi, chunk))


def short_diff_array(k: int, a: int, b: int, h: int, extended: bool = False) -> np.ndarray:
    """Delta_k(x+h) - Delta_k(x) for every integer x in [a, b]."""
    poly = mainterm_poly(k)
    x = np.arange(a, b + 1, dtype=np.float64)
    s = window_sums(k, a, b, h)
    return (s - main_diff_array(poly, x, h, extended)).astype(np.float64)


def _stream(fn, pieces, workers) -> Iterator[float]:
    for arr in ordered_map(fn, pieces, workers):
        yield from arr.tolist()


def discrete_mean_square(
    k: int,
    X: int,
    h: int,
    *,
    upper: int | None = None,
    workers: int | None = 1,
    chunk: int = DEFAULT_CHUNK,
    extended: bool = False,
) -> float:
    """sum over integer x in [X, upper] (default upper = 2X) of (Delta_k(x+h) - Delta_k(x))^2."""
    ds._check_k(k)
    if X < 1 or h < 0:
        raise ValidationError(f"need X >= 1 and h >= 0, got X={X}, h={h}")
    upper = 2 * X if upper is None else upper
    if h == 0 or upper < X:
        return 0.0
    _check_range(k, upper + h)

    def piece(ab):
        v = short_diff_array(k, ab[0], ab[1], h, extended)
        return v * v

    return math.fsum(_stream(piece, _chunks(X, upper, chunk), resolve_workers(workers)))


def discrete_mean_square_naive(k: int, X: int, h: int, upper: int | None = None) -> float:
    """Per-x recomputation of the window sum; test oracle for the streaming form."""
    upper = 2 * X if upper is None else upper
    if h == 0:
        return 0.0
    poly = mainterm_poly(k)
    d = ds.sieve_dk_block(k, X + 1, upper + h, block_size=upper + h).values
    terms = []
    for x in range(X, upper + 1):
        s = int(d[x - X : x - X + h].sum())
        g = main_diff_array(poly, np.array([float(x)]), h)[0]
        terms.append(float(s - g) ** 2)
    return math.fsum(terms)


@functools.lru_cache(maxsize=None)
def gauss_legendre_unit(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the order-point Gauss-Legendre rule on [0, 1]."""
    xi, w = np.polynomial.legendre.leggauss(order)
    return (xi + 1.0) / 2.0, w / 2.0


def _check_quad(order: int) -> None:
    if order not in QUAD_ORDERS:
        raise ValidationError(f"quad_order must be one of {QUAD_ORDERS}, got {order}")


def continuous_mean_square(
    k: int,
    X: int,
    h: int,
    quad_order: int = DEFAULT_QUAD_ORDER,
    *,
    upper: int | None = None,
    workers: int | None = 1,
    chunk: int = DEFAULT_CHUNK,
    extended: bool = False,
) -> float:
    """Integral over [X, upper] (default 2X) of (Delta_k(x+h) - Delta_k(x))^2 dx.

    Exact cell decomposition: on [m, m+1) the window sum is S(m), so the
    integrand is (S(m) - g(x))^2 with g smooth; each cell gets one
    Gauss-Legendre rule of ``quad_order`` points.
    """
    ds._check_k(k)
    if isinstance(h, float) and not h.is_integer():
        raise ValidationError("continuous_mean_square takes integer h only")
    h = int(h)
    if X < 1 or h < 0:
        raise ValidationError(f"need X >= 1 and h >= 0, got X={X}, h={h}")
    _check_quad(quad_order)
    upper = 2 * X if upper is None else upper
    if h == 0 or upper <= X:
        return 0.0
    _check_range(k, upper + h)
    poly = mainterm_poly(k)
    nodes, weights = gauss_legendre_unit(quad_order)

    def piece(ab):
        a, b = ab
        s = window_sums(k, a, b, h).astype(np.float64)
        x = np.arange(a, b + 1, dtype=np.float64)[:, None] + nodes[None, :]
        g = main_diff_array(poly, x, h, extended).astype(np.float64)
        r = s[:, None] - g
        return (r * r) @ weights

    # cells m = X .. upper-1
    return math.fsum(_stream(piece, _chunks(X, upper - 1, chunk), resolve_workers(workers)))


@dataclass(frozen=True)
class MeanSquareResult:
    k: int
    X: int
    h: int
    discrete: float
    continuous: float
    discrepancy: float
    bound: float
    quad_order: int
    in_range: bool = True

    CSV_HEADER = "k,X,h,discrete,continuous,discrepancy,bound,quad_order"

    @property
    def ratio(self) -> float:
        """|discrepancy| / bound."""
        return abs(self.discrepancy) / self.bound

    def csv_row(self) -> str:
        return (f"{self.k},{self.X},{self.h},{self.discrete!r},{self.continuous!r},"
                f"{self.discrepancy!r},{self.bound!r},{self.quad_order}")


def theorem2_bound(k: int, X: int, h: int) -> float:
    """h^(5/2) log^(5/2) X for k = 2; X^0.01 h^3 for k >= 3."""
    if k == 2:
        return h**2.5 * math.log(X) ** 2.5
    return X**REPORT_EPS * h**3


def theorem2_report(
    k: int,
    X: int,
    h: int,
    quad_order: int = DEFAULT_QUAD_ORDER,
    *,
    workers: int | None = 1,
    extended: bool = False,
) -> MeanSquareResult:
    """Both mean squares over [X, 2X], their difference and the discrepancy envelope.

    h outside 2 <= h <= sqrt(X)/2 is computed anyway and flagged via ``in_range``.
    """
    in_range = 2 <= h <= math.isqrt(X) // 2
    disc = discrete_mean_square(k, X, h, workers=workers, extended=extended)
    cont = continuous_mean_square(k, X, h, quad_order, workers=workers, extended=extended)
    return MeanSquareResult(k, X, h, disc, cont, disc - cont,
                            theorem2_bound(k, X, h), quad_order, in_range)


@dataclass(frozen=True)
class GlobalMeanSquare:
    """Integral of Delta_k^2 over [1, X] and over [1, X_half], with the implied exponent."""

    k: int
    X: int
    value: float
    X_half: int
    half_value: float

    @property
    def beta_hat(self) -> float:
        """Local slope of log I against log X, mapped through I ~ X^(1+2b)."""
        if self.half_value <= 0 or self.value <= 0:
            return float("nan")
        return math.log(self.value / self.half_value) / (2 * math.log(self.X / self.X_half)) - 0.5


def _global_cells(k, lo, hi, base, quad_order, chunk, workers, extended):
    # integrals of Delta_k^2 over cells [m, m+1), m = lo..hi; base = A(lo-1)
    poly = mainterm_poly(k)
    nodes, weights = gauss_legendre_unit(quad_order)
    pieces = _chunks(lo, hi, chunk)
    sieved = ordered_map(lambda ab: ds.sieve_dk_block(k, ab[0], ab[1]).values, pieces, workers)
    vals = []
    for (a, b), d in zip(pieces, sieved):
        cnt = base + np.cumsum(d, dtype=np.int64)
        base = int(cnt[-1])
        m = np.arange(a, b + 1, dtype=np.float64)
        dm = (cnt - main_array(poly, m, extended)).astype(np.float64)
        g = main_diff_array(poly, np.broadcast_to(m[:, None], (len(m), len(nodes))),
                            np.broadcast_to(nodes[None, :], (len(m), len(nodes))),
                            extended).astype(np.float64)
        r = dm[:, None] - g
        vals.append((r * r) @ weights)
    return (math.fsum(itertools.chain.from_iterable(v.tolist() for v in vals)), base)


def global_mean_square(
    k: int,
    X: int,
    quad_order: int = DEFAULT_QUAD_ORDER,
    *,
    workers: int | None = 1,
    chunk: int = DEFAULT_CHUNK,
    extended: bool = False,
) -> GlobalMeanSquare:
    """Integral of Delta_k(x)^2 over [1, X] by the same cell scheme, plus the X/2 value."""
    ds._check_k(k)
    _check_quad(quad_order)
    if X < 1:
        raise ValidationError(f"X must be >= 1, got {X}")
    _check_range(k, X)
    half = max(X // 2, 1)
    w = resolve_workers(workers)
    first, base = (0.0, 0) if half <= 1 else _global_cells(
        k, 1, half - 1, 0, quad_order, chunk, w, extended)
    second, _ = (0.0, base) if X <= half else _global_cells(
        k, half, X - 1, base, quad_order, chunk, w, extended)
    return GlobalMeanSquare(k, X, math.fsum([first, second]), half, first)
