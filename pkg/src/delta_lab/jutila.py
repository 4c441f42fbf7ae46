"""Second route to I_2(X, h) via the divisor series, plus the fitting tools.

The series is

    (1/4 pi^2) sum_{n <= X/2h} d(n)^2 / n^(3/2) * int_X^{2X} sqrt(x) * 2(1 - cos(2 pi h sqrt(n/x))) dx

where |e^{i theta} - 1|^2 = 2 - 2 cos theta has been used. The inner integral
is done by composite Gauss-Legendre on a uniform x-grid fine enough that the
phase moves less than pi/4 per panel for the largest n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import delta as dl
from . import divisor_sieve as ds
from .errors import ValidationError
from .parallel import ordered_map, resolve_workers

C3 = 8.0 / math.pi**2
PHASE_STEP = math.pi / 4
N_CHUNK = 1 << 14


@dataclass(frozen=True)
class JutilaSeries:
    X: int
    h: int
    value: float
    n_max: int
    panels: int
    empty: bool = False

    def __float__(self) -> float:
        return self.value


def _inner_integrals(n: np.ndarray, h: float, x: np.ndarray, w: np.ndarray) -> np.ndarray:
    phase = 2.0 * np.pi * h * np.sqrt(n[:, None] / x[None, :])
    f = np.sqrt(x)[None, :] * (2.0 - 2.0 * np.cos(phase))
    return f @ w


def jutila_series(
    X: int,
    h: int,
    quad_nodes: int = 64,
    *,
    n_max: int | None = None,
    workers: int | None = 1,
) -> JutilaSeries:
    """Main term of the divisor-series expression for I_2(X, h).

    ``quad_nodes // 8`` is the Gauss-Legendre order used inside each panel.
    ``n_max`` overrides the truncation floor(X / 2h).
    """
    if quad_nodes < 64:
        raise ValidationError(f"quad_nodes must be >= 64, got {quad_nodes}")
    if h < 0 or X < 1:
        raise ValidationError(f"need X >= 1, h >= 0; got X={X}, h={h}")
    if h > math.sqrt(X):
        raise ValidationError(f"h={h} exceeds sqrt(X)")
    N = X // (2 * h) if (n_max is None and h > 0) else (n_max or 0)
    if h == 0 or N < 1:
        return JutilaSeries(X, h, 0.0, 0, 0, empty=True)
    # max |d phase/dx| is at x = X, n = N
    rate = math.pi * h * math.sqrt(N) * X**-1.5
    panels = max(8, math.ceil(rate * X / PHASE_STEP))
    order = quad_nodes // 8
    xi, wi = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(float(X), 2.0 * X, panels + 1)
    half = np.diff(edges) / 2.0
    mid = (edges[:-1] + edges[1:]) / 2.0
    x = (mid[:, None] + half[:, None] * xi[None, :]).ravel()
    w = (half[:, None] * wi[None, :]).ravel()

    d = ds.dk_range(2, 1, N).astype(np.float64)

    def piece(ab):
        a, b = ab
        n = np.arange(a, b + 1, dtype=np.float64)
        return d[a - 1 : b] ** 2 / n**1.5 * _inner_integrals(n, h, x, w)

    terms = ordered_map(piece, ds.iter_blocks(1, N, N_CHUNK), resolve_workers(workers))
    total = math.fsum(v for arr in terms for v in arr.tolist())
    return JutilaSeries(X, h, total / (4.0 * math.pi**2), N, panels)


def expected_cubic_main(X: float, h: float) -> float:
    """(8/pi^2) X h log^3(sqrt(X)/h)."""
    if h > math.sqrt(X):
        raise ValidationError(f"h={h} > sqrt(X)={math.sqrt(X)}")
    if h <= 0:
        return 0.0
    return C3 * X * h * math.log(math.sqrt(X) / h) ** 3


@dataclass(frozen=True)
class JutilaComparison:
    X: int
    h: int
    series_value: float
    direct_value: float

    CSV_HEADER = "X,h,series_value,direct_value,rel_gap"

    @property
    def rel_gap(self) -> float:
        return self.series_value / self.direct_value - 1.0

    def csv_row(self) -> str:
        return f"{self.X},{self.h},{self.series_value!r},{self.direct_value!r},{self.rel_gap!r}"


def jutila_compare(X: int, h: int, quad_nodes: int = 64, quad_order: int = dl.DEFAULT_QUAD_ORDER,
                   workers: int | None = 1) -> JutilaComparison:
    series = jutila_series(X, h, quad_nodes, workers=workers)
    direct = dl.continuous_mean_square(2, X, h, quad_order, workers=workers)
    return JutilaComparison(X, h, series.value, direct)


# ---------------------------------------------------------------------------
# cubic-in-log fit
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CubicFit:
    """value / (X h) ~ sum_j c[j] L^j with L = log(sqrt(X)/h)."""

    c: tuple
    stderr: tuple
    residual: float
    sample_count: int

    CSV_HEADER = "j,c_j,stderr"

    def predict(self, X, h) -> np.ndarray:
        L = np.log(np.sqrt(np.asarray(X, dtype=float)) / np.asarray(h, dtype=float))
        return np.asarray(X, dtype=float) * np.asarray(h, dtype=float) * np.polyval(self.c[::-1], L)

    def csv_rows(self) -> list[str]:
        return [f"{j},{c!r},{e!r}" for j, (c, e) in enumerate(zip(self.c, self.stderr))]


def fit_log_cubic(samples: Iterable[tuple[float, float, float]]) -> CubicFit:
    """Least squares of value/(X h) on {1, L, L^2, L^3}.

    Solved through column-scaled normal equations. Needs at least 8 samples
    with L spanning at least log 8.
    """
    rows = [(float(X), float(h), float(v)) for X, h, v in samples]
    if len(rows) < 8:
        raise ValidationError(f"need at least 8 samples, got {len(rows)}")
    X, h, v = (np.array(c) for c in zip(*rows))
    L = np.log(np.sqrt(X) / h)
    if len(np.unique(L)) < 4:
        raise ValidationError("rank-deficient design: fewer than 4 distinct log(sqrt(X)/h)")
    if L.max() - L.min() < math.log(8):
        raise ValidationError("log(sqrt(X)/h) must span at least a factor 8 in sqrt(X)/h")
    y = v / (X * h)
    A = np.vander(L, 4, increasing=True)
    scale = np.linalg.norm(A, axis=0)
    As = A / scale
    G = As.T @ As
    z = np.linalg.solve(G, As.T @ y)
    c = z / scale
    res = A @ c - y
    dof = max(len(y) - 4, 1)
    s2 = float(res @ res) / dof
    cov = s2 * np.linalg.inv(G) / np.outer(scale, scale)
    stderr = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    rel = res / np.where(y != 0, y, 1.0)
    return CubicFit(tuple(c.tolist()), tuple(stderr.tolist()),
                    float(np.sqrt(np.mean(rel**2))), len(y))


# ---------------------------------------------------------------------------
# scaling exponents
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExponentFit:
    """log I = const + a log X + b log h, or only a combined slope if h is tied to X."""

    a: float
    b: float
    a_err: float
    b_err: float
    combined: float
    combined_err: float
    n: int
    points: tuple = field(default=(), repr=False)


def _ols(A: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    res = y - A @ coef
    dof = len(y) - A.shape[1]
    if dof <= 0:
        return coef, np.zeros_like(coef)
    cov = float(res @ res) / dof * np.linalg.pinv(A.T @ A)
    return coef, np.sqrt(np.clip(np.diag(cov), 0.0, None))


def fit_exponents(points: Sequence[tuple[float, float, float]]) -> ExponentFit:
    """Log-log regression of value against X and h from (X, h, value) triples."""
    X, h, v = (np.array(c, dtype=float) for c in zip(*points))
    lx, lh, ly = np.log(X), np.log(h), np.log(v)
    one = np.ones_like(lx)
    full = np.column_stack([one, lx, lh])
    if np.linalg.matrix_rank(full) == 3:
        coef, err = _ols(full, ly)
        a, b, ae, be = coef[1], coef[2], err[1], err[2]
    else:
        a = b = ae = be = float("nan")
    # slope along the sampled path, measured against log X
    cc, ce = _ols(np.column_stack([one, lx]), ly)
    return ExponentFit(float(a), float(b), float(ae), float(be), float(cc[1]), float(ce[1]),
                       len(ly), tuple(points))


def exponent_probe(
    k: int,
    X_grid: Sequence[int],
    h_rule: Callable[[int], int | Sequence[int]],
    *,
    quad_order: int = dl.DEFAULT_QUAD_ORDER,
    remove_logs: bool = False,
    workers: int | None = 1,
) -> ExponentFit:
    """Fit I_k(X, h) ~ X^a h^b over a grid.

    ``h_rule(X)`` returns one h or several. With one h per X tied to X by a
    power law, only the combined slope is identifiable and a, b are NaN.
    ``remove_logs`` divides each value by log^3(sqrt(X)/h) first.
    """
    grid = sorted(X_grid)
    if len(grid) < 4:
        raise ValidationError("exponent_probe needs at least 4 X values")
    if any(b < 2 * a for a, b in zip(grid, grid[1:])):
        raise ValidationError("X values must be at least a factor 2 apart")
    pts = []
    for X in grid:
        hs = h_rule(X)
        for h in ([hs] if np.isscalar(hs) else hs):
            h = int(h)
            val = dl.continuous_mean_square(k, X, h, quad_order, workers=workers)
            if remove_logs:
                val /= math.log(math.sqrt(X) / h) ** 3
            pts.append((X, h, val))
    return fit_exponents(pts)


# ---------------------------------------------------------------------------
# large values of the short difference
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OmegaReport:
    k: int
    X: int
    h: int
    max_ratio: float
    argmax_x: int
    samples: int
    max_sqrt_ratio: float
    argmax_sqrt_x: int

    CSV_HEADER = "k,X,h,samples,max_ratio,argmax_x,max_sqrt_ratio,argmax_sqrt_x"

    def csv_row(self) -> str:
        return (f"{self.k},{self.X},{self.h},{self.samples},{self.max_ratio!r},{self.argmax_x},"
                f"{self.max_sqrt_ratio!r},{self.argmax_sqrt_x}")


def omega_scan(
    k: int,
    X: int,
    h: int,
    samples: int,
    *,
    workers: int | None = 1,
    chunk: int = dl.DEFAULT_CHUNK,
) -> OmegaReport:
    """Largest |Delta_k(x+h) - Delta_k(x)| relative to sqrt(h) log^(3/2)(sqrt(x)/h) and to sqrt(h).

    x runs over ``samples`` equally spaced integers in [X, 2X]. Points with
    sqrt(x) <= h have no defined log factor and only enter the sqrt(h) statistic.
    """
    if samples < 1 or samples > 2 * 10**6:
        raise ValidationError("samples must be in [1, 2e6]")
    if h < 1:
        raise ValidationError("h must be >= 1")
    if samples == 1:
        xs = np.array([X], dtype=np.int64)
    else:
        xs = X + (np.arange(samples, dtype=np.int64) * X) // (samples - 1)
    xs = np.unique(xs)

    def piece(ab):
        a, b = ab
        sel = xs[(xs >= a) & (xs <= b)]
        if len(sel) == 0:
            return sel, np.zeros(0)
        lo, hi = int(sel[0]), int(sel[-1])
        v = dl.short_diff_array(k, lo, hi, h)
        return sel, np.abs(v[sel - lo])

    best = (0.0, int(xs[0]))
    best_sqrt = (0.0, int(xs[0]))
    root_h = math.sqrt(h)
    for sel, a in ordered_map(piece, ds.iter_blocks(int(xs[0]), int(xs[-1]), chunk),
                              resolve_workers(workers)):
        if len(sel) == 0:
            continue
        r = a / root_h
        i = int(np.argmax(r))
        if r[i] > best_sqrt[0]:
            best_sqrt = (float(r[i]), int(sel[i]))
        lg = np.log(np.sqrt(sel.astype(float)) / h)
        ok = lg > 0
        if ok.any():
            rr = np.where(ok, a / (root_h * np.where(ok, lg, 1.0) ** 1.5), -1.0)
            j = int(np.argmax(rr))
            if rr[j] > best[0]:
                best = (float(rr[j]), int(sel[j]))
    return OmegaReport(k, X, h, best[0], best[1], len(xs), best_sqrt[0], best_sqrt[1])
