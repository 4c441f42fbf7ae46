"""Euler-Maclaurin zeta(s) in the strip and the integrals built on it.

    zeta(s) = sum_{n<N} n^-s + N^(1-s)/(s-1) + N^-s/2
              + sum_{j=1}^{6} B_2j/(2j)! s(s+1)...(s+2j-2) N^(-s-2j+1) + R

with |R| bounded by the first omitted term times |s+13|/(sigma+13).

Integrals over t use a uniform grid of panel starts t0 + j*dt with fixed
node offsets inside each panel, so n^-it is advanced by one complex rotation
per grid step instead of a fresh exp per point. Each kernel call restarts
from an exact exponential, which caps the accumulated rotation error.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import mpmath
import numpy as np
from numba import njit

from .divisor_sieve import summatory_dk
from .errors import ResourceGuardError, ValidationError
from .parallel import ordered_map, resolve_workers

EM_TERMS = 6  # Bernoulli corrections through B_12
T_MAX = 1e5
GAMMA = 0.57721566490153286061
# literature abscissae sigma(k) with int_0^T |zeta(sigma(k)+it)|^2k dt << T^(1+eps)
SIGMA_K = {2: 0.5, 3: 7 / 12, 4: 5 / 8, 5: 41 / 60}
MOMENT_SPACING = 0.25
MOMENT_T_MAX = 5e4
E_T_MAX = 5e4
GRID_STEPS = 2048
# N = 1.2|t| keeps the B_14 remainder below 1e-10 up to |t| = 1e5
N_FACTOR = 1.2


@functools.lru_cache(maxsize=None)
def _bernoulli_factors() -> np.ndarray:
    # B_2j / (2j)! for j = 1..EM_TERMS+1 (last one feeds the error bound)
    return np.array([float(mpmath.bernoulli(2 * j) / mpmath.factorial(2 * j))
                     for j in range(1, EM_TERMS + 2)])


def default_terms(t: float, n_factor: float = N_FACTOR) -> int:
    return max(20, int(math.ceil(n_factor * abs(t))) + 1)


# 2 pi as an unevaluated sum hi + lo
_TWO_PI_HI = 6.283185307179586
_TWO_PI_LO = 2.4492935982947064e-16
_EPS = 2.0**-53


@functools.lru_cache(maxsize=None)
def _phase_tables(n_max: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Smallest prime factor up to n_max and log p as hi + lo for every prime p."""
    spf = np.zeros(n_max + 1, dtype=np.int64)
    for p in range(2, math.isqrt(n_max) + 1):
        if spf[p] == 0:
            blk = spf[p * p :: p]
            blk[blk == 0] = p
    idx = np.arange(n_max + 1)
    primes = np.nonzero((spf == 0) & (idx >= 2))[0]
    spf[primes] = primes
    lo = np.zeros(n_max + 1)
    hi = np.zeros(n_max + 1)
    with mpmath.workdps(40):
        for p in primes.tolist():
            v = mpmath.log(p)
            h = float(v)
            hi[p] = h
            lo[p] = float(v - h)
    return spf, hi, lo


def _tables_for(n: int):
    # round the size up so a handful of table builds cover every call
    size = 1 << max(12, int(n).bit_length())
    return _phase_tables(size)


@njit(cache=True, nogil=True)
def _two_prod(a, b):
    # Dekker: a*b = p + e exactly
    p = a * b
    c = 134217729.0 * a
    ah = c - (c - a)
    al = a - ah
    c = 134217729.0 * b
    bh = c - (c - b)
    bl = b - bh
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, e


@njit(cache=True, nogil=True)
def _reduced_phase(t, l_hi, l_lo):
    # t * (l_hi + l_lo) mod 2 pi, accurate to a few ulps of the result
    p, e = _two_prod(t, l_hi)
    e += t * l_lo
    k = np.round(p / _TWO_PI_HI)
    q, qe = _two_prod(k, _TWO_PI_HI)
    return ((p - q) - qe) + (e - k * _TWO_PI_LO)


@njit(cache=True, nogil=True)
def _partial_sums_points(sigma, ts, Ns, spf, l_hi, l_lo):
    # n^-it built multiplicatively from accurately reduced prime phases, so
    # the error does not grow like |t| log n * eps as exp(-i t log n) would
    out = np.zeros(ts.shape[0], dtype=np.complex128)
    mags = np.zeros(ts.shape[0])
    rot = np.empty(spf.shape[0], dtype=np.complex128)
    for i in range(ts.shape[0]):
        t = ts[i]
        acc = 0.0 + 0.0j
        mag = 0.0
        rot[1] = 1.0
        for n in range(1, Ns[i]):
            p = spf[n]
            if n > 1:
                if p == n:
                    rot[n] = np.exp(-1j * _reduced_phase(t, l_hi[n], l_lo[n]))
                else:
                    rot[n] = rot[p] * rot[n // p]
            w = np.exp(-sigma * np.log(n))
            acc += w * rot[n]
            mag += w
        out[i] = acc
        mags[i] = mag
    return out, mags


@njit(cache=True, nogil=True)
def _partial_sums_grid(sigma, t0, dt, count, offsets, N):
    nq = offsets.shape[0]
    acc = np.zeros((count, nq), dtype=np.complex128)
    offs = np.empty(nq, dtype=np.complex128)
    for n in range(1, N):
        ln = np.log(n)
        base = np.exp(-sigma * ln) * np.exp(-1j * t0 * ln)
        rot = np.exp(-1j * dt * ln)
        for q in range(nq):
            offs[q] = np.exp(-1j * offsets[q] * ln)
        for j in range(count):
            for q in range(nq):
                acc[j, q] += base * offs[q]
            base *= rot
    return acc


def _tail(s: np.ndarray, N: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """EM tail and error bound at points ``s`` with cut-offs ``N``."""
    bf = _bernoulli_factors()
    Nf = N.astype(np.float64)
    logN = np.log(Nf)
    Ns = np.exp(-s * logN)  # N^-s
    tail = Nf * Ns / (s - 1.0) + Ns / 2.0
    rising = s.copy()  # s(s+1)...(s+2j-2)
    pw = Ns / Nf  # N^(-s-1)
    for j in range(EM_TERMS):
        tail = tail + bf[j] * rising * pw
        rising = rising * (s + 2 * j + 1) * (s + 2 * j + 2)
        pw = pw / (Nf * Nf)
    sig = s.real
    err = np.abs(bf[EM_TERMS] * rising * pw) * np.abs(s + 2 * EM_TERMS + 1) / (sig + 2 * EM_TERMS + 1)
    return tail, err


@dataclass(frozen=True)
class ZetaPoint:
    sigma: float
    t: float
    value: complex
    terms_used: int
    err_bound: float

    CSV_HEADER = "sigma,t,re,im,err"

    def csv_row(self) -> str:
        return f"{self.sigma!r},{self.t!r},{self.value.real!r},{self.value.imag!r},{self.err_bound!r}"


def _check_sigma_t(sigma: float, t_abs_max: float, sigma_max: float = 2.0) -> None:
    if not 0.0 < sigma <= sigma_max:
        raise ValidationError(f"sigma must lie in (0, {sigma_max:g}], got {sigma}")
    if t_abs_max > T_MAX:
        raise ValidationError(f"|t| must be <= {T_MAX:g}, got {t_abs_max}")


def zeta_em_array(sigma: float, t, n_factor: float = N_FACTOR) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """zeta(sigma + i t) for each t; returns (values, terms_used, err_bounds)."""
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    _check_sigma_t(sigma, float(np.abs(t).max()) if t.size else 0.0)
    if sigma == 1.0 and np.any(t == 0.0):
        raise ValidationError("zeta has a pole at s = 1")
    N = np.array([default_terms(v, n_factor) for v in t], dtype=np.int64)
    spf, l_hi, l_lo = _tables_for(int(N.max()))
    head, mags = _partial_sums_points(float(sigma), t, N, spf, l_hi, l_lo)
    tail, err = _tail(sigma + 1j * t, N)
    # rounding allowance: each n^-it carries at most ~log2(n) products
    err = err + 4.0 * _EPS * np.log2(N) * mags
    return head + tail, N, err


def zeta_em(sigma: float, t: float, n_factor: float = N_FACTOR) -> ZetaPoint:
    """zeta(sigma + i t) by Euler-Maclaurin with N ~ max(20, |t|) terms."""
    v, N, err = zeta_em_array(sigma, [t], n_factor)
    return ZetaPoint(float(sigma), float(t), complex(v[0]), int(N[0]), float(err[0]))


def zeta_on_grid(sigma: float, t0: float, dt: float, count: int, offsets, n_factor: float = N_FACTOR,
                 workers: int | None = 1, sigma_max: float = 2.0) -> np.ndarray:
    """zeta at t0 + j*dt + offsets[q], shape (count, len(offsets)).

    Split into runs of ``GRID_STEPS`` panel starts; each run uses one cut-off
    N sized for its largest |t|.
    """
    offsets = np.asarray(offsets, dtype=np.float64)
    if count <= 0:
        return np.zeros((0, len(offsets)), dtype=np.complex128)
    t_hi = max(abs(t0), abs(t0 + (count - 1) * dt)) + float(np.abs(offsets).max())
    _check_sigma_t(sigma, t_hi, sigma_max)
    runs = [(j, min(count, j + GRID_STEPS)) for j in range(0, count, GRID_STEPS)]

    def run(r):
        a, b = r
        start = t0 + a * dt
        top = max(abs(start), abs(t0 + (b - 1) * dt)) + float(np.abs(offsets).max())
        N = default_terms(top, n_factor)
        head = _partial_sums_grid(float(sigma), start, dt, b - a, offsets, N)
        t = start + np.arange(b - a)[:, None] * dt + offsets[None, :]
        tail, _ = _tail(sigma + 1j * t, np.full(t.shape, N))
        return head + tail

    return np.concatenate(list(ordered_map(run, runs, resolve_workers(workers))))


def _gl(order: int) -> tuple[np.ndarray, np.ndarray]:
    xi, w = np.polynomial.legendre.leggauss(order)
    return (xi + 1) / 2, w / 2


# ---------------------------------------------------------------------------
# moments
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MomentResult:
    k: int
    sigma: float
    T: float
    integral: float
    exponent_estimate: float
    sigma_k_reference: float | None
    integral_2T: float = float("nan")

    CSV_HEADER = "k,sigma,T,integral,exponent"

    def csv_row(self) -> str:
        return f"{self.k},{self.sigma!r},{self.T!r},{self.integral!r},{self.exponent_estimate!r}"


def _power_integral_cells(sigma: float, power: float, T: float, spacing: float, workers) -> np.ndarray:
    # integrals of |zeta|^power over consecutive panels of width 8*spacing on [0, T]
    order = 8
    width = order * spacing
    panels = max(1, math.ceil(T / width))
    width = T / panels
    nodes, w = _gl(order)
    z = zeta_on_grid(sigma, 0.0, width, panels, nodes * width, workers=workers)
    return (np.abs(z) ** power @ w) * width


def moment_integral(k: int, sigma: float, T: float, spacing: float = MOMENT_SPACING,
                    workers: int | None = 1) -> MomentResult:
    """int_0^T |zeta(sigma+it)|^(2k) dt and the doubling exponent log(I(2T)/I(T))/log 2.

    Composite 8-point Gauss-Legendre with mean node spacing ``spacing``.
    """
    if k < 1 or k > 5:
        raise ValidationError(f"k must be in [1, 5], got {k}")
    if T < 0:
        raise ValidationError("T must be >= 0")
    if 2 * T > 2 * MOMENT_T_MAX:
        raise ResourceGuardError(f"T={T} beyond the desk-scale limit {MOMENT_T_MAX:g}")
    ref = SIGMA_K.get(k)
    if T == 0:
        return MomentResult(k, sigma, 0.0, 0.0, float("nan"), ref, 0.0)
    w = resolve_workers(workers)
    first = math.fsum(_power_integral_cells(sigma, 2 * k, T, spacing, w).tolist())
    # second half [T, 2T] on its own grid so the first value is reused exactly
    order = 8
    width = order * spacing
    panels = max(1, math.ceil(T / width))
    width = T / panels
    nodes, wts = _gl(order)
    z = zeta_on_grid(sigma, T, width, panels, nodes * width, workers=w)
    second = math.fsum(((np.abs(z) ** (2 * k) @ wts) * width).tolist())
    total = first + second
    return MomentResult(k, sigma, float(T), first, math.log(total / first) / math.log(2), ref, total)


# ---------------------------------------------------------------------------
# E(T)
# ---------------------------------------------------------------------------

class MeanSquareTable:
    """Cumulative int_0^t |zeta(1/2+iu)|^2 du on a uniform grid, extended on demand.

    Off-grid values add a Gauss-Legendre integral over the partial panel.
    """

    def __init__(self, step: float = 0.25, order: int = 8, workers: int | None = 1):
        self.step = step
        self.order = order
        self.workers = workers
        self._nodes, self._w = _gl(order)
        self._cum = np.zeros(1)

    @property
    def t_max(self) -> float:
        return (len(self._cum) - 1) * self.step

    def extend(self, t: float) -> None:
        need = math.ceil(t / self.step) + 1
        have = len(self._cum) - 1
        if need <= have:
            return
        if t > E_T_MAX + 1e4:
            raise ResourceGuardError(f"t={t} beyond the E(T) table limit")
        # grow geometrically so repeated calls stay cheap
        need = max(need, 2 * have, 64)
        z = zeta_on_grid(0.5, have * self.step, self.step, need - have,
                         self._nodes * self.step, workers=self.workers)
        cells = (np.abs(z) ** 2 @ self._w) * self.step
        self._cum = np.concatenate([self._cum, self._cum[-1] + np.cumsum(cells)])

    def grid(self, upto: float) -> np.ndarray:
        """Cumulative values at 0, step, 2*step, ... covering ``upto``."""
        self.extend(upto)
        return self._cum[: math.ceil(upto / self.step) + 1]

    def __call__(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=np.float64))
        if t.size == 0:
            return t
        if np.any(t < 0):
            raise ValidationError("t must be >= 0")
        self.extend(float(t.max()))
        j = np.floor(t / self.step).astype(np.int64)
        start = j * self.step
        frac = t - start
        out = self._cum[j].copy()
        part = frac > 0
        if part.any():
            tt = start[part][:, None] + frac[part][:, None] * self._nodes[None, :]
            z, _, _ = zeta_em_array(0.5, tt.ravel())
            vals = (np.abs(z.reshape(tt.shape)) ** 2) @ self._w
            out[part] += vals * frac[part]
        return out


@functools.lru_cache(maxsize=1)
def _default_table() -> MeanSquareTable:
    return MeanSquareTable()


def e_main(T) -> np.ndarray:
    """T (log(T/2pi) + 2 gamma - 1), with value 0 at T = 0."""
    T = np.asarray(T, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        v = T * (np.log(T / (2 * np.pi)) + 2 * GAMMA - 1)
    return np.where(T > 0, v, 0.0)


def e_term(T, table: MeanSquareTable | None = None):
    """E(T) = int_0^T |zeta(1/2+it)|^2 dt - T(log(T/2pi) + 2 gamma - 1)."""
    scalar = np.isscalar(T)
    T = np.atleast_1d(np.asarray(T, dtype=np.float64))
    if T.size and T.max() > E_T_MAX:
        raise ResourceGuardError(f"T beyond {E_T_MAX:g}")
    tab = table or _default_table()
    out = tab(T) - e_main(T)
    return float(out[0]) if scalar else out


def e_short_diff_ms(X: float, h: float, step: float = 0.125,
                    table: MeanSquareTable | None = None) -> float:
    """int_X^{2X} (E(x+h) - E(x))^2 dx by composite Simpson on a grid of ``step``.

    ``h`` and ``X`` are snapped to multiples of ``step`` so both E values come
    straight from the cumulative table.
    """
    if X > 1e4:
        raise ResourceGuardError("e_short_diff_ms is limited to X <= 1e4")
    if h < 0 or X <= 0:
        raise ValidationError("need X > 0 and h >= 0")
    if h == 0:
        return 0.0
    tab = table or MeanSquareTable(step=step)
    if not math.isclose(tab.step, step):
        raise ValidationError("table step must equal the Simpson step")
    i0 = round(X / step)
    ih = round(h / step)
    n = i0 if i0 % 2 == 0 else i0 + 1  # Simpson needs an even panel count
    cum = tab.grid((i0 + n + ih) * step)
    idx = np.arange(i0, i0 + n + 1)
    x = idx * step
    F0 = cum[idx]
    F1 = cum[idx + ih]
    diff = (F1 - F0) - (e_main(x + ih * step) - e_main(x))
    f = diff * diff
    wts = np.ones(n + 1)
    wts[1:-1:2] = 4.0
    wts[2:-1:2] = 2.0
    return float(step / 3.0 * math.fsum((wts * f).tolist()))


# ---------------------------------------------------------------------------
# Perron
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PerronReport:
    k: int
    x: float
    T: float
    line_sigma: float
    integral_value: float
    exact_sum: int
    abs_error: float

    CSV_HEADER = "x,T,integral,exact,abs_err"

    def csv_row(self) -> str:
        return f"{self.x!r},{self.T!r},{self.integral_value!r},{self.exact_sum},{self.abs_error!r}"


def perron_truncated(k: int, x: float, T: float, step: float = 0.05,
                     workers: int | None = 1) -> PerronReport:
    """(1/2 pi i) int_{c-iT}^{c+iT} x^s zeta(s)^k / s ds with c = 1 + 1/log x, by trapezoid.

    Conjugate symmetry reduces it to (1/pi) Re int_0^T.
    """
    if not 1 <= k <= 4:
        raise ValidationError(f"k must be in [1, 4], got {k}")
    if x > 1e4 or x <= 1:
        raise ValidationError("x must lie in (1, 1e4]")
    if abs(x - round(x)) < 0.1:
        raise ValidationError("x must be at least 0.1 away from an integer")
    if T > 1e4 or T <= 0:
        raise ValidationError("T must lie in (0, 1e4]")
    if step > 0.05:
        raise ValidationError("trapezoid step must be <= 0.05")
    c = 1.0 + 1.0 / math.log(x)
    n = math.ceil(T / step)
    dt = T / n
    # the line 1 + 1/log x leaves (0, 2] for x < e; the EM sum is valid there too
    z = zeta_on_grid(c, 0.0, dt, n + 1, [0.0], workers=workers, sigma_max=3.0)[:, 0]
    t = np.arange(n + 1) * dt
    s = c + 1j * t
    f = np.exp(s * math.log(x)) * z**k / s
    w = np.full(n + 1, dt)
    w[0] = w[-1] = dt / 2
    val = math.fsum((w * f.real).tolist()) / math.pi
    exact = summatory_dk(k, x) if k >= 2 else math.floor(x)
    return PerronReport(k, float(x), float(T), c, val, exact, abs(val - exact))
