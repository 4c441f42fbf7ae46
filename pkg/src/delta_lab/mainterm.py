"""Main term x*P_{k-1}(log x) of the divisor summatory function.

P_{k-1} is read off the residue at s = 1 of x^s zeta(s)^k / s. With u = s - 1,

    zeta(s)   = 1/u + sum_n (-1)^n gamma_n / n! * u^n      (Stieltjes constants)
    x^s       = x * sum_m (log x)^m / m! * u^m
    1/s       = sum_r (-1)^r u^r

so the coefficient of t^m in P_{k-1}(t) is (1/m!) * sum_{j=-k}^{-1-m} a_j (-1)^(-1-m-j),
where a_j are the Laurent coefficients of zeta^k. All algebra here is done in
mpmath at ``WORK_DPS`` digits; only the array helpers drop to machine floats.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import mpmath
import numpy as np

from .errors import ValidationError

WORK_DPS = 40

# gamma_0 .. gamma_19, 32 significant digits
_STIELTJES = (
    "0.5772156649015328606065120900824",
    "-0.072815845483676724860586375874901",
    "-0.0096903631928723184845303860352125",
    "0.0020538344203033458661600465427534",
    "0.0023253700654673000574681701775261",
    "0.00079332381730106270175333487744444",
    "-0.000238769345430199609872421841908",
    "-0.00052728956705775104607409750547886",
    "-0.00035212335380303950960205216500121",
    "-0.000034394774418088048177914623798227",
    "0.00020533281490906479468372228923707",
    "0.00027018443954390352667290208206796",
    "0.00016727291210514019335350154334118",
    "-0.000027463806603760158860007603693355",
    "-0.00020920926205929994583713969734458",
    "-0.00028346865532024144664293447499713",
    "-0.00019969685830896977470778456320324",
    "0.00002627703710991833669946659763051",
    "0.00030736840814925282659275475194863",
    "0.00050360545304735562905559643771716",
)

K_MAX = 8
ORDER_MAX = 12


def stieltjes_constants(count: int) -> list[mpmath.mpf]:
    """gamma_0, ..., gamma_{count-1} from the built-in table."""
    if count < 0 or count > len(_STIELTJES):
        raise ValidationError(f"only {len(_STIELTJES)} Stieltjes constants are tabulated")
    with mpmath.workdps(WORK_DPS):
        return [mpmath.mpf(v) for v in _STIELTJES[:count]]


def _log_over_x_derivatives(n: int, order: int) -> list[dict[int, mpmath.mpf]]:
    # d^r/dx^r [x^-1 log^n x] = x^-(r+1) * sum_i c[i] log^i x
    out = [{n: mpmath.mpf(1)}]
    for r in range(order):
        a = r + 1
        nxt: dict[int, mpmath.mpf] = {}
        for i, c in out[-1].items():
            nxt[i] = nxt.get(i, 0) - a * c
            if i:
                nxt[i - 1] = nxt.get(i - 1, 0) + i * c
        out.append(nxt)
    return out


def stieltjes_euler_maclaurin(n: int, N: int = 200, terms: int = 20, dps: int = 45) -> mpmath.mpf:
    """gamma_n by Euler-Maclaurin on sum_m log^n(m)/m, independent of the table.

    gamma_n = sum_{m<N} f(m) - log^{n+1}(N)/(n+1) + f(N)/2
              - sum_j B_2j/(2j)! f^(2j-1)(N)
    """
    with mpmath.workdps(dps):
        f = lambda m: mpmath.log(m) ** n / m
        head = mpmath.fsum(f(m) for m in range(1, N))
        LN = mpmath.log(N)
        val = head - LN ** (n + 1) / (n + 1) + f(N) / 2
        derivs = _log_over_x_derivatives(n, 2 * terms)
        for j in range(1, terms + 1):
            r = 2 * j - 1
            poly = derivs[r]
            fr = mpmath.fsum(c * LN**i for i, c in poly.items()) / mpmath.mpf(N) ** (r + 1)
            val -= mpmath.bernoulli(2 * j) / mpmath.factorial(2 * j) * fr
        return +val


@dataclass(frozen=True)
class LaurentSeries:
    """Coefficients a_{-pole_order}, ..., a_order of a series in (s-1)."""

    pole_order: int
    coeffs: tuple
    order: int

    def __post_init__(self):
        if len(self.coeffs) != self.pole_order + self.order + 1:
            raise ValidationError("coefficient count does not match pole_order/order")

    def __getitem__(self, power: int):
        idx = power + self.pole_order
        if idx < 0:
            return mpmath.mpf(0)
        if idx >= len(self.coeffs):
            raise IndexError(f"series truncated at (s-1)^{self.order}")
        return self.coeffs[idx]


def zeta_laurent_pow(k: int, order: int) -> LaurentSeries:
    """Laurent expansion of zeta(s)^k about s = 1 through (s-1)^order."""
    if k < 1 or k > K_MAX:
        raise ValidationError(f"k must be in [1, {K_MAX}]")
    if order < -k or order > ORDER_MAX:
        raise ValidationError(f"order must be in [-k, {ORDER_MAX}]")
    # (s-1) zeta(s) = 1 + sum_n (-1)^n gamma_n/n! (s-1)^(n+1); need degree order+k
    deg = order + k
    gam = stieltjes_constants(max(deg, 0))
    with mpmath.workdps(WORK_DPS):
        g = [mpmath.mpf(1)] + [
            (-1) ** n * gam[n] / mpmath.factorial(n) for n in range(deg)
        ]
        acc = [mpmath.mpf(1)] + [mpmath.mpf(0)] * deg
        for _ in range(k):
            acc = [mpmath.fsum(acc[i] * g[d - i] for i in range(d + 1)) for d in range(deg + 1)]
        return LaurentSeries(k, tuple(acc), order)


@dataclass(frozen=True)
class MainTermPoly:
    """P_{k-1} and Q_{k-1} = P + P' as ascending coefficient tuples in t = log x."""

    k: int
    p_coeffs: tuple
    q_coeffs: tuple

    def p_float(self) -> np.ndarray:
        return np.array([float(c) for c in self.p_coeffs])

    def p_longdouble(self) -> np.ndarray:
        # route through str so the extra bits survive
        return np.array([np.longdouble(mpmath.nstr(c, 25)) for c in self.p_coeffs])

    def q_float(self) -> np.ndarray:
        return np.array([float(c) for c in self.q_coeffs])


@functools.lru_cache(maxsize=None)
def mainterm_poly(k: int) -> MainTermPoly:
    """Residue polynomial P_{k-1} of x^s zeta^k(s)/s at s = 1, plus Q_{k-1}."""
    if k < 2 or k > K_MAX:
        raise ValidationError(f"k must be in [2, {K_MAX}], got {k}")
    ser = zeta_laurent_pow(k, -1)
    with mpmath.workdps(WORK_DPS):
        p = []
        for m in range(k):
            s = mpmath.fsum(ser[j] * (-1) ** (-1 - m - j) for j in range(-k, -m))
            p.append(s / mpmath.factorial(m))
        q = [p[j] + (j + 1) * (p[j + 1] if j + 1 < k else 0) for j in range(k)]
        return MainTermPoly(k, tuple(p), tuple(q))


def eval_main(k: int, x) -> mpmath.mpf:
    """x * P_{k-1}(log x) in ``WORK_DPS``-digit arithmetic."""
    if x <= 1:
        raise ValidationError(f"main term requires x > 1, got {x}")
    if x > 10**12:
        raise ValidationError("main term is validated for x <= 10**12")
    poly = mainterm_poly(k)
    with mpmath.workdps(WORK_DPS):
        xm = mpmath.mpf(x)
        return +(xm * mpmath.polyval(poly.p_coeffs[::-1], mpmath.log(xm)))


# ---------------------------------------------------------------------------
# machine-precision array forms used by the bulk kernels
# ---------------------------------------------------------------------------

def main_array(poly: MainTermPoly, x: np.ndarray, extended: bool = False) -> np.ndarray:
    """x * P(log x) elementwise; ``extended`` evaluates in long double."""
    coef = poly.p_longdouble() if extended else poly.p_float()
    x = np.asarray(x, dtype=coef.dtype)
    t = np.log(x)
    acc = np.full_like(t, coef[-1])
    for c in coef[-2::-1]:
        acc = acc * t + c
    return x * acc


def main_diff_array(poly: MainTermPoly, x: np.ndarray, h, extended: bool = False) -> np.ndarray:
    """(x+h)P(log(x+h)) - xP(log x) without subtractive cancellation.

    Uses hP(t+d) + x[P(t+d) - P(t)] with d = log1p(h/x) and
    (t+d)^j - t^j = d * sum_{i<j} (t+d)^i t^(j-1-i).
    """
    coef = poly.p_longdouble() if extended else poly.p_float()
    dt = coef.dtype
    x = np.asarray(x, dtype=dt)
    h = np.asarray(h, dtype=dt)
    t = np.log(x)
    d = np.log1p(h / x)
    u = t + d
    deg = len(coef) - 1
    # powers of t and u
    tp = [np.ones_like(t)]
    up = [np.ones_like(t)]
    for _ in range(deg):
        tp.append(tp[-1] * t)
        up.append(up[-1] * u)
    p_u = sum(c * up[j] for j, c in enumerate(coef))
    incr = np.zeros_like(t)
    for j in range(1, deg + 1):
        inner = sum(up[i] * tp[j - 1 - i] for i in range(j))
        incr = incr + coef[j] * inner
    return h * p_u + x * (d * incr)


def dump_rows(k: int, digits: int = 20) -> list[str]:
    """CSV rows ``k,j,p_coeff,q_coeff`` for the ``mainterm dump`` verb."""
    poly = mainterm_poly(k)
    return [
        f"{k},{j},{mpmath.nstr(p, digits)},{mpmath.nstr(q, digits)}"
        for j, (p, q) in enumerate(zip(poly.p_coeffs, poly.q_coeffs))
    ]
