"""Exact generalized divisor counts d_k(n) by segmented sieving.

d_k(n) counts ordered k-tuples of positive integers whose product is n. It is
multiplicative with d_k(p^a) = C(a+k-1, k-1), so a block [lo, hi] is filled by
dividing out every prime p <= sqrt(hi) from each of its multiples and
multiplying in the binomial for the exponent found. Whatever cofactor remains
after that is a single prime > sqrt(hi) and contributes a factor k.

Summatory values are Python ints (unbounded), accumulated block by block in
ascending order and optionally memoized in a plain-text checkpoint file.
"""

from __future__ import annotations

import functools
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np
from numba import njit

from .errors import ConsistencyError, ResourceGuardError, ValidationError
from .parallel import ordered_map, resolve_workers

K_MAX = 8
DEFAULT_BLOCK_SIZE = 1 << 24
DEFAULT_CACHE_DIR = Path(".delta_lab_cache")
CHECKPOINT_FILE = "dk_checkpoints.csv"

# d_8(n) < 2**64 and the block sums stay far below 2**63 up to these limits.
DEFAULT_MAX_X = {2: 2 * 10**9}
DEFAULT_MAX_X_HIGHER = 2 * 10**8


def max_x_for(k: int) -> int:
    return DEFAULT_MAX_X.get(k, DEFAULT_MAX_X_HIGHER)


def _check_k(k: int) -> None:
    if not isinstance(k, (int, np.integer)) or k < 2 or k > K_MAX:
        raise ValidationError(f"k must be an integer in [2, {K_MAX}], got {k!r}")


# ---------------------------------------------------------------------------
# brute-force oracle
# ---------------------------------------------------------------------------

def _divisors(n: int) -> list[int]:
    small, large = [], []
    for d in range(1, math.isqrt(n) + 1):
        if n % d == 0:
            small.append(d)
            if d != n // d:
                large.append(n // d)
    return small + large[::-1]


@functools.lru_cache(maxsize=None)
def _count_tuples(k: int, n: int) -> int:
    if k == 1:
        return 1
    return sum(_count_tuples(k - 1, n // d) for d in _divisors(n))


def brute_force_dk(k: int, n: int) -> int:
    """Number of ordered k-tuples with product n, by recursion over divisors.

    Independent of the sieve: it never uses multiplicativity or the
    prime-power formula.
    """
    _check_k(k)
    if n < 1:
        raise ValidationError(f"n must be positive, got {n}")
    if n > 10**6:
        raise ResourceGuardError("brute_force_dk is an oracle for n <= 10**6")
    return _count_tuples(int(k), int(n))


# ---------------------------------------------------------------------------
# sieve
# ---------------------------------------------------------------------------

@functools.lru_cache(maxsize=8)
def primes_upto(n: int) -> np.ndarray:
    """Primes <= n (Eratosthenes), as int64."""
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    is_p = np.ones(n + 1, dtype=bool)
    is_p[:2] = False
    for i in range(2, math.isqrt(n) + 1):
        if is_p[i]:
            is_p[i * i :: i] = False
    out = np.flatnonzero(is_p).astype(np.int64)
    out.setflags(write=False)
    return out


@functools.lru_cache(maxsize=None)
def prime_power_table(k: int) -> np.ndarray:
    """table[a] = d_k(p^a) = C(a+k-1, k-1) for a < 64."""
    return np.array([math.comb(a + k - 1, k - 1) for a in range(64)], dtype=np.uint64)


@njit(cache=True, nogil=True)
def _sieve_kernel(k, lo, hi, primes, table):
    size = hi - lo + 1
    vals = np.ones(size, dtype=np.uint64)
    rem = np.empty(size, dtype=np.int64)
    for i in range(size):
        rem[i] = lo + i
    for j in range(primes.shape[0]):
        p = primes[j]
        if p * p > hi:
            break
        start = ((lo + p - 1) // p) * p
        for n in range(start, hi + 1, p):
            i = n - lo
            r = rem[i] // p
            a = 1
            while r % p == 0:
                r //= p
                a += 1
            rem[i] = r
            vals[i] *= table[a]
    kk = np.uint64(k)
    for i in range(size):
        if rem[i] > 1:
            vals[i] *= kk
    return vals


@dataclass(frozen=True)
class DkBlock:
    """d_k(n) for lo <= n <= hi; ``values[i]`` is d_k(lo + i)."""

    k: int
    lo: int
    hi: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.hi < self.lo - 1:
            raise ValidationError(f"empty-or-inverted block [{self.lo}, {self.hi}]")
        if len(self.values) != self.hi - self.lo + 1:
            raise ValidationError("values length does not match [lo, hi]")

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, n: int) -> int:
        if not self.lo <= n <= self.hi:
            raise IndexError(n)
        return int(self.values[n - self.lo])

    def total(self) -> int:
        return int(self.values.sum(dtype=np.uint64))


def sieve_dk_block(k: int, lo: int, hi: int, block_size: int = DEFAULT_BLOCK_SIZE) -> DkBlock:
    """Exact d_k(n) for every n in [lo, hi].

    ``hi == lo - 1`` gives an empty block. Requests wider than ``block_size``
    are refused rather than allocated.
    """
    _check_k(k)
    if lo < 1:
        raise ValidationError(f"lo must be positive, got {lo}")
    if hi < lo - 1:
        raise ValidationError(f"hi={hi} < lo={lo}")
    if hi - lo + 1 > block_size:
        raise ResourceGuardError(
            f"block of {hi - lo + 1} entries exceeds block_size={block_size}"
        )
    if hi > 10**12:
        raise ResourceGuardError("sieve is validated for n <= 10**12")
    primes = primes_upto(math.isqrt(max(hi, 1)))
    vals = _sieve_kernel(int(k), int(lo), int(hi), primes, prime_power_table(int(k)))
    return DkBlock(int(k), int(lo), int(hi), vals)


def iter_blocks(lo: int, hi: int, block_size: int) -> Iterator[tuple[int, int]]:
    """Consecutive [a, b] pieces covering [lo, hi]; boundaries depend only on the arguments."""
    a = lo
    while a <= hi:
        b = min(hi, a + block_size - 1)
        yield a, b
        a = b + 1


def dk_range(
    k: int,
    lo: int,
    hi: int,
    workers: int | None = 1,
    block_size: int = DEFAULT_BLOCK_SIZE,
) -> np.ndarray:
    """d_k(n) for n in [lo, hi] as one uint64 array, sieved block-parallel."""
    _check_k(k)
    if hi < lo:
        return np.zeros(0, dtype=np.uint64)
    w = resolve_workers(workers)
    pieces = list(
        ordered_map(lambda ab: sieve_dk_block(k, ab[0], ab[1], block_size).values,
                    iter_blocks(lo, hi, block_size), w)
    )
    return pieces[0] if len(pieces) == 1 else np.concatenate(pieces)


# ---------------------------------------------------------------------------
# summatory function with checkpoint cache
# ---------------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class SummatoryCheckpoint:
    k: int
    x: int
    sum: int

    def __post_init__(self):
        if self.x >= 1 and self.sum < self.x:
            raise ValidationError(f"checkpoint sum {self.sum} < x={self.x}")


class CheckpointCache:
    """``k,x,sum`` records in ``<cache_dir>/dk_checkpoints.csv``, sorted by (k, x)."""

    def __init__(self, cache_dir: str | os.PathLike = DEFAULT_CACHE_DIR):
        self.path = Path(cache_dir) / CHECKPOINT_FILE
        self._records: dict[tuple[int, int], int] = {}
        if self.path.exists():
            self._load()

    def _load(self) -> None:
        for line in self.path.read_text().splitlines():
            line = line.strip()
            if not line:
                continue
            k, x, s = (int(v) for v in line.split(","))
            self._records[(k, x)] = s

    def __len__(self) -> int:
        return len(self._records)

    def get(self, k: int, x: int) -> int | None:
        return self._records.get((k, x))

    def floor(self, k: int, x: int) -> SummatoryCheckpoint | None:
        """Largest stored checkpoint for ``k`` at or below ``x``."""
        best = None
        for (kk, xx), s in self._records.items():
            if kk == k and xx <= x and (best is None or xx > best.x):
                best = SummatoryCheckpoint(kk, xx, s)
        return best

    def add(self, cp: SummatoryCheckpoint) -> None:
        old = self._records.get((cp.k, cp.x))
        if old is not None and old != cp.sum:
            raise ConsistencyError(f"checkpoint ({cp.k},{cp.x}) was {old}, now {cp.sum}")
        self._records[(cp.k, cp.x)] = cp.sum

    def records(self) -> list[SummatoryCheckpoint]:
        return sorted(SummatoryCheckpoint(k, x, s) for (k, x), s in self._records.items())

    def save(self) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        text = "".join(f"{r.k},{r.x},{r.sum}\n" for r in self.records())
        fd, tmp = tempfile.mkstemp(dir=self.path.parent, prefix=".ckpt")
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, self.path)


def summatory_dk(
    k: int,
    x: float,
    *,
    cache: CheckpointCache | None = None,
    workers: int | None = 1,
    block_size: int = DEFAULT_BLOCK_SIZE,
    max_x: int | None = None,
) -> int:
    """Exact sum of d_k(n) over n <= floor(x).

    With a ``cache``, starts from the nearest stored checkpoint below ``x`` and
    records one checkpoint per aligned block boundary crossed plus one at x.
    """
    _check_k(k)
    n = math.floor(x)
    limit = max_x_for(k) if max_x is None else max_x
    if n > limit:
        raise ResourceGuardError(f"x={n} exceeds the configured maximum {limit} for k={k}")
    if n < 1:
        return 0
    start, total = 0, 0
    if cache is not None:
        cp = cache.floor(k, n)
        if cp is not None:
            start, total = cp.x, cp.sum
            if start == n:
                return total
    # aligned to multiples of block_size so checkpoints are reusable across x
    bounds = []
    a = start + 1
    while a <= n:
        b = min(n, (a - 1) // block_size * block_size + block_size)
        bounds.append((a, b))
        a = b + 1
    w = resolve_workers(workers)
    sums = ordered_map(lambda ab: sieve_dk_block(k, ab[0], ab[1], block_size).total(), bounds, w)
    for (a, b), s in zip(bounds, sums):
        total += s
        if cache is not None and (b % block_size == 0 or b == n):
            cache.add(SummatoryCheckpoint(int(k), b, total))
    if cache is not None:
        cache.save()
    return total


def interval_sum_dk(
    k: int,
    x: float,
    h: int,
    *,
    block_size: int = DEFAULT_BLOCK_SIZE,
    max_x: int | None = None,
    workers: int | None = 1,
) -> int:
    """Sum of d_k(n) over floor(x) < n <= floor(x + h), sieved directly."""
    _check_k(k)
    if h < 0:
        raise ValidationError(f"h must be >= 0, got {h}")
    lo = math.floor(x) + 1
    hi = math.floor(x + h)
    limit = max_x_for(k) if max_x is None else max_x
    if hi > limit:
        raise ResourceGuardError(f"x+h={hi} exceeds the configured maximum {limit} for k={k}")
    if hi < lo:
        return 0
    w = resolve_workers(workers)
    sums = ordered_map(lambda ab: sieve_dk_block(k, ab[0], ab[1], block_size).total(),
                       iter_blocks(lo, hi, block_size), w)
    return sum(sums)
