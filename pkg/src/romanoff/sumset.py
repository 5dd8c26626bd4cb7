"""Representation functions, sumset counts and the first/second moments.

Two counting engines are used:

* shift-OR over Python-int bitsets (odd and even sums kept in separate
  bitsets indexed by n // 2), good for sparse B;
* a prefix-sum window per residue class for B given as arithmetic
  progressions (the primorial blocks), linear in x regardless of |B|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from fractions import Fraction

import numpy as np

from .bsets import BSetKind, BSetSpec, bset_array, theorem2_blocks_upto
from .errors import DomainError, InvariantError, RangeError, ResourceError
from .sieve import PrimeTable

TIE_EPS = Decimal("1e-12")
MAX_TRUNCATED_TERMS = 2_000_000
AP_WORK_BYTES = 1 << 25
BLOCKS_MIN_X = 2000  # below this the shift-OR engine is faster on the block set


def _dec(alpha) -> Decimal:
    if isinstance(alpha, Fraction):
        return Decimal(alpha.numerator) / Decimal(alpha.denominator)
    return Decimal(alpha)


def log_threshold(n: int, alpha) -> Decimal:
    """(ln n)**(1/alpha) in 40-digit decimal arithmetic."""
    if alpha <= 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    if n < 3:
        raise DomainError(f"truncation threshold needs n >= 3, got {n}")
    with localcontext() as ctx:
        ctx.prec = 40
        return (Decimal(n).ln().ln() / _dec(alpha)).exp()


def _float_top(n, alpha):
    """floor of the threshold in binary64, or None when that is not clearly safe."""
    if alpha <= 0 or n < 3:
        return None
    v = math.log(math.log(n)) / float(alpha)
    if v >= 700:
        return None
    v = math.exp(v)
    if abs(v - round(v)) <= 1e-9 * max(1.0, v):
        return None
    return math.floor(v)


def threshold_top(n: int, alpha) -> int:
    """Largest integer b admitted by the truncation at n, i.e. b < (ln n)**(1/alpha) - 1e-12."""
    top = _float_top(n, alpha)
    if top is not None:
        return top
    # near an integer (or huge): settle it in decimal arithmetic
    cut = log_threshold(n, alpha) - TIE_EPS
    return int(cut.to_integral_value(rounding="ROUND_CEILING")) - 1


def truncate(bs: np.ndarray, n: int, alpha) -> np.ndarray:
    """Members with b < (ln n)**(1/alpha); anything within 1e-12 of the threshold is dropped."""
    top = threshold_top(n, alpha)
    if not bs.size or int(bs[-1]) <= top:
        return bs
    return bs[bs <= top]


def _members(t, spec, x):
    return bset_array(t, spec, x)


def _truncated_members(t, spec, n, alpha):
    """Members b <= n - 2 below the cut for n, enumerating nothing past the cut."""
    return _members(t, spec, min(n - 2, threshold_top(n, alpha)))


# -- pointwise ---------------------------------------------------------------


def rep_count(t: PrimeTable, spec: BSetSpec, n: int) -> int:
    """Number of pairs (p, b) with p + b = n."""
    if n < 2:
        raise DomainError(f"n must be at least 2, got {n}")
    t._check(n)
    bs = _members(t, spec, n - 2)
    return int(t.is_prime_many(n - bs).sum())


def rep_count_truncated(t: PrimeTable, spec: BSetSpec, n: int, alpha) -> int:
    """Pairs (p, b) with p + b = n and b < (ln n)**(1/alpha)."""
    if n < 3:
        raise DomainError(f"n must be at least 3, got {n}")
    t._check(n)
    bs = _truncated_members(t, spec, n, alpha)
    return int(t.is_prime_many(n - bs).sum())


# -- sumset counts -------------------------------------------------------------


def _shift_or_count(t: PrimeTable, bs, x: int) -> int:
    if x < 3:
        return 0
    odd = t.odd_bits_int(x)  # bit i <-> prime 2i+1
    acc_odd = 0  # bit k <-> n = 2k+1
    acc_even = 0  # bit k <-> n = 2k
    for b in bs.tolist():
        half = (b + 1) >> 1
        if b & 1:
            acc_even |= odd << half
            acc_odd |= 1 << half  # 2 + b
        else:
            acc_odd |= odd << half
            acc_even |= 1 << (half + 1)  # 2 + b
    k_odd = (x - 1) >> 1
    k_even = x >> 1
    return (acc_odd & ((1 << (k_odd + 1)) - 1)).bit_count() + (
        acc_even & ((1 << (k_even + 1)) - 1)
    ).bit_count()


def progression_mask(ind: np.ndarray, progressions) -> np.ndarray:
    """Boolean mask over 0..x of n = q + d*k with ind[q] set and k_lo <= k <= k_hi.

    ``ind`` is a uint8 indicator over 0..x; ``progressions`` yields (d, k_lo, k_hi).
    Works per residue class mod d with a prefix sum over k, so the cost is
    O(x) per progression.
    """
    x = ind.size - 1
    rep = np.zeros(x + 1, dtype=bool)
    for d, klo, khi in progressions:
        khi = min(khi, x // d)
        if khi < klo:
            continue
        rows = x // d + 1
        grid = np.zeros(rows * d, dtype=np.uint8)
        grid[: x + 1] = ind
        grid = grid.reshape(rows, d)
        out = np.zeros(rows * d, dtype=bool)
        out[: x + 1] = rep
        out = out.reshape(rows, d)
        target = np.arange(rows)
        upper = np.clip(target - klo + 1, 0, rows)
        lower = np.clip(target - khi, 0, rows)
        step = max(1, AP_WORK_BYTES // (8 * (rows + 1)))
        for c0 in range(0, d, step):
            cols = grid[:, c0 : c0 + step]
            csum = np.zeros((rows + 1, cols.shape[1]), dtype=np.int32)
            np.cumsum(cols, axis=0, out=csum[1:])
            out[:, c0 : c0 + step] |= (csum[upper] - csum[lower]) > 0
        rep = out.reshape(-1)[: x + 1].copy()
    return rep


def _block_progressions(t, spec, x, jmin=1, jmax=None):
    for blk in theorem2_blocks_upto(t, spec.m, x):
        if blk.j < jmin or (jmax is not None and blk.j > jmax):
            continue
        klo, khi = blk.k_range(x)
        yield blk.d_j, klo, khi


def represented_mask(t: PrimeTable, spec: BSetSpec, x: int) -> np.ndarray:
    """Boolean mask over 0..x of the sums p + b."""
    t._check(x)
    ind = t.indicator(x)
    if spec.kind is BSetKind.THEOREM_TWO:
        return progression_mask(ind, _block_progressions(t, spec, x))
    return progression_mask(ind, ((int(b), 1, 1) for b in _members(t, spec, x).tolist()))


def _choose(spec, x, method):
    if method != "auto":
        return method
    if spec.kind is BSetKind.THEOREM_TWO and x >= BLOCKS_MIN_X:
        return "blocks"
    return "shift"


def sumset_count(t: PrimeTable, spec: BSetSpec, x: int, method: str = "auto") -> int:
    """#{n <= x : n = p + b}."""
    t._check(x)
    if x < 3:
        return 0
    method = _choose(spec, x, method)
    if method == "shift":
        return _shift_or_count(t, _members(t, spec, x - 2), x)
    if method == "blocks":
        if spec.kind is not BSetKind.THEOREM_TWO:
            raise DomainError("the block method applies only to the primorial-block set")
        return int(progression_mask(t.indicator(x), _block_progressions(t, spec, x)).sum())
    raise DomainError(f"unknown method {method!r}")


def truncated_sumset_count(t: PrimeTable, spec: BSetSpec, x: int, alpha) -> int:
    """#{n <= x : n = p + b, b < (ln x)**(1/alpha)}."""
    if x < 3:
        raise DomainError(f"x must be at least 3, got {x}")
    t._check(x)
    return _shift_or_count(t, _truncated_members(t, spec, x, alpha), x)


# -- moments ---------------------------------------------------------------


@dataclass(frozen=True)
class RepStats:
    x: int
    alpha: object
    M1: int
    M2: int
    S_alpha: int
    S: int
    diag: int
    offdiag: int
    diag_exact: int = 0
    offdiag_exact: int = 0
    n_terms: int = 0

    @property
    def cs_lower_bound(self) -> int:
        return self.M1 * self.M1 // self.M2 if self.M2 else 0

    def csv_row(self) -> list:
        return [
            self.x, str(self.alpha), self.M1, self.M2, self.S_alpha, self.S,
            self.diag, self.offdiag, self.cs_lower_bound,
        ]


REPSTATS_CSV_HEADER = ["x", "alpha", "M1", "M2", "S_alpha", "S", "diag", "offdiag", "cs_lower_bound"]


def _convolve_exact(a: np.ndarray, b: np.ndarray, size: int) -> np.ndarray:
    """Integer linear convolution truncated to ``size`` terms, via rounded FFT."""
    n = 1 << (a.size + b.size - 1).bit_length()
    fa = np.fft.rfft(a.astype(np.float64), n)
    fb = np.fft.rfft(b.astype(np.float64), n)
    raw = np.fft.irfft(fa * fb, n)[:size]
    out = np.rint(raw)
    if out.size and float(np.abs(raw - out).max()) > 0.25:
        raise InvariantError("FFT convolution lost integer exactness")
    return out.astype(np.int64)


def representation_counts(t: PrimeTable, bs: np.ndarray, x: int) -> np.ndarray:
    """f(n) for n in 0..x restricted to the given b's."""
    ind = t.indicator(x)
    if bs.size <= 64:
        f = np.zeros(x + 1, dtype=np.int64)
        for b in bs.tolist():
            if b <= x:
                f[b:] += ind[: x + 1 - b]
        return f
    bind = np.zeros(int(bs[-1]) + 1, dtype=np.uint8)
    bind[bs] = 1
    return _convolve_exact(ind, bind, x + 1)


def difference_multiplicities(bs: np.ndarray) -> np.ndarray:
    """mult[h] = #{(b1 < b2) : b2 - b1 = h}, indexed 0..max(bs)."""
    if bs.size == 0:
        return np.zeros(1, dtype=np.int64)
    top = int(bs[-1])
    if bs.size <= 3000:
        diffs = (bs[None, :] - bs[:, None])[np.triu_indices(bs.size, 1)]
        return np.bincount(diffs, minlength=top + 1).astype(np.int64)
    bind = np.zeros(top + 1, dtype=np.uint8)
    bind[bs] = 1
    full = _convolve_exact(bind, bind[::-1], 2 * top + 1)
    mult = full[top:].copy()
    mult[0] = 0
    return mult


class _PairCounter:
    """Memoised #{p2 < p1 <= x : p1 - p2 = h, both prime} for any h >= 1."""

    def __init__(self, t: PrimeTable, x: int):
        self.t = t
        self.x = x
        self.bits = t.odd_bits_int(x)
        self.cache: dict[int, int] = {}

    def __call__(self, h: int) -> int:
        got = self.cache.get(h)
        if got is None:
            if h & 1:
                got = int(2 + h <= self.x and self.t.is_prime(2 + h))
            else:
                got = ((self.bits >> (h >> 1)) & self.bits).bit_count()
            self.cache[h] = got
        return got


def pair_counts_all(t: PrimeTable, x: int, hmax: int) -> np.ndarray:
    """The same pair counts for every h in 0..hmax at once, via autocorrelation."""
    ind = t.indicator(x)
    full = _convolve_exact(ind, ind[::-1], 2 * x + 1)
    out = np.zeros(hmax + 1, dtype=np.int64)
    top = min(hmax, x)
    out[: top + 1] = full[x : x + top + 1]
    out[0] = 0
    return out


PAIR_LOOP_MAX = 20_000


def moments(t: PrimeTable, spec: BSetSpec, x: int, alpha,
            max_terms: int = MAX_TRUNCATED_TERMS) -> RepStats:
    """First and second moments of the truncated representation function.

    The truncation b < (ln x)**(1/alpha) is taken at x for every n <= x, and
    only b <= x - 2 can contribute.  ``diag`` and ``offdiag`` are the two
    terms of the diagonal/off-diagonal bound on M2 (diagonal relaxed to
    n_terms * pi(x), off-diagonal summed over all prime pairs up to x).
    """
    if x < 3:
        raise DomainError(f"x must be at least 3, got {x}")
    t._check(x)
    bs = _truncated_members(t, spec, x, alpha)
    if bs.size > max_terms:
        raise ResourceError(
            f"{bs.size} truncated terms exceed the limit of {max_terms}; use a larger alpha"
        )
    f = representation_counts(t, bs, x)
    M1 = int(f.sum())
    M2 = int((f * f).sum())
    S_alpha = int(np.count_nonzero(f))
    S = sumset_count(t, spec, x)
    diag_exact = int(t.prime_counts(x - bs).sum()) if bs.size else 0
    diag = int(bs.size) * t.prime_count(x)

    mult = difference_multiplicities(bs)
    hs = np.flatnonzero(mult)
    if hs.size <= PAIR_LOOP_MAX:
        pc = _PairCounter(t, x)
        offdiag = sum(int(mult[h]) * pc(int(h)) for h in hs.tolist())
    else:
        pairs = pair_counts_all(t, x, mult.size - 1)
        offdiag = int((mult * pairs).sum())

    if M1 != diag_exact:
        raise InvariantError(f"first moment {M1} != sum of pi(x-b) {diag_exact}")
    if (M2 - M1) & 1:
        raise InvariantError("M2 - M1 must be even")
    offdiag_exact = (M2 - M1) // 2
    if M1 * M1 > M2 * S_alpha:
        raise InvariantError("Cauchy-Schwarz violated")
    if not S_alpha <= S <= x:
        raise InvariantError(f"expected S_alpha <= S <= x, got {S_alpha}, {S}, {x}")
    if M2 > diag + 2 * offdiag or offdiag_exact > offdiag or diag_exact > diag:
        raise InvariantError("second moment exceeds its diagonal/off-diagonal bound")
    return RepStats(x, alpha, M1, M2, S_alpha, S, diag, offdiag, diag_exact, offdiag_exact, int(bs.size))
