"""Segmented odd-only sieve and the prime-side quantities built on it.

Bit ``i`` of ``PrimeTable.odd_bitmap`` (little-endian within each byte) flags
the odd number ``2*i + 1``.  The prime 2 is handled separately everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DomainError, PrimorialOverflowError, RangeError, ResourceError

DEFAULT_SEGMENT_BITS = 1 << 18
DEFAULT_MEMORY_BUDGET = 1 << 30
MIN_SEGMENT_BITS = 1 << 12
MAX_SEGMENT_BITS = 1 << 24
CHUNK_BYTES = 64  # granularity of the cumulative counts
UINT64_MAX = (1 << 64) - 1

# popcount of (byte & ((2 << r) - 1)), i.e. set bits at positions 0..r
_PREFIX_POP = np.array(
    [[bin(v & ((2 << r) - 1)).count("1") for r in range(8)] for v in range(256)],
    dtype=np.int64,
)


def _base_primes(n: int) -> np.ndarray:
    """All primes <= n by a plain sieve; used only for the sieving primes."""
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    flags = np.ones(n + 1, dtype=bool)
    flags[:2] = False
    for p in range(2, math.isqrt(n) + 1):
        if flags[p]:
            flags[p * p :: p] = False
    return np.flatnonzero(flags).astype(np.int64)


def _bitmap_nbytes(limit: int, segment_bits: int) -> int:
    n_odd = (limit + 1) // 2
    n_seg = -(-n_odd // segment_bits)
    return n_seg * segment_bits // 8


def estimate_table_bytes(limit: int, segment_bits: int = DEFAULT_SEGMENT_BITS) -> int:
    """Peak bytes needed by ``build_prime_table`` (bitmap, counts, one segment, base primes)."""
    nbytes = _bitmap_nbytes(limit, segment_bits)
    counts = (nbytes // CHUNK_BYTES + 1) * 8
    segment = segment_bits + segment_bits // 8 + 2 * 8 * (segment_bits // CHUNK_BYTES // 8 + 1)
    root = math.isqrt(limit) + 1
    base = root + 8 * root
    return nbytes + counts + segment + base


@dataclass(frozen=True, eq=False)
class PrimeTable:
    limit: int
    odd_bitmap: np.ndarray
    block_counts: np.ndarray
    segment_bits: int = DEFAULT_SEGMENT_BITS

    @property
    def nbytes(self) -> int:
        return self.odd_bitmap.nbytes + self.block_counts.nbytes

    def _check(self, x: int) -> None:
        if x > self.limit:
            raise RangeError(f"{x} exceeds the sieved limit {self.limit}")

    def is_prime(self, n: int) -> bool:
        self._check(n)
        if n < 3:
            return n == 2
        if not n & 1:
            return False
        i = n >> 1
        return bool((int(self.odd_bitmap[i >> 3]) >> (i & 7)) & 1)

    def is_prime_many(self, ns) -> np.ndarray:
        ns = np.asarray(ns, dtype=np.int64)
        if ns.size and int(ns.max()) > self.limit:
            raise RangeError(f"{int(ns.max())} exceeds the sieved limit {self.limit}")
        odd = (ns & 1).astype(bool) & (ns >= 3)
        i = np.where(odd, ns >> 1, 0)
        bits = (self.odd_bitmap[i >> 3] >> (i & 7).astype(np.uint8)) & 1
        return (odd & bits.astype(bool)) | (ns == 2)

    def prime_count(self, x: int) -> int:
        if x < 2:
            return 0
        self._check(x)
        k = (x - 1) >> 1
        byte = k >> 3
        chunk = byte // CHUNK_BYTES
        total = int(self.block_counts[chunk])
        total += int(np.bitwise_count(self.odd_bitmap[chunk * CHUNK_BYTES : byte]).sum())
        total += int(_PREFIX_POP[self.odd_bitmap[byte], k & 7])
        return total + 1

    def prime_counts(self, xs, batch: int = 1 << 16) -> np.ndarray:
        """Vectorised ``prime_count`` over an integer array."""
        xs = np.asarray(xs, dtype=np.int64)
        if xs.size and int(xs.max()) > self.limit:
            raise RangeError(f"{int(xs.max())} exceeds the sieved limit {self.limit}")
        out = np.zeros(xs.shape, dtype=np.int64)
        flat_x = xs.reshape(-1)
        flat_out = out.reshape(-1)
        rows = self.odd_bitmap.reshape(-1, CHUNK_BYTES)
        cols = np.arange(CHUNK_BYTES)
        for a in range(0, flat_x.size, batch):
            x = flat_x[a : a + batch]
            k = np.maximum(x - 1, 0) >> 1
            byte = k >> 3
            chunk = byte // CHUNK_BYTES
            pc = np.bitwise_count(rows[chunk])
            within = np.where(cols[None, :] < (byte % CHUNK_BYTES)[:, None], pc, 0).sum(axis=1)
            last = _PREFIX_POP[self.odd_bitmap[byte], k & 7]
            res = self.block_counts[chunk] + within + last + 1
            flat_out[a : a + batch] = np.where(x >= 2, res, 0)
        return out

    def primes_upto(self, x: int, start: int = 0) -> np.ndarray:
        """Primes p with start <= p <= x, ascending, as int64."""
        x = min(x, self.limit)
        if x < 2 or start > x:
            return np.zeros(0, dtype=np.int64)
        i0 = max(start - 1, 0) >> 1
        k = (x - 1) >> 1
        b0 = i0 >> 3
        bits = np.unpackbits(self.odd_bitmap[b0 : (k >> 3) + 1], bitorder="little")
        idx = np.flatnonzero(bits).astype(np.int64) + 8 * b0
        odd = 2 * idx + 1
        odd = odd[(odd >= start) & (odd <= x)]
        if start <= 2:
            odd = np.concatenate(([2], odd)).astype(np.int64)
        return odd

    def iter_prime_chunks(self, x: int, span: int = 1 << 22):
        """Yield ascending arrays of the primes <= x, ``span`` integers at a time."""
        lo = 0
        while lo <= x:
            hi = min(x, lo + span - 1)
            yield self.primes_upto(hi, start=lo)
            lo = hi + 1

    def first_primes(self, k: int) -> np.ndarray:
        pk = self.nth_prime(k)
        return self.primes_upto(pk)

    def nth_prime(self, i: int) -> int:
        if i < 1:
            raise DomainError(f"prime index must be positive, got {i}")
        if i == 1:
            if self.limit < 2:
                raise RangeError("table holds no primes")
            return 2
        target = i - 1  # rank among odd primes
        if target > int(self.block_counts[-1]):
            raise RangeError(f"the {i}-th prime exceeds the sieved limit {self.limit}")
        c = int(np.searchsorted(self.block_counts, target, side="left")) - 1
        bits = np.unpackbits(
            self.odd_bitmap[c * CHUNK_BYTES : (c + 1) * CHUNK_BYTES], bitorder="little"
        )
        pos = int(np.flatnonzero(bits)[target - int(self.block_counts[c]) - 1])
        return 2 * (c * CHUNK_BYTES * 8 + pos) + 1

    def odd_bits_int(self, x: int) -> int:
        """Odd primes <= x packed into a Python int: bit i set iff 2i+1 is prime."""
        self._check(x)
        if x < 3:
            return 0
        k = (x - 1) >> 1
        raw = int.from_bytes(self.odd_bitmap[: (k >> 3) + 1].tobytes(), "little")
        return raw & ((1 << (k + 1)) - 1)

    def indicator(self, x: int) -> np.ndarray:
        """Dense uint8 primality flags for 0..x."""
        self._check(x)
        out = np.zeros(x + 1, dtype=np.uint8)
        if x >= 2:
            out[2] = 1
        n_odd = (x + 1) // 2
        if n_odd:
            bits = np.unpackbits(self.odd_bitmap[: (n_odd + 7) // 8], bitorder="little")
            out[1::2] = bits[:n_odd]
        return out


def build_prime_table(
    limit: int,
    segment_bits: int = DEFAULT_SEGMENT_BITS,
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
) -> PrimeTable:
    if limit < 2:
        raise DomainError(f"sieve limit must be at least 2, got {limit}")
    if segment_bits % (8 * CHUNK_BYTES) or not MIN_SEGMENT_BITS <= segment_bits <= MAX_SEGMENT_BITS:
        raise DomainError(
            f"segment_bits must be a multiple of {8 * CHUNK_BYTES} in "
            f"[{MIN_SEGMENT_BITS}, {MAX_SEGMENT_BITS}], got {segment_bits}"
        )
    need = estimate_table_bytes(limit, segment_bits)
    if need > memory_budget:
        raise ResourceError(
            f"sieving to {limit} needs about {need} bytes, over the memory budget of "
            f"{memory_budget} bytes",
            budget=memory_budget,
        )

    n_odd = (limit + 1) // 2
    nbytes = _bitmap_nbytes(limit, segment_bits)
    bitmap = np.zeros(nbytes, dtype=np.uint8)
    chunk_pop = np.zeros(nbytes // CHUNK_BYTES, dtype=np.int64)
    base = _base_primes(math.isqrt(limit))
    base = base[base > 2]
    seg = np.empty(segment_bits, dtype=bool)
    seg_bytes = segment_bits // 8

    for s, i0 in enumerate(range(0, n_odd, segment_bits)):
        lo = 2 * i0 + 1
        hi = 2 * (i0 + segment_bits) - 1
        seg.fill(True)
        if i0 == 0:
            seg[0] = False  # 1 is not prime
        ps = base[base * base <= hi]
        if ps.size:
            start = np.maximum(ps * ps, (lo + ps - 1) // ps * ps)
            start = np.where(start & 1, start, start + ps)
            offs = (start - lo) >> 1
            for p, off in zip(ps.tolist(), offs.tolist()):
                if off < segment_bits:
                    seg[off::p] = False
        tail = n_odd - i0
        if tail < segment_bits:
            seg[tail:] = False
        packed = np.packbits(seg, bitorder="little")
        bitmap[s * seg_bytes : (s + 1) * seg_bytes] = packed
        a = s * seg_bytes // CHUNK_BYTES
        chunk_pop[a : a + seg_bytes // CHUNK_BYTES] = np.bitwise_count(
            packed.reshape(-1, CHUNK_BYTES)
        ).sum(axis=1)

    counts = np.zeros(chunk_pop.size + 1, dtype=np.int64)
    np.cumsum(chunk_pop, out=counts[1:])
    bitmap.flags.writeable = False
    counts.flags.writeable = False
    return PrimeTable(limit, bitmap, counts, segment_bits)


def prime_count(t: PrimeTable, x: int) -> int:
    if x < 0:
        raise DomainError(f"x must be nonnegative, got {x}")
    return t.prime_count(x)


def chebyshev_theta(t: PrimeTable, x: int) -> float:
    """Sum of ln p over primes p <= x."""
    if x < 0:
        raise DomainError(f"x must be nonnegative, got {x}")
    if x > t.limit:
        raise RangeError(f"{x} exceeds the sieved limit {t.limit}")
    partials = [math.fsum(np.log(chunk.astype(np.float64))) for chunk in t.iter_prime_chunks(x)]
    return math.fsum(partials)


def nth_prime(t: PrimeTable, i: int) -> int:
    return t.nth_prime(i)


def primorial(t: PrimeTable, k: int) -> int:
    """Exact product of the first k primes; errors rather than exceed 64 bits."""
    if k < 0:
        raise DomainError(f"k must be nonnegative, got {k}")
    d = 1
    for p in t.first_primes(k).tolist() if k else []:
        d *= p
        if d > UINT64_MAX:
            raise PrimorialOverflowError(k)
    return d


def mertens_product(t: PrimeTable, y: int) -> float:
    """Product of (1 - 1/p) over primes p <= y, accumulated as an exact-rounded log sum."""
    if y < 2:
        raise DomainError(f"Mertens product needs y >= 2, got {y}")
    if y > t.limit:
        raise RangeError(f"{y} exceeds the sieved limit {t.limit}")
    partials = [
        math.fsum(np.log1p(-1.0 / chunk.astype(np.float64))) for chunk in t.iter_prime_chunks(y)
    ]
    return math.exp(math.fsum(partials))


@dataclass(frozen=True)
class PairCountResult:
    x: int
    h: int
    count: int
    bound_rhs: float

    @property
    def ratio(self) -> float:
        return self.count / self.bound_rhs


def prime_pair_count(t: PrimeTable, x: int, h: int) -> PairCountResult:
    """Pairs of primes p < q <= x with q - p = h (h even, positive)."""
    if h < 2 or h & 1:
        raise DomainError(f"h must be a positive even integer, got {h}")
    if x < 2:
        raise DomainError(f"x must be at least 2, got {x}")
    bits = t.odd_bits_int(x)
    count = ((bits >> (h >> 1)) & bits).bit_count()
    rhs = x / math.log(x) ** 2 * float(radical_product(h))
    return PairCountResult(x, h, count, rhs)


def radical_product(h: int) -> Fraction:
    """Exact product of (1 + 1/p) over the distinct primes p dividing h."""
    if h < 1:
        raise DomainError(f"h must be positive, got {h}")
    out = Fraction(1)
    n = h
    p = 2
    while p * p <= n:
        if n % p == 0:
            out *= Fraction(p + 1, p)
            while n % p == 0:
                n //= p
        p += 1 if p == 2 else 2
    if n > 1:
        out *= Fraction(n + 1, n)
    return out
