"""The B-sets: powers of two, 2^(a^2), primorial blocks, and explicit lists."""

from __future__ import annotations

import bisect
import enum
import math
from dataclasses import dataclass
from decimal import Decimal, localcontext
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import DomainError, InputError, RangeError
from .sieve import PrimeTable, primorial

INT63_CAP = 1 << 63


class BSetKind(enum.Enum):
    POWERS_OF_TWO = "powers-of-two"
    TWO_POW_SQUARES = "two-pow-squares"
    THEOREM_TWO = "theorem-two"
    EXPLICIT = "explicit"


@dataclass(frozen=True)
class BSetSpec:
    kind: BSetKind
    m: int | None = None
    include_zero_exponent: bool = True
    path: str | None = None
    members: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.kind is BSetKind.THEOREM_TWO:
            if self.m is None or self.m < 2:
                raise DomainError(f"the primorial-block set needs m >= 2, got {self.m}")
        if self.kind is BSetKind.EXPLICIT:
            if self.members is None:
                raise DomainError("explicit B-set needs members (use BSetSpec.from_file)")
            _check_ascending(self.members)

    @classmethod
    def powers_of_two(cls, include_zero_exponent: bool = True) -> BSetSpec:
        return cls(BSetKind.POWERS_OF_TWO, include_zero_exponent=include_zero_exponent)

    @classmethod
    def two_pow_squares(cls, include_zero_exponent: bool = True) -> BSetSpec:
        return cls(BSetKind.TWO_POW_SQUARES, include_zero_exponent=include_zero_exponent)

    @classmethod
    def theorem_two(cls, m: int) -> BSetSpec:
        return cls(BSetKind.THEOREM_TWO, m=m)

    @classmethod
    def explicit(cls, members) -> BSetSpec:
        return cls(BSetKind.EXPLICIT, members=tuple(int(b) for b in members))

    @classmethod
    def from_file(cls, path) -> BSetSpec:
        return cls(BSetKind.EXPLICIT, path=str(path), members=tuple(read_explicit_file(path)))

    def label(self) -> str:
        if self.kind is BSetKind.THEOREM_TWO:
            return f"theorem-two(m={self.m})"
        if self.kind is BSetKind.EXPLICIT:
            return f"explicit({self.path or len(self.members)})"
        suffix = "" if self.include_zero_exponent else ",no-zero"
        return f"{self.kind.value}{suffix}"


def _check_ascending(members) -> None:
    prev = 0
    for b in members:
        if b <= prev:
            raise DomainError(f"explicit B-set must be strictly increasing positive integers at {b}")
        prev = b


def read_explicit_file(path) -> list[int]:
    """One positive integer per line, strictly ascending; blank lines and # comments allowed."""
    try:
        text = Path(path).read_text(encoding="ascii")
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read B-set file: {exc}", path=path) from exc
    out: list[int] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if not line.isdigit():
            raise InputError(f"not a decimal integer: {line!r}", path=path, lineno=lineno)
        b = int(line)
        if b < 1:
            raise InputError("members must be positive", path=path, lineno=lineno)
        if out and b <= out[-1]:
            raise InputError(f"{b} does not exceed previous member {out[-1]}", path=path, lineno=lineno)
        out.append(b)
    return out


def write_explicit_file(path, members) -> None:
    Path(path).write_text("".join(f"{int(b)}\n" for b in members), encoding="ascii")


# -- exact integer boundaries of exp(K) ------------------------------------


@lru_cache(maxsize=None)
def exp_floor(k: int) -> int:
    """floor(e**k) for integer k >= 0, exact.

    e**k is irrational for k >= 1, so the result n satisfies n < e**k < n + 1
    strictly; this is re-verified through logarithms before returning.
    """
    if k < 0:
        raise DomainError(f"exponent must be nonnegative, got {k}")
    if k == 0:
        return 1
    prec = int(k / math.log(10)) + 40
    while True:
        with localcontext() as ctx:
            ctx.prec = prec
            n = int(Decimal(k).exp())  # truncation == floor for positive values
            kd = Decimal(k)
            gap = Decimal(10) ** (-(prec // 2))
            below = kd - Decimal(n).ln()
            above = Decimal(n + 1).ln() - kd
            if below > gap and above > gap:
                return n
        prec *= 2


def exp_cmp(value, k: int) -> int:
    """Sign of value - e**k for an exact rational value; never 0 for k >= 1."""
    value = Fraction(value)
    n = exp_floor(k)
    if k == 0:
        return (value > 1) - (value < 1)
    if value <= n:
        return -1
    if value >= n + 1:
        return 1
    with localcontext() as ctx:
        ctx.prec = int(k / math.log(10)) + 60
        e = Decimal(k).exp()
        v = Decimal(value.numerator) / Decimal(value.denominator)
        return 1 if v > e else -1


# -- primorial blocks -------------------------------------------------------


@dataclass(frozen=True)
class Block:
    j: int
    d_j: int
    lo: int
    hi: int
    cardinality: int

    def count_upto(self, x: int) -> int:
        top = min(x, self.hi)
        if top < self.lo:
            return 0
        return top // self.d_j - (self.lo - 1) // self.d_j

    def k_range(self, x: int | None = None) -> tuple[int, int]:
        """Multipliers k with d_j*k in the block (and <= x); empty when k_lo > k_hi."""
        top = self.hi if x is None else min(self.hi, x)
        return -(-self.lo // self.d_j), top // self.d_j

    def members(self, x: int | None = None) -> np.ndarray:
        klo, khi = self.k_range(x)
        return np.arange(klo, khi + 1, dtype=np.int64) * self.d_j

    def csv_row(self) -> list:
        return [self.j, self.d_j, self.lo, self.hi, self.cardinality]


BLOCK_CSV_HEADER = ["j", "d_j", "lo", "hi", "cardinality"]


def max_block_index(m: int) -> int:
    """Largest j whose block lies below 2**63, i.e. exp((j+1)**m) < 2**63."""
    if m < 2:
        raise DomainError(f"m must be at least 2, got {m}")
    j = 0
    while exp_floor((j + 2) ** m) < INT63_CAP:
        j += 1
    if j == 0:
        raise RangeError(f"for m={m} not even the first block fits below 2**63")
    return j


def theorem2_block(t: PrimeTable, m: int, j: int) -> Block:
    if m < 2:
        raise DomainError(f"m must be at least 2, got {m}")
    if j < 1:
        raise DomainError(f"block index must be positive, got {j}")
    jmax = max_block_index(m)
    if j > jmax:
        raise RangeError(f"block {j} for m={m} exceeds 2**63; maximal supported j is {jmax}")
    return _block(t, m, j)


_BLOCKS: dict[tuple[int, int], Block] = {}


def _block(t, m, j):
    # blocks depend only on (m, j); the table just supplies the first j primes
    blk = _BLOCKS.get((m, j))
    if blk is None:
        blk = _BLOCKS[(m, j)] = _make_block(t, m, j)
    return blk


def _make_block(t, m, j):
    d = primorial(t, j)
    lo = exp_floor(j**m) + 1
    hi = exp_floor((j + 1) ** m)
    card = hi // d - (lo - 1) // d
    return Block(j, d, lo, hi, card)


def theorem2_blocks_upto(t: PrimeTable, m: int, x: int) -> list[Block]:
    """Blocks meeting [1, x], in order of j."""
    jmax = max_block_index(m)
    if x >= exp_floor((jmax + 1) ** m) + 1:
        raise RangeError(
            f"x={x} lies beyond block {jmax}, the last one below 2**63 for m={m}"
        )
    out = []
    j = 1
    while j <= jmax and exp_floor(j**m) + 1 <= x:
        out.append(_block(t, m, j))
        j += 1
    return out


def find_j0(t: PrimeTable, m: int, jmax: int) -> tuple[int, list[int]]:
    """Smallest j0 with |B_j0| < |B_j0+1| < ... < |B_jmax|, plus the cardinalities for j=1..jmax."""
    if jmax < 1:
        raise DomainError(f"jmax must be positive, got {jmax}")
    cards = [theorem2_block(t, m, j).cardinality for j in range(1, jmax + 1)]
    j0 = jmax
    while j0 > 1 and cards[j0 - 2] < cards[j0 - 1]:
        j0 -= 1
    return j0, cards


# -- enumeration and counting ----------------------------------------------


def bset_array(t: PrimeTable, spec: BSetSpec, x: int) -> np.ndarray:
    """Members b <= x as an ascending int64 array."""
    if x < 1:
        return np.zeros(0, dtype=np.int64)
    kind = spec.kind
    if kind is BSetKind.POWERS_OF_TWO:
        e0 = 0 if spec.include_zero_exponent else 1
        return np.array([1 << e for e in range(e0, x.bit_length())], dtype=np.int64)
    if kind is BSetKind.TWO_POW_SQUARES:
        a0 = 0 if spec.include_zero_exponent else 1
        top = math.isqrt(x.bit_length() - 1)
        return np.array([1 << (a * a) for a in range(a0, top + 1)], dtype=np.int64)
    if kind is BSetKind.THEOREM_TWO:
        parts = [blk.members(x) for blk in theorem2_blocks_upto(t, spec.m, x)]
        return np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)
    members = spec.members
    return np.array(members[: bisect.bisect_right(members, x)], dtype=np.int64)


def enumerate_bset(t: PrimeTable, spec: BSetSpec, x: int) -> list[int]:
    return bset_array(t, spec, x).tolist()


def bset_count(t: PrimeTable, spec: BSetSpec, x: int) -> int:
    """|B ∩ [1, x]| without enumerating the primorial blocks."""
    if x < 1:
        return 0
    kind = spec.kind
    if kind is BSetKind.POWERS_OF_TWO:
        return x.bit_length() - (0 if spec.include_zero_exponent else 1)
    if kind is BSetKind.TWO_POW_SQUARES:
        return math.isqrt(x.bit_length() - 1) + (1 if spec.include_zero_exponent else 0)
    if kind is BSetKind.THEOREM_TWO:
        return sum(blk.count_upto(x) for blk in theorem2_blocks_upto(t, spec.m, x))
    return bisect.bisect_right(spec.members, x)


@dataclass(frozen=True)
class CConditionRow:
    x: int
    cx: int
    count_cx: int
    count_x: int

    @property
    def ratio(self) -> Fraction:
        return Fraction(self.count_cx, self.count_x)


@dataclass(frozen=True)
class CConditionReport:
    c: Fraction
    rows: list[CConditionRow]

    @property
    def minimum(self) -> Fraction:
        return min(r.ratio for r in self.rows)


def c_condition_report(t: PrimeTable, spec: BSetSpec, c, grid) -> CConditionReport:
    """Ratios B(cx)/B(x) over a grid, with B(cx) meaning B(floor(cx))."""
    c = Fraction(c)
    if not 0 < c < 1:
        raise DomainError(f"c must lie in (0, 1), got {c}")
    grid = list(grid)
    if not grid:
        raise DomainError("grid must be nonempty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise DomainError("grid must be strictly ascending")
    rows = []
    for x in grid:
        bx = bset_count(t, spec, x)
        if bx == 0:
            raise DomainError(f"B({x}) = 0, ratio undefined")
        cx = math.floor(c * x)
        rows.append(CConditionRow(x, cx, bset_count(t, spec, cx), bx))
    return CConditionReport(c, rows)
