"""Finite-x pipelines for the lower bound (second-moment method) and the
primorial-block construction, plus the de Polignac check and the two-sided
sumset diagnostic.

Every bound is evaluated with implied constant 1; reports carry measured
ratios, not verdicts on asymptotic statements.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .bsets import (
    BSetSpec,
    bset_array,
    bset_count,
    exp_cmp,
    exp_floor,
    theorem2_blocks_upto,
)
from .errors import DomainError, InvariantError, RangeError
from .sieve import PrimeTable, mertens_product
from .sumset import log_threshold, moments, progression_mask, sumset_count, TIE_EPS

E_E = math.exp(math.e)


@dataclass
class Report:
    """Rows of a tabular report; ``columns`` fixes the CSV header."""

    name: str
    columns: list[str]
    rows: list[list] = field(default_factory=list)

    @property
    def grid(self) -> list[int]:
        return [r[0] for r in self.rows]

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def records(self) -> list[dict]:
        return [dict(zip(self.columns, r)) for r in self.rows]


TheoremReport = Report


def _check_grid(grid, floor=E_E):
    grid = [int(x) for x in grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise DomainError("grid must be strictly ascending")
    for x in grid:
        if x <= floor:
            raise DomainError(f"grid point {x} must exceed e**e (log log log undefined)")
    return grid


def lnlnln(x: float) -> float:
    return math.log(math.log(math.log(x)))


# -- de Polignac -------------------------------------------------------------


def polignac_check(t: PrimeTable, n: int, include_zero_exponent: bool = True) -> list[tuple[int, int]]:
    """All (p, k) with p prime and p + 2**k = n, 2**k < n."""
    if not n & 1:
        raise DomainError(f"n must be odd, got {n}")
    if n <= 3:
        raise DomainError(f"n must exceed 3, got {n}")
    t._check(n)
    out = []
    k = 0 if include_zero_exponent else 1
    while (1 << k) < n:
        if t.is_prime(n - (1 << k)):
            out.append((n - (1 << k), k))
        k += 1
    return out


# -- the primorial-block construction ------------------------------------------


def ell_of(x: int, m: int) -> int:
    """The l >= 1 with exp(l**m) <= x < exp((l+1)**m)."""
    if m < 2:
        raise DomainError(f"m must be at least 2, got {m}")
    if x < 3:
        raise DomainError(f"x must be at least 3, got {x}")
    ell = 1
    while exp_floor((ell + 1) ** m) < x:
        ell += 1
    return ell


def s_from_loglog(loglog: float, m: int) -> int:
    """floor(loglog**(1/(2m))) - 1 with an integer correction for float roots."""
    k = int(loglog ** (1.0 / (2 * m)))
    while (k + 1) ** (2 * m) <= loglog:
        k += 1
    while k > 0 and k ** (2 * m) > loglog:
        k -= 1
    return k - 1


def default_s(x: int, m: int) -> tuple[int, bool]:
    """The cut-off index for the three-part split, clamped to >= 1; returns (s, clamped)."""
    if x <= math.e:
        return 1, True
    s = s_from_loglog(math.log(math.log(x)), m)
    return (s, False) if s >= 1 else (1, True)


@dataclass(frozen=True)
class ChebyshevRow:
    ell: int
    theta_ell: float
    upper_rhs: float
    upper_ok: bool
    theta_prev: float
    lower_rhs: float
    lower_ok: bool


@dataclass
class ChebyshevTable:
    rows: list[ChebyshevRow]

    @property
    def upper_failures(self) -> list[int]:
        return [r.ell for r in self.rows if not r.upper_ok]

    @property
    def lower_failures(self) -> list[int]:
        return [r.ell for r in self.rows if not r.lower_ok]

    @property
    def lower_from(self) -> int | None:
        """Smallest l from which the lower bound holds through the end of the table."""
        start = None
        for r in reversed(self.rows):
            if not r.lower_ok:
                break
            start = r.ell
        return start


CHEBYSHEV_CSV_HEADER = ["ell", "theta_ell", "upper_rhs", "upper_ok", "theta_prev", "lower_rhs", "lower_ok"]


def chebyshev_bound_check(t: PrimeTable, ell_min: int, ell_max: int) -> ChebyshevTable:
    """theta(p_l) < 2 l ln l and theta(p_{l-1}) > (2/3) l ln l for each l in range."""
    if not 2 <= ell_min <= ell_max:
        raise DomainError(f"need 2 <= ell_min <= ell_max, got {ell_min}, {ell_max}")
    primes = t.first_primes(ell_max)
    theta = [0.0] + list(itertools.accumulate(math.log(p) for p in primes.tolist()))
    rows = []
    for ell in range(ell_min, ell_max + 1):
        l_ln_l = ell * math.log(ell)
        up, lowr = 2 * l_ln_l, 2 * l_ln_l / 3
        rows.append(ChebyshevRow(ell, theta[ell], up, theta[ell] < up,
                                 theta[ell - 1], lowr, theta[ell - 1] > lowr))
    return ChebyshevTable(rows)


@dataclass(frozen=True)
class PartitionReport:
    m: int
    s: int
    x: int
    ell: int
    part1: int
    part2: int
    part3: int
    bound1: float
    bound2: float
    bound3: float
    total_pairs: int
    part1_distinct: int = 0
    coprime_count: int = 0
    part1_coprime: bool = True
    part2_trivial: int = 0
    cardinalities: tuple[int, ...] = ()

    @property
    def part3_within_bound(self) -> bool:
        return self.part3 <= self.bound3

    def csv_row(self) -> list:
        return [self.m, self.s, self.x, self.ell, self.part1, self.part2, self.part3,
                self.bound1, self.bound2, self.bound3, self.total_pairs]


PARTITION_CSV_HEADER = ["m", "s", "x", "ell", "part1", "part2", "part3",
                        "bound1", "bound2", "bound3", "total_pairs"]


def coprime_count(x: int, primes) -> int:
    """#{n <= x : gcd(n, prod primes) = 1} by inclusion-exclusion over squarefree divisors."""
    total = 0
    primes = list(primes)
    for r in range(len(primes) + 1):
        for combo in itertools.combinations(primes, r):
            total += (-1) ** r * (x // math.prod(combo))
    return total


def theorem2_partition(t: PrimeTable, m: int, s: int, x: int) -> PartitionReport:
    """Exact pair counts of the three-part split of p + b <= x.

    Part I: p > p_l, b in a block j with s <= j <= l.  Part II: p <= p_l,
    same blocks.  Part III: b in a block j < s.
    """
    ell = ell_of(x, m)
    if not 1 <= s <= ell:
        raise DomainError(f"s must satisfy 1 <= s <= l = {ell}, got {s}")
    t._check(x)
    blocks = theorem2_blocks_upto(t, m, x)
    p_ell = t.nth_prime(ell)
    part1 = part2 = part3 = 0
    n_upper_b = 0
    for blk in blocks:
        bs = blk.members(x - 2)
        if not bs.size:
            continue
        counts = t.prime_counts(x - bs)
        if blk.j >= s:
            small = t.prime_counts(np.minimum(x - bs, p_ell))
            part2 += int(small.sum())
            part1 += int(counts.sum() - small.sum())
            n_upper_b += int(bs.size)
        else:
            part3 += int(counts.sum())

    spec = BSetSpec.theorem_two(m)
    all_b = bset_array(t, spec, x - 2)
    total = int(t.prime_counts(x - all_b).sum()) if all_b.size else 0
    if part1 + part2 + part3 != total:
        raise InvariantError(f"partition {part1}+{part2}+{part3} != {total}")

    small_primes = t.first_primes(s).tolist()
    # distinct Part-I sums, checked one by one for coprimality with d_s
    ind = t.indicator(x)
    ind[: p_ell + 1] = 0
    progs = [(b.d_j, *b.k_range(x)) for b in blocks if b.j >= s]
    sums = progression_mask(ind, progs)
    shared = np.zeros(x + 1, dtype=bool)
    for p in small_primes:
        shared[::p] = True
    part1_coprime = not bool((sums & shared).any())
    part1_distinct = int(sums.sum())
    cop = coprime_count(x, small_primes)
    if not part1_coprime or part1_distinct > cop:
        raise InvariantError("a Part-I sum shares a factor with d_s")

    d_prev = math.prod(t.first_primes(ell - 1).tolist()) if ell > 1 else 1
    bound1 = x * mertens_product(t, small_primes[-1]) + 2**s
    bound2 = 2 * x * math.log(x) ** (2 / m) / d_prev
    size_s = blocks[s - 1].cardinality
    bound3 = float(s * size_s * t.prime_count(x))
    return PartitionReport(
        m, s, x, ell, part1, part2, part3, bound1, bound2, bound3, total,
        part1_distinct=part1_distinct, coprime_count=cop, part1_coprime=part1_coprime,
        part2_trivial=ell * n_upper_b,
        cardinalities=tuple(b.cardinality for b in blocks),
    )


def lower_bound_holds(t: PrimeTable, m: int, x: int) -> tuple[bool, float]:
    """B(x) >= (x - exp((l-1)**m)) / d_l - 3, decided exactly; also returns the RHS as a float."""
    ell = ell_of(x, m)
    d = math.prod(t.first_primes(ell).tolist())
    count = bset_count(t, BSetSpec.theorem_two(m), x)
    k = (ell - 1) ** m
    ok = exp_cmp(x - (count + 3) * d, k) < 0
    rhs = (x - math.exp(k)) / d - 3
    return ok, rhs


def construction_checks(t: PrimeTable, m: int, x: int) -> dict:
    """The primorial and interval-length inequalities at l = l(x)."""
    ell = ell_of(x, m)
    lx = math.log(x)
    root = lx ** (1 / m)
    primes = t.first_primes(ell).tolist()
    theta_ell = math.fsum(math.log(p) for p in primes)
    theta_prev = math.fsum(math.log(p) for p in primes[:-1])
    l_ln_l = ell * math.log(ell)
    loglog = math.log(lx)
    return {
        "primorial_upper_ok": theta_ell < 2 * l_ln_l <= 2 / m * root * loglog,
        "primorial_lower_ok": theta_prev > 2 * l_ln_l / 3 >= root * loglog / (2 * m),
        "interval_ok": (ell - 1) ** m < ell**m - (m - 0.5) * ell ** (m - 1)
        < lx - (m - 1) * lx ** ((m - 1) / m),
    }


THEOREM2_COLUMNS = [
    "x", "m", "ell", "s", "s_clamped", "B", "B_lower", "B_lower_ok", "half_ok",
    "primorial_upper_ok", "primorial_lower_ok", "interval_ok",
    "S", "reference", "ratio", "part1", "part2", "part3", "total_pairs", "partition_ok",
]


def theorem2_report(t: PrimeTable, m: int, grid, s_override: int | None = None,
                    with_sumset: bool = True) -> Report:
    grid = _check_grid(grid)
    spec = BSetSpec.theorem_two(m)
    rep = Report("thm2", list(THEOREM2_COLUMNS))
    for x in grid:
        ell = ell_of(x, m)
        if s_override is None:
            s, clamped = default_s(x, m)
            s = min(s, ell)
        else:
            s, clamped = s_override, False
        count = bset_count(t, spec, x)
        ok, rhs = lower_bound_holds(t, m, x)
        half_ok = 2 * bset_count(t, spec, x // 2) >= count
        checks = construction_checks(t, m, x)
        ref = x / lnlnln(x)
        if with_sumset:
            S = sumset_count(t, spec, x)
            part = theorem2_partition(t, m, s, x)
            tail = [S, ref, S / ref, part.part1, part.part2, part.part3, part.total_pairs,
                    part.part1 + part.part2 + part.part3 == part.total_pairs]
        else:
            tail = [None, ref, None, None, None, None, None, None]
        rep.rows.append([x, m, ell, s, clamped, count, rhs, ok, half_ok,
                         checks["primorial_upper_ok"], checks["primorial_lower_ok"],
                         checks["interval_ok"], *tail])
    return rep


# -- the second-moment lower bound ------------------------------------------


THEOREM1_COLUMNS = [
    "x", "alpha", "M1", "M2", "S_alpha", "S", "cs_lower_bound", "reference", "cs_ratio",
    "B_T", "kappa", "hypothesis_ratio", "cs_ok",
]


def theorem1_report(t: PrimeTable, spec: BSetSpec, alpha, grid) -> Report:
    grid = _check_grid(grid)
    rep = Report("thm1", list(THEOREM1_COLUMNS))
    for x in grid:
        st = moments(t, spec, x, alpha)
        ref = x / lnlnln(x)
        cs = st.M1 * st.M1 / st.M2 if st.M2 else 0.0
        cut = log_threshold(x, alpha) - TIE_EPS
        try:
            b_t = bset_count(t, spec, int(cut))
        except RangeError:
            b_t = None
        lx = math.log(x)
        kappa = st.M1 / (x / lx * b_t) if b_t else None
        hyp = b_t / lx if b_t is not None else None
        rep.rows.append([x, str(alpha), st.M1, st.M2, st.S_alpha, st.S, cs, ref, cs / ref,
                         b_t, kappa, hyp, st.M1 * st.M1 <= st.M2 * st.S_alpha])
    return rep


# -- two-sided sumset diagnostic ---------------------------------------------


E1_COLUMNS = ["x", "S", "B", "upper_ratio", "lower_ratio"]


def e1_diagnostic(t: PrimeTable, spec: BSetSpec, grid) -> Report:
    """S(x) against (x/ln x) min(B(x), ln x) and (x/ln x) min(B(x), ln x/ln ln x)."""
    grid = _check_grid(grid, floor=15)
    rep = Report("e1", list(E1_COLUMNS))
    for x in grid:
        S = sumset_count(t, spec, x)
        B = bset_count(t, spec, x)
        lx = math.log(x)
        llx = math.log(lx)
        upper = S * lx / (x * min(B, lx)) if B else None
        lower = S * lx * llx / (x * min(B * llx, lx)) if B else None
        rep.rows.append([x, S, B, upper, lower])
    return rep
