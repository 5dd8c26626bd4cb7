import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import is_prime_td, pair_double_loop, plain_sieve
from romanoff.errors import DomainError, PrimorialOverflowError, RangeError, ResourceError
from romanoff.sieve import (
    build_prime_table,
    chebyshev_theta,
    estimate_table_bytes,
    mertens_product,
    nth_prime,
    prime_count,
    prime_pair_count,
    primorial,
    radical_product,
)


def test_small_tables():
    t = build_prime_table(10)
    assert [n for n in range(11) if t.is_prime(n)] == [2, 3, 5, 7]
    t = build_prime_table(2)
    assert prime_count(t, 2) == 1
    assert [n for n in range(3) if t.is_prime(n)] == [2]


def test_prime_count_examples(t6):
    assert prime_count(t6, 1) == 0
    assert prime_count(t6, 10) == 4
    assert prime_count(t6, 100) == 25
    assert prime_count(t6, 10**6) == 78498


def test_prime_count_exhaustive_to_1e5():
    t = build_prime_table(10**5)
    flags = plain_sieve(10**5)
    expect = np.cumsum(np.frombuffer(bytes(flags), dtype=np.uint8))
    got = t.prime_counts(np.arange(10**5 + 1))
    assert np.array_equal(got, expect)
    for x in range(0, 3000):
        assert prime_count(t, x) == expect[x]


def test_table_invariant_popcount(t6):
    set_bits = int(np.bitwise_count(t6.odd_bitmap).sum())
    assert prime_count(t6, t6.limit) == set_bits + 1


@pytest.mark.parametrize("limit", [2, 3, 9, 4097, 10**5 + 1, 10**7])
def test_segmented_matches_unsegmented(limit):
    t = build_prime_table(limit, segment_bits=1 << 12)
    flags = np.frombuffer(bytes(plain_sieve(limit)), dtype=np.uint8)
    odd = flags[1::2]
    packed = np.packbits(odd, bitorder="little")
    assert np.array_equal(t.odd_bitmap[: packed.size], packed)
    assert not t.odd_bitmap[packed.size :].any()


def test_segment_sizes_agree():
    a = build_prime_table(3 * 10**5 + 7, segment_bits=1 << 12)
    b = build_prime_table(3 * 10**5 + 7, segment_bits=1 << 18)
    n = min(a.odd_bitmap.size, b.odd_bitmap.size)
    assert np.array_equal(a.odd_bitmap[:n], b.odd_bitmap[:n])


def test_memory_budget():
    with pytest.raises(ResourceError, match="budget"):
        build_prime_table(10**6, memory_budget=1000)
    assert estimate_table_bytes(2**33) < 1 << 30  # 2**33 fits the default budget


def test_bad_arguments(t6):
    with pytest.raises(DomainError):
        build_prime_table(1)
    with pytest.raises(DomainError):
        build_prime_table(100, segment_bits=1000)
    with pytest.raises(RangeError):
        prime_count(t6, 10**6 + 1)
    with pytest.raises(RangeError):
        chebyshev_theta(t6, 10**7)


def test_theta(t6):
    assert chebyshev_theta(t6, 1) == 0
    assert chebyshev_theta(t6, 2) == pytest.approx(math.log(2), abs=1e-15)
    assert chebyshev_theta(t6, 10) == pytest.approx(math.log(210), abs=1e-14)
    assert chebyshev_theta(t6, 10) == pytest.approx(5.3471, abs=1e-4)


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=2, max_value=20000))
def test_theta_jumps_by_log_p(x):
    t = build_prime_table(20001)
    step = chebyshev_theta(t, x) - chebyshev_theta(t, x - 1)
    if is_prime_td(x):
        assert step == pytest.approx(math.log(x), abs=1e-9)
    else:
        assert step == 0


def test_nth_prime(t6):
    assert nth_prime(t6, 1) == 2
    assert nth_prime(t6, 4) == 7
    assert nth_prime(t6, 25) == 97
    assert nth_prime(t6, 78498) == 999983
    with pytest.raises(RangeError):
        nth_prime(t6, 78499)


def test_nth_prime_walk(t6):
    ps = t6.primes_upto(20000).tolist()
    assert ps == [n for n in range(20001) if is_prime_td(n)]
    for i, p in enumerate(ps, 1):
        assert nth_prime(t6, i) == p


def test_primorial(t6):
    assert primorial(t6, 1) == 2
    assert primorial(t6, 4) == 210
    assert primorial(t6, 15) == 614889782588491410
    for k in range(2, 16):
        assert primorial(t6, k) == primorial(t6, k - 1) * nth_prime(t6, k)
    with pytest.raises(PrimorialOverflowError) as err:
        primorial(t6, 16)
    assert err.value.k == 16


def test_mertens(t6):
    assert mertens_product(t6, 2) == 0.5
    assert mertens_product(t6, 10) == pytest.approx(8 / 35, rel=1e-14)
    v = mertens_product(t6, 10**6) * math.log(10**6)
    assert abs(v - 0.5614594835668851) / 0.5614594835668851 < 0.05
    with pytest.raises(DomainError):
        mertens_product(t6, 1)


def test_mertens_steps(t6):
    prev = mertens_product(t6, 2)
    for y in range(3, 3000):
        cur = mertens_product(t6, y)
        if is_prime_td(y):
            assert cur < prev
        else:
            assert cur == prev
        prev = cur


def test_pair_examples(t6):
    assert prime_pair_count(t6, 30, 2).count == 4
    assert prime_pair_count(t6, 30, 4).count == 4
    assert prime_pair_count(t6, 3, 2).count == 0
    r = prime_pair_count(t6, 30, 2)
    assert r.bound_rhs == pytest.approx(30 / math.log(30) ** 2 * 1.5)
    for h in (0, 3, -2):
        with pytest.raises(DomainError):
            prime_pair_count(t6, 30, h)


def test_pairs_match_double_loop(t6, primes6):
    for x in (100, 1000, 54321):
        for h in range(2, 61, 2):
            assert prime_pair_count(t6, x, h).count == pair_double_loop(primes6, x, h)


def test_pairs_monotone_and_zero(t6):
    for h in (2, 6, 30):
        counts = [prime_pair_count(t6, x, h).count for x in range(2, 2000)]
        assert all(a <= b for a, b in zip(counts, counts[1:]))
    for x in range(2, 200):
        for h in range(x, x + 6, 2) if x % 2 == 0 else range(x + 1, x + 7, 2):
            assert prime_pair_count(t6, x, h).count == 0


def _rad(h):
    return math.prod(p for p in range(2, h + 1) if h % p == 0 and is_prime_td(p))


def test_radical_product_examples():
    assert radical_product(1) == 1
    assert radical_product(12) == 2
    assert radical_product(2) == Fraction(3, 2)
    assert radical_product(999983 * 1000003) == Fraction(999984 * 1000004, 999983 * 1000003)


@given(st.integers(min_value=1, max_value=5000))
def test_radical_product_squarefree_kernel(h):
    r = radical_product(h)
    assert r == radical_product(_rad(h))
    assert r >= 1
