import math
import random
from collections import Counter
from decimal import Decimal
from fractions import Fraction

import numpy as np
import pytest

from oracles import pair_double_loop, sumset_double_loop
from romanoff.bsets import BSetSpec, enumerate_bset
from romanoff.errors import DomainError, RangeError, ResourceError
from romanoff.sumset import (
    _PairCounter,
    difference_multiplicities,
    log_threshold,
    moments,
    pair_counts_all,
    rep_count,
    rep_count_truncated,
    representation_counts,
    represented_mask,
    sumset_count,
    truncate,
    truncated_sumset_count,
)

P2 = BSetSpec.powers_of_two()
SPECS = [
    P2,
    BSetSpec.powers_of_two(False),
    BSetSpec.two_pow_squares(),
    BSetSpec.theorem_two(2),
    BSetSpec.theorem_two(3),
    BSetSpec.explicit([1, 3, 4, 9, 10, 28, 100, 101]),
]
ids = [s.label() for s in SPECS]


def oracle_threshold(n, alpha):
    return math.log(n) ** (1 / float(alpha))


def oracle_f(primes, bs, x):
    f = Counter()
    for b in bs:
        for p in primes:
            if p + b > x:
                break
            f[p + b] += 1
    return f


def test_rep_count_examples(t6):
    assert rep_count(t6, P2, 9) == 2
    assert rep_count(t6, P2, 127) == 0
    assert rep_count(t6, P2, 959) == 0
    for spec in SPECS:
        assert rep_count(t6, spec, 2) == 0


@pytest.mark.parametrize("spec", SPECS, ids=ids)
def test_rep_count_matches_pairs(t6, primes6, spec):
    bs = enumerate_bset(t6, spec, 3000)
    f = oracle_f(primes6, bs, 3000)
    for n in range(2, 3001):
        assert rep_count(t6, spec, n) == f[n]


def test_rep_count_truncated_examples(t6):
    assert rep_count_truncated(t6, P2, 9, Fraction(1, 3)) == 2
    assert rep_count_truncated(t6, P2, 9, 1) == 1
    assert rep_count_truncated(t6, P2, 9, 1000) == 0
    with pytest.raises(DomainError):
        rep_count_truncated(t6, P2, 2, 1)


def test_threshold_and_tie_rule():
    assert float(log_threshold(20, 1)) == pytest.approx(math.log(20))
    bs = np.arange(1, 50, dtype=np.int64)
    # (ln n)^(1/alpha) with ln n = 2 and alpha = 1/2 is exactly 4 in the limit; 4 is excluded
    n = 7  # ln 7 ~ 1.9459
    assert truncate(bs, n, Fraction(1, 2)).tolist() == [1, 2, 3]
    # a threshold within 1e-12 above an integer drops that integer
    with pytest.raises(DomainError):
        log_threshold(10, 0)


def test_tie_rule_exact_boundary(monkeypatch):
    import romanoff.sumset as ss

    bs = np.array([1, 2, 3, 4, 5], dtype=np.int64)
    monkeypatch.setattr(ss, "_float_top", lambda n, a: None)
    monkeypatch.setattr(ss, "log_threshold", lambda n, a: Decimal(4) + Decimal("5e-13"))
    assert ss.truncate(bs, 100, 1).tolist() == [1, 2, 3]
    monkeypatch.setattr(ss, "log_threshold", lambda n, a: Decimal(4) + Decimal("2e-12"))
    assert ss.truncate(bs, 100, 1).tolist() == [1, 2, 3, 4]


def test_sumset_examples(t6, primes6):
    assert sumset_count(t6, P2, 20) == 17
    assert sumset_count(t6, BSetSpec.explicit([50]), 40) == 0
    assert sumset_count(t6, P2, 10**4) == sumset_double_loop(primes6, enumerate_bset(t6, P2, 10**4), 10**4)


def test_truncated_examples(t6, primes6):
    # threshold ln 20 ~ 3.0 admits b in {1, 2}
    assert truncated_sumset_count(t6, P2, 20, 1) == sumset_double_loop(primes6, [1, 2], 20)
    assert truncated_sumset_count(t6, BSetSpec.explicit([40]), 100, 1) == 0
    x = 10**5
    cut = oracle_threshold(x, Fraction(1, 3))
    bs = [b for b in enumerate_bset(t6, P2, x) if b < cut]
    assert truncated_sumset_count(t6, P2, x, Fraction(1, 3)) == sumset_double_loop(primes6, bs, x)


@pytest.mark.parametrize("spec", SPECS, ids=ids)
def test_engines_agree_spot(t6, primes6, spec):
    rng = random.Random(11)
    for x in [3, 4, 5, 17] + [rng.randrange(5, 10**6) for _ in range(4)]:
        bs = enumerate_bset(t6, spec, x)
        expect = sumset_double_loop(primes6, bs, x) if x < 2 * 10**5 else None
        b = int(represented_mask(t6, spec, x).sum())
        a = sumset_count(t6, spec, x, method="shift") if x < 2 * 10**5 else b
        assert a == b
        if expect is not None:
            assert a == expect
        if spec.kind.name == "THEOREM_TWO":
            assert sumset_count(t6, spec, x, method="blocks") == a


def test_sumset_monotone_and_dominates(t6):
    for spec in SPECS:
        prev = 0
        for x in range(3, 1500):
            s = sumset_count(t6, spec, x)
            assert s >= prev
            prev = s
            assert s >= truncated_sumset_count(t6, spec, x, Fraction(1, 2))


def test_sumset_range(t6):
    with pytest.raises(RangeError):
        sumset_count(t6, P2, 10**6 + 1)


@pytest.mark.parametrize("spec", SPECS, ids=ids)
def test_first_moment_identity(t6, primes6, spec):
    x = 10**5
    bs = np.array(enumerate_bset(t6, spec, x - 2), dtype=np.int64)
    f = representation_counts(t6, bs, x)
    expect = sum(t6.prime_count(x - b) for b in bs.tolist())
    assert int(f.sum()) == expect
    pi = np.cumsum(np.isin(np.arange(x + 1), primes6[:9592]))
    assert expect == int(sum(pi[x - b] for b in bs.tolist()))


def test_fft_and_direct_convolution_agree(t6):
    rng = np.random.default_rng(3)
    bs = np.unique(rng.integers(1, 5000, size=300)).astype(np.int64)
    x = 20000
    fast = representation_counts(t6, bs, x)
    slow = np.zeros(x + 1, dtype=np.int64)
    ind = t6.indicator(x)
    for b in bs.tolist():
        slow[b:] += ind[: x + 1 - b]
    assert np.array_equal(fast, slow)


def test_difference_multiplicities_routes():
    rng = np.random.default_rng(5)
    bs = np.unique(rng.integers(1, 40000, size=3500)).astype(np.int64)
    assert bs.size > 3000
    fast = difference_multiplicities(bs)
    slow = np.bincount(
        (bs[None, :] - bs[:, None])[np.triu_indices(bs.size, 1)], minlength=fast.size
    )
    assert np.array_equal(fast, slow)


def test_pair_count_routes(t6, primes6):
    x = 5000
    allh = pair_counts_all(t6, x, 300)
    pc = _PairCounter(t6, x)
    for h in range(1, 301):
        assert allh[h] == pc(h) == pair_double_loop(primes6, x, h)


def test_moments_single_shift(t6):
    st = moments(t6, BSetSpec.explicit([1]), 100, Fraction(1, 2))
    assert (st.M1, st.M2, st.S_alpha) == (25, 25, 25)
    assert st.M1 == st.diag_exact == t6.prime_count(99)
    # f is constant (= 1) on its support, so Cauchy-Schwarz is an equality
    assert st.M1**2 == st.M2 * st.S_alpha


def test_cauchy_schwarz_strict_example(t6):
    st = moments(t6, P2, 10**4, Fraction(1, 2))
    assert st.M1**2 < st.M2 * st.S_alpha


@pytest.mark.parametrize(
    "spec, x, alpha",
    [(P2, 10**4, Fraction(1, 2)), (P2, 3000, Fraction(1, 3)),
     (BSetSpec.theorem_two(2), 1000, Fraction(1, 10)),
     (BSetSpec.explicit([1, 3, 4, 9, 10, 28]), 5000, 1)],
)
def test_moments_match_exhaustive(t6, primes6, spec, x, alpha):
    st = moments(t6, spec, x, alpha)
    primes6 = [p for p in primes6 if p <= x]
    cut = oracle_threshold(x, alpha)
    bs = [b for b in enumerate_bset(t6, spec, x - 2) if b < cut]
    f = oracle_f(primes6, bs, x)
    assert st.M1 == sum(f.values())
    assert st.M2 == sum(v * v for v in f.values())
    assert st.S_alpha == len(f)
    assert st.S == sumset_double_loop(primes6, enumerate_bset(t6, spec, x), x)
    pi_x = sum(1 for p in primes6 if p <= x)
    assert st.diag == len(bs) * pi_x
    pset = set(primes6)
    offdiag = sum(
        pair_double_loop(primes6, x, b2 - b1) if (b2 - b1) % 2 == 0
        else int(2 + b2 - b1 <= x and (2 + b2 - b1) in pset)
        for i, b1 in enumerate(bs) for b2 in bs[i + 1 :]
    )
    assert st.offdiag == offdiag
    exact = sum(
        1 for i, b1 in enumerate(bs) for b2 in bs[i + 1 :]
        for p2 in primes6 if p2 + b2 <= x and (p2 + b2 - b1) in pset
    )
    assert st.offdiag_exact == exact
    assert st.M2 == st.diag_exact + 2 * exact
    assert st.diag_exact <= st.diag
    assert st.M2 <= st.diag + 2 * st.offdiag


def test_moments_large_block_set(t6):
    st = moments(t6, BSetSpec.theorem_two(2), 10**6, 0.1)
    assert st.n_terms == 34430
    assert st.M1 == 1450671329  # equals the partition total for the same x
    assert st.M1**2 <= st.M2 * st.S_alpha


def test_moments_csv_row(t6):
    st = moments(t6, P2, 10**4, Fraction(1, 2))
    row = st.csv_row()
    assert row[1] == "1/2"
    assert row[-1] == st.M1**2 // st.M2


def test_moments_resource_guard(t6):
    with pytest.raises(ResourceError, match="larger alpha"):
        moments(t6, BSetSpec.theorem_two(2), 10**5, 0.1, max_terms=100)


def test_threshold_top_matches_decimal_route():
    from decimal import Decimal

    from romanoff.sumset import TIE_EPS, log_threshold, threshold_top

    for alpha in (Fraction(1, 3), Fraction(1, 2), 1, Fraction(2, 7), 0.1):
        for n in list(range(3, 5000)) + [10**6 + 7, 10**8, 2**62]:
            cut = log_threshold(n, alpha) - TIE_EPS
            assert threshold_top(n, alpha) == int(cut.to_integral_value(rounding="ROUND_CEILING")) - 1
