import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

import oracles
from bdhlab.conditions import progressions_lhs
from bdhlab.decomposition import (PhiRecipInterval, c_coefficient, key_decomposition,
                                  lemma1_ratio, lemma2_ratio, phi_recip_sum)
from bdhlab.sequences import from_weights, generate
from bdhlab.variance import variance_direct


def brute_phi_recip(lo, hi, inc_lo, inc_hi, m):
    tot = Fraction(0)
    for d in range(1, math.floor(hi) + 2):
        inside = (d > lo or (inc_lo and d == lo)) and (d < hi or (inc_hi and d == hi))
        if inside and math.gcd(d, m) == 1:
            tot += Fraction(1, oracles.phi(d))
    return tot


def test_phi_recip_examples(table):
    assert phi_recip_sum(PhiRecipInterval(1, 2, False, True), table, exact=True) == 1
    assert phi_recip_sum(PhiRecipInterval(3, 3, False, True), table) == 0
    assert phi_recip_sum(PhiRecipInterval(4, 8, False, True), table, exact=True) == Fraction(7, 6)
    with pytest.raises(ValueError):
        phi_recip_sum(PhiRecipInterval(1, table.limit + 5, True, True), table)
    with pytest.raises(ValueError):
        PhiRecipInterval(3, 2, True, True)


@given(st.floats(0, 60), st.floats(0, 60), st.booleans(), st.booleans(), st.integers(1, 90))
def test_phi_recip_against_enumeration(table, a, b, inc_lo, inc_hi, m):
    lo, hi = min(a, b), max(a, b)
    got = phi_recip_sum(PhiRecipInterval(lo, hi, inc_lo, inc_hi, m), table, exact=True)
    assert got == brute_phi_recip(lo, hi, inc_lo, inc_hi, m)


def test_c_coefficient_examples(table):
    assert c_coefficient(1, 2, 2, table, exact=True) == 0
    assert c_coefficient(1, 4, 8, table, exact=True) == Fraction(1, 3)
    assert c_coefficient(2, 4, 4, table, exact=True) == 0
    with pytest.raises(ValueError):
        c_coefficient(1, 0, 4, table)


@pytest.mark.parametrize("l", [2.5, 5.5, 7.3, 11.9, 30.7])
def test_c_vanishes_when_intervals_hold_same_integers(table, l):
    first = PhiRecipInterval(l / 2, l, True, False).integer_range()
    second = PhiRecipInterval(l / 2, l, False, True).integer_range()
    assert list(first) == list(second)
    for m in (1, 2, 6, 35):
        assert c_coefficient(m, l, l, table, exact=True) == 0


def test_lemma1_examples(table):
    assert lemma1_ratio(1, 2, 2, table) == 0
    assert lemma1_ratio(1, 4, 8, table) == pytest.approx((1 / 3) / (math.log(6) / 6), rel=1e-12)
    with pytest.raises(ValueError):
        lemma1_ratio(1, 8, 4, table)


def test_lemma2_examples(table):
    assert lemma2_ratio(7, 1, 4, 8, table) == 0
    c2 = c_coefficient(2, 4, 8, table, exact=True)
    c1 = c_coefficient(1, 4, 8, table, exact=True)
    assert (c2, c1) == (Fraction(1, 12), Fraction(1, 3))
    assert lemma2_ratio(1, 2, 4, 8, table) == pytest.approx(0.5)
    assert lemma2_ratio(1, 11, 4, 8, table) == 0


def test_zero_sequence_decomposition(table):
    d = key_decomposition(from_weights([0] * 100), 20, table)
    assert (d.diagonal, d.hl_term, d.tail_term, d.residual) == (0, 0, 0, 0)


def test_integers_example(table):
    seq = generate("integers", 100)
    d = key_decomposition(seq, 20, table)
    assert d.diagonal == 1000
    assert d.reassembled() == variance_direct(seq, 20) == d.v_exact


def test_smooth_example(table):
    seq = generate("smooth_indicator", 500, y=7)
    d = key_decomposition(seq, 100, table)
    assert d.exact and d.reassembled() == variance_direct(seq, 100)


def test_windows_and_pairs_agree(table):
    rng = random.Random(31)
    for _ in range(12):
        x = rng.randint(40, 400)
        Q = rng.uniform(math.sqrt(2 * x) + 0.01, x)
        seq = generate("bernoulli", x, alpha=rng.uniform(0.05, 0.8), seed=rng.randrange(999))
        a = key_decomposition(seq, Q, table, method="windows")
        b = key_decomposition(seq, Q, table, method="pairs")
        assert (a.hl_term, a.tail_term, a.residual) == (b.hl_term, b.tail_term, b.residual)


def test_float_path_identity(table):
    seq = generate("von_mangoldt", 600, table)
    d = key_decomposition(seq, 77, table)
    pairs = key_decomposition(seq, 77, table, method="pairs")
    assert d.hl_term == pytest.approx(pairs.hl_term, rel=1e-12)
    assert d.reassembled() == pytest.approx(d.v_exact, rel=1e-12)


def test_residual_bound_small_cases(table):
    rng = random.Random(5)
    for _ in range(6):
        x = rng.randint(64, 500)
        Q = rng.uniform(math.sqrt(2 * x) + 0.01, x)
        seq = generate("bernoulli", x, alpha=0.3, seed=rng.randrange(100))
        d = key_decomposition(seq, Q, table)
        tau_sq = sum(int(table.tau_table[n]) for n in range(1, seq.n + 1) if seq.weights[n - 1])
        assert abs(d.residual) <= 10 * (tau_sq + progressions_lhs(seq, Q))


def test_range_checks(table):
    with pytest.raises(ValueError):
        key_decomposition(generate("integers", 100), 12, table)
    with pytest.raises(ValueError):
        key_decomposition(generate("integers", 100), 150, table)
