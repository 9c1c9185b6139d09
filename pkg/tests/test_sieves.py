import math
import random

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from bdhlab.sieves import (build_factor_table, euler_phi, mobius, smooth_part, tau, tau3,
                           ResourceLimitError)


def test_spf_small_tables():
    assert build_factor_table(10).spf[1:].tolist() == [1, 2, 3, 2, 5, 2, 7, 2, 3, 2]
    assert build_factor_table(1).spf[1:].tolist() == [1]
    assert build_factor_table(2).spf[2] == 2


def test_rejects_empty_table():
    with pytest.raises(ValueError):
        build_factor_table(0)


def test_spf_matches_trial_division(table):
    spf = table.spf
    for n in range(1, 5001):
        assert spf[n] == oracles.trial_spf(n)


def test_segmented_sieve_identical_to_single_segment():
    a = build_factor_table(100_000, segment=1 << 10)
    b = build_factor_table(100_000)
    assert np.array_equal(a.spf, b.spf)


def test_factorization_depth(table):
    for n in random.Random(1).sample(range(2, table.limit + 1), 500):
        steps = len([e for _, e in table.factorize(n) for _ in range(e)])
        assert steps <= math.log2(n)
        assert math.prod(p**e for p, e in table.factorize(n)) == n


def test_examples(table):
    assert euler_phi(1, table) == 1 and euler_phi(12, table) == 4 and euler_phi(97, table) == 96
    assert mobius(1, table) == 1 and mobius(4, table) == 0 and mobius(6, table) == 1
    assert tau(1, table) == 1 and tau(12, table) == 6 and tau(101, table) == 2
    assert tau3(1, table) == 1 and tau3(4, table) == 6 and tau3(20, table, prime_threshold=3) == 6
    assert smooth_part(1, 7, table) == 1
    assert smooth_part(20, 3, table) == 4 and smooth_part(20, 5, table) == 20


def test_out_of_range(table):
    with pytest.raises(ValueError):
        euler_phi(table.limit + 1, table)
    with pytest.raises(ValueError):
        tau(0, table)


def test_tau3_examples_by_triples(table):
    for n in (4, 12, 20, 36, 60):
        assert tau3(n, table) == oracles.tau3_triples(n)


def test_multiplicativity_random_coprime_pairs(table):
    rng = random.Random(7)
    N = table.limit
    done = 0
    while done < 1000:
        m = rng.randint(1, 200)
        n = rng.randint(1, N // m)
        if math.gcd(m, n) != 1:
            continue
        done += 1
        assert euler_phi(m * n, table) == euler_phi(m, table) * euler_phi(n, table)
        assert tau(m * n, table) == tau(m, table) * tau(n, table)
        assert tau3(m * n, table) == tau3(m, table) * tau3(n, table)
        for P in (2, 3, 5, 30):
            assert smooth_part(m * n, P, table) == smooth_part(m, P, table) * smooth_part(n, P, table)


def test_divisor_sum_identities(table):
    phi = table.phi_table
    mu = table.mobius_table
    t = table.tau_table
    t3 = table.tau3_table()
    for n in range(1, 10001):
        ds = table.divisors(n)
        assert int(phi[ds].sum()) == n
        assert int(mu[ds].sum()) == (1 if n == 1 else 0)
        assert int(t3[n]) == int(t[ds].sum())


def test_smooth_part_is_largest_smooth_divisor(table):
    for P in (2, 3, 5, 30):
        sm = table.smooth_part_table(P)
        for n in range(1, 10001):
            best = max(d for d in table.divisors(n) if table.lpf[d] <= P) if n > 1 else 1
            assert sm[n] == best == smooth_part(n, P, table)


def test_tables_agree_with_scalar_functions(table):
    t5 = table.tau3_table(5)
    for n in range(1, 3001):
        assert table.phi_table[n] == euler_phi(n, table)
        assert table.mobius_table[n] == mobius(n, table)
        assert t5[n] == tau3(n, table, 5)
    for n in range(1, 501):
        assert euler_phi(n, table) == oracles.phi(n)
        assert mobius(n, table) == oracles.mobius(n)


@given(st.integers(1, 20000), st.sampled_from([2, 3, 7, 50]))
def test_truncated_tau3_divides_full(table, n, P):
    full = tau3(n, table)
    trunc = tau3(n, table, P)
    assert trunc <= full
    rough = n // smooth_part(n, P, table)
    assert trunc == tau3(n // rough, table)


def test_threshold_validation(table):
    with pytest.raises(ValueError):
        tau3(10, table, prime_threshold=1)


def test_memory_cap(monkeypatch):
    monkeypatch.setenv("BDH_LAB_MAX_MEMORY_MB", "1")
    with pytest.raises(ResourceLimitError):
        build_factor_table(10**6)
