import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bdhlab.sequences import (average_gcd_class, count_progression, from_weights, generate,
                              multiple_sum_table, read_weight_file)
from bdhlab.sieves import build_factor_table


def ones_at(seq):
    return [n for n, w in enumerate(seq.weights, 1) if w]


def test_generator_examples():
    assert generate("integers", 5).weights.tolist() == [1, 1, 1, 1, 1]
    assert ones_at(generate("smooth_indicator", 10, y=3)) == [1, 2, 3, 4, 6, 8, 9]
    assert ones_at(generate("multiples_indicator", 10, p=3)) == [3, 6, 9]


def test_generator_errors():
    with pytest.raises(ValueError):
        generate("multiples_indicator", 10, p=4)
    with pytest.raises(ValueError):
        generate("bernoulli", 10, alpha=1.5, seed=1)
    with pytest.raises(ValueError):
        generate("bernoulli", 10, alpha=0.5)
    with pytest.raises(ValueError):
        generate("integers", 1.5)
    with pytest.raises(ValueError):
        generate("nonsense", 10)


def test_length_and_exactness():
    s = generate("integers", 10.7)
    assert s.n == 10 and s.exact
    assert not generate("von_mangoldt", 10).exact
    for kind, kw in [("smooth_indicator", {"y": 5}), ("multiples_indicator", {"p": 2}),
                     ("bernoulli", {"alpha": 0.3, "seed": 4})]:
        w = generate(kind, 300, **kw).weights
        assert w.dtype.kind == "i" and set(np.unique(w).tolist()) <= {0, 1}


def test_bernoulli_reproducible():
    a = generate("bernoulli", 1000, alpha=0.2, seed=11)
    b = generate("bernoulli", 1000, alpha=0.2, seed=11)
    c = generate("bernoulli", 1000, alpha=0.2, seed=12)
    assert np.array_equal(a.weights, b.weights)
    assert not np.array_equal(a.weights, c.weights)


def test_weights_are_read_only():
    s = generate("integers", 10)
    with pytest.raises(ValueError):
        s.weights[0] = 5


def test_counting_examples():
    N = generate("integers", 10)
    assert count_progression(N, 10, 4, 1) == 3
    assert count_progression(N, 0.5, 4, 1) == 0
    assert count_progression(generate("smooth_indicator", 10, y=3), 10, 4, 2) == 2
    assert average_gcd_class(N, 10, 4, 1) == Fraction(5, 2)
    assert average_gcd_class(N, 10, 4, 4) == 2
    assert average_gcd_class(from_weights([0] * 10), 10, 4, 2) == 0
    with pytest.raises(ValueError):
        count_progression(N, 10, 4, 5)
    with pytest.raises(ValueError):
        average_gcd_class(N, 10, 4, 3)


def test_multiple_sum_examples():
    M = multiple_sum_table(generate("integers", 10))
    assert M[3] == 3 and M[1] == 10
    assert len(M) == 11  # entries beyond x do not exist, hence are zero


@given(st.integers(2, 400), st.integers(1, 60), st.floats(1, 400), st.integers(0, 10**6))
def test_residue_and_gcd_partitions(x, q, z, seed):
    seq = generate("bernoulli", x, alpha=0.4, seed=seed)
    total = int(seq.weights[: min(math.floor(z), seq.n)].sum())
    assert sum(count_progression(seq, z, q, a) for a in range(1, q + 1)) == total
    t = build_factor_table(max(q, 2))
    parts = sum(t.phi_table[q // h] * average_gcd_class(seq, z, q, h) for h in t.divisors(q))
    assert parts == total


def test_multiple_sum_against_direct():
    rng = random.Random(5)
    for _ in range(50):
        x = rng.randint(2, 2000)
        seq = generate("bernoulli", x, alpha=rng.random() * 0.9 + 0.05, seed=rng.randint(0, 99))
        M = multiple_sum_table(seq)
        k = rng.randint(1, x)
        assert M[k] == sum(int(seq.weights[n - 1]) for n in range(k, x + 1, k))


def test_von_mangoldt_divisor_sum(table):
    lam = generate("von_mangoldt", 10**4, table).weights
    for n in range(1, 10**4 + 1):
        s = math.fsum(lam[d - 1] for d in table.divisors(n))
        assert abs(s - math.log(n)) <= 1e-9


def test_weight_file_round_trip(tmp_path):
    p = tmp_path / "w.txt"
    p.write_text("1\n0\n2\n-1\n\nignored\n")
    s = read_weight_file(p)
    assert s.weights.tolist() == [1, 0, 2, -1] and s.exact
    p.write_text("0.5\n1.25\n")
    assert read_weight_file(p).weights.tolist() == [0.5, 1.25]
    p.write_text("1\nabc\n")
    with pytest.raises(ValueError, match=":2:"):
        read_weight_file(p)


def test_from_weights_integral_floats_go_exact():
    assert from_weights([1.0, 2.0, 0.0]).exact
    assert not from_weights([1.5, 2.0]).exact
