from collections import Counter

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gauss_deanon.anonymizer import anonymize, deanonymize, sample_permutation
from gauss_deanon.core import Permutation, TraceSet


def test_n1_identity():
    assert sample_permutation(1, 123).forward.tolist() == [0]


@given(st.integers(1, 50), st.integers(0, 2**63))
def test_bijection_and_determinism(n, seed):
    p = sample_permutation(n, seed)
    assert sorted(p.forward.tolist()) == list(range(n))
    assert np.array_equal(p.forward, sample_permutation(n, seed).forward)


def test_uniform_over_s3():
    counts = Counter(tuple(sample_permutation(3, seed).forward) for seed in range(60_000))
    assert len(counts) == 6
    for c in counts.values():
        assert abs(c / 60_000 - 1 / 6) < 0.01


def test_identity_is_noop():
    x = TraceSet(np.arange(12.0).reshape(4, 3))
    assert np.array_equal(anonymize(x, Permutation.identity(4)).data, x.data)


def test_swap():
    x = TraceSet(np.array([[1.0, 2.0], [3.0, 4.0]]))
    y = anonymize(x, Permutation(np.array([1, 0])))
    assert y.data.tolist() == [[3.0, 4.0], [1.0, 2.0]]


@given(st.integers(1, 20), st.integers(0, 2**32))
def test_round_trip_and_row_placement(n, seed):
    rng = np.random.default_rng(seed)
    x = TraceSet(rng.standard_normal((n, 7)))
    p = sample_permutation(n, seed)
    y = anonymize(x, p)
    for u in range(n):
        assert np.array_equal(y.data[p.forward[u]], x.data[u])
    assert np.array_equal(deanonymize(y, p).data, x.data)
    assert np.array_equal(y.data[p.forward], x.data)
    assert sorted(map(tuple, y.data)) == sorted(map(tuple, x.data))


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        anonymize(TraceSet(np.zeros((3, 2))), Permutation.identity(2))
