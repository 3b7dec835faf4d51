"""Both kernel backends against each other and against loop-level oracles."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gauss_deanon import _kernels_py, kernels
from gauss_deanon.core import connected_components

from oracles import brute_distance, tri_index

BACKENDS = [pytest.param(_kernels_py, id="python")]
if kernels.compiled is not None:
    BACKENDS.append(pytest.param(kernels.compiled, id="cython"))


def _fp_arrays(flat, s):
    means = np.asarray(flat[:s], dtype=float)
    corr = np.zeros((s, s))
    for (i, j), k in tri_index(s).items():
        corr[i, j] = flat[k]
    return means, corr


@pytest.mark.parametrize("impl", BACKENDS)
class TestPermDistances:
    def test_swap_example(self, impl):
        am, ac = _fp_arrays([0.2, 0.4, 0.58], 2)
        bm, bc = _fp_arrays([0.4, 0.25, 0.58], 2)
        d, p = impl.perm_distances(am, ac, bm[None], bc[None])
        assert d[0] == pytest.approx(0.05)
        assert p[0].tolist() == [1, 0]

    def test_identical_is_zero_identity(self, impl):
        rng = np.random.default_rng(0)
        am, ac = rng.random(4), np.triu(rng.random((4, 4)), 1)
        d, p = impl.perm_distances(am, ac, am[None], ac[None])
        assert d[0] == 0.0
        assert p[0].tolist() == [0, 1, 2, 3]

    def test_tie_goes_to_lexicographic_first(self, impl):
        am, ac = np.array([0.5, 0.5, 0.5]), np.zeros((3, 3))
        d, p = impl.perm_distances(am, ac, am[None], ac[None])
        assert p[0].tolist() == [0, 1, 2]

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 5), st.integers(1, 4), st.integers(0, 2**32))
    def test_matches_brute_force(self, impl, s, k, seed):
        rng = np.random.default_rng(seed)
        L = s * (s + 1) // 2
        # coarse grid values so ties actually happen
        flat_a = rng.integers(0, 4, L) / 4
        flat_bs = rng.integers(0, 4, (k, L)) / 4
        am, ac = _fp_arrays(flat_a, s)
        bms, bcs = zip(*(_fp_arrays(fb, s) for fb in flat_bs))
        d, p = impl.perm_distances(am, ac, np.array(bms), np.array(bcs))
        for c in range(k):
            bd, bp = brute_distance(flat_a, flat_bs[c], s)
            assert d[c] == bd
            assert tuple(p[c]) == bp


@pytest.mark.parametrize("impl", BACKENDS)
class TestThresholdComponents:
    def test_boundary_inclusive(self, impl):
        cov = np.array([[1.0, 0.5], [0.5, 1.0]])
        edges, labels = impl.threshold_components(cov, 0.5)
        assert edges.tolist() == [[0, 1]]
        assert labels.tolist() == [0, 0]

    def test_empty(self, impl):
        edges, labels = impl.threshold_components(np.eye(4), 0.1)
        assert edges.shape == (0, 2)
        assert labels.tolist() == [0, 1, 2, 3]

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.float64, (9, 9), elements=st.floats(-1, 1)), st.floats(0.01, 0.99))
    def test_matches_naive(self, impl, a, thr):
        cov = (a + a.T) / 2
        edges, labels = impl.threshold_components(cov, thr)
        naive = [(i, j) for i in range(9) for j in range(i + 1, 9) if abs(cov[i, j]) >= thr]
        assert [tuple(e) for e in edges.tolist()] == naive
        comps = connected_components(9, naive)
        expected = np.empty(9, dtype=np.int64)
        for comp in comps:
            expected[comp] = comp[0]
        assert labels.tolist() == expected.tolist()


@pytest.mark.skipif(kernels.compiled is None, reason="compiled kernels not built")
@settings(max_examples=40, deadline=None)
@given(st.integers(1, 7), st.integers(1, 6), st.integers(0, 2**32))
def test_backends_agree_exactly(s, k, seed):
    rng = np.random.default_rng(seed)
    am, ac = rng.random(s), np.triu(rng.random((s, s)), 1)
    bm, bc = rng.random((k, s)), np.triu(rng.random((k, s, s)), 1)
    d1, p1 = _kernels_py.perm_distances(am, ac, bm, bc)
    d2, p2 = kernels.compiled.perm_distances(am, ac, bm, bc)
    assert np.array_equal(d1, d2)
    assert np.array_equal(p1, p2)


def test_backend_selected():
    assert kernels.BACKEND in ("cython", "python")
