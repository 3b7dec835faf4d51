"""Pure-Python (numpy) implementations of the hot kernels.

Semantics must match ``_kernels.pyx`` exactly, including tie-breaking, so
either backend can be swapped in without changing any attack outcome.
"""

from itertools import permutations

import numpy as np


class UnionFind:
    """Disjoint sets with path halving; the root is always the smallest index."""

    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if rb < ra:
            ra, rb = rb, ra
        self.parent[rb] = ra
        return ra

    def labels(self):
        return np.array([self.find(i) for i in range(len(self.parent))], dtype=np.int64)


def threshold_components(cov, threshold):
    """Declare edge (i, j), i < j, iff |cov[i, j]| >= threshold.

    Returns ``(edges, labels)``: an (E, 2) int64 array in row-major pair
    order and, per node, the smallest index of its connected component.
    """
    cov = np.asarray(cov, dtype=np.float64)
    n = cov.shape[0]
    iu, ju = np.triu_indices(n, k=1)
    hit = np.abs(cov[iu, ju]) >= threshold
    edges = np.stack([iu[hit], ju[hit]], axis=1).astype(np.int64)
    uf = UnionFind(n)
    for i, j in edges.tolist():
        uf.union(i, j)
    return edges.reshape(-1, 2), uf.labels()


def perm_distances(a_means, a_corr, b_means, b_corr):
    """Min over relabelings of the infinity-norm fingerprint gap, per candidate.

    ``a_*`` describe one fingerprint of size s (correlations in the strict
    upper triangle); ``b_*`` stack k candidates. Candidate member ``pi[i]``
    is matched to target member ``i``. Permutations are scanned in
    lexicographic order and only a strict improvement replaces the best, so
    ties go to the lexicographically smallest permutation.
    """
    a_means = np.asarray(a_means, dtype=np.float64)
    a_corr = np.asarray(a_corr, dtype=np.float64)
    b_means = np.asarray(b_means, dtype=np.float64)
    b_corr = np.asarray(b_corr, dtype=np.float64)
    s = a_means.shape[0]
    k = b_means.shape[0]
    iu, ju = np.triu_indices(s, k=1)
    a_tri = a_corr[iu, ju]
    b_sym = np.triu(b_corr, k=1)
    b_sym = b_sym + np.swapaxes(b_sym, 1, 2)

    best = np.full(k, np.inf)
    best_perm = np.zeros((k, s), dtype=np.int64)
    for perm in permutations(range(s)):
        p = np.asarray(perm)
        d = np.abs(b_means[:, p] - a_means).max(axis=1)
        if iu.size:
            d = np.maximum(d, np.abs(b_sym[:, p[iu], p[ju]] - a_tri).max(axis=1))
        better = d < best
        best[better] = d[better]
        best_perm[better] = p
    return best, best_perm
