"""Anonymization by a uniformly random relabeling of user rows."""

import numpy as np

from .core import AnonymizedTraceSet, Permutation, TraceSet


def sample_permutation(n: int, seed: int) -> Permutation:
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    # Generator.permutation is a seeded Fisher-Yates shuffle
    return Permutation(rng.permutation(n))


def anonymize(x: TraceSet, p: Permutation) -> AnonymizedTraceSet:
    """Row ``p.forward[u]`` of the output is row ``u`` of ``x``."""
    if p.n != x.n:
        raise ValueError(f"permutation covers {p.n} users but trace set has {x.n}")
    return AnonymizedTraceSet(x.data[p.inverse])


def deanonymize(y: AnonymizedTraceSet, p: Permutation) -> TraceSet:
    if p.n != y.n:
        raise ValueError(f"permutation covers {p.n} users but trace set has {y.n}")
    return TraceSet(y.data[p.forward])
