"""Domain types shared by the generator, anonymizer, adversary and harness.

All containers are frozen dataclasses holding read-only numpy arrays, so a
population or trace set can be handed to worker processes without copies
being mutated behind anyone's back.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

Edge = Tuple[int, int]


class Regime(str, enum.Enum):
    """How much the adversary knows about the dependency structure."""

    FULL_KNOWLEDGE = "full_knowledge"
    STRUCTURE_ONLY = "structure_only"
    INDEPENDENT = "independent"

    @classmethod
    def parse(cls, value: "str | Regime") -> "Regime":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            valid = ", ".join(r.value for r in cls)
            raise ValueError(f"unknown regime {value!r} (expected one of: {valid})") from None


def _frozen(arr, dtype=float) -> np.ndarray:
    out = np.array(arr, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


def canonical_edge(u: int, v: int) -> Edge:
    u, v = int(u), int(v)
    if u == v:
        raise ValueError(f"self-loop ({u}, {u}) is not a valid edge")
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class AssociationGraph:
    """Disjoint connected groups of users plus the edges inside them."""

    num_users: int
    groups: Tuple[Tuple[int, ...], ...]
    edges: frozenset

    def __init__(self, num_users: int, groups: Sequence[Sequence[int]], edges=()):
        object.__setattr__(self, "num_users", int(num_users))
        object.__setattr__(self, "groups", tuple(tuple(int(u) for u in g) for g in groups))
        object.__setattr__(self, "edges", frozenset(canonical_edge(u, v) for u, v in edges))
        self._validate()

    def _validate(self) -> None:
        n = self.num_users
        if n < 1:
            raise ValueError("num_users must be positive")
        owner = np.full(n, -1, dtype=np.int64)
        for j, group in enumerate(self.groups):
            if not group:
                raise ValueError(f"group {j} is empty")
            for u in group:
                if not 0 <= u < n:
                    raise ValueError(f"user {u} out of range [0, {n})")
                if owner[u] >= 0:
                    raise ValueError(f"user {u} appears in more than one group")
                owner[u] = j
        if (owner < 0).any():
            missing = np.flatnonzero(owner < 0).tolist()
            raise ValueError(f"users {missing} belong to no group")
        for u, v in self.edges:
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) out of range")
            if owner[u] != owner[v]:
                raise ValueError(f"edge ({u}, {v}) crosses groups")
        for group in self.groups:
            if not _is_connected(group, self.edges):
                raise ValueError(f"group {list(group)} is not connected by its edges")

    @property
    def group_of(self) -> Dict[int, int]:
        return {u: j for j, g in enumerate(self.groups) for u in g}

    def group_containing(self, user: int) -> Tuple[int, ...]:
        for g in self.groups:
            if user in g:
                return g
        raise KeyError(user)

    @classmethod
    def from_edges(cls, num_users: int, edges) -> "AssociationGraph":
        """Groups are the connected components of ``edges`` (singletons included)."""
        groups = connected_components(num_users, edges)
        return cls(num_users, groups, edges)


def _is_connected(group: Sequence[int], edges) -> bool:
    if len(group) == 1:
        return True
    members = set(group)
    adj: Dict[int, List[int]] = {u: [] for u in members}
    for u, v in edges:
        if u in members:
            adj[u].append(v)
            adj[v].append(u)
    seen = {group[0]}
    stack = [group[0]]
    while stack:
        for w in adj[stack.pop()]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == len(members)


def connected_components(num_users: int, edges) -> List[List[int]]:
    """Components sorted by smallest member, members ascending."""
    parent = list(range(num_users))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            if ru < rv:
                parent[rv] = ru
            else:
                parent[ru] = rv
    comps: Dict[int, List[int]] = {}
    for u in range(num_users):
        comps.setdefault(find(u), []).append(u)
    return sorted(comps.values(), key=lambda c: c[0])


@dataclass(frozen=True)
class PopulationParams:
    """Ground truth: means, edge correlation coefficients and common variance.

    Correlations are stored as coefficients rho; the second moment
    ``E[X_u X_v] = rho * sigma2 + mu_u * mu_v`` is derived on demand.
    """

    graph: AssociationGraph
    means: np.ndarray
    correlation_coeffs: Dict[Edge, float]
    sigma2: float = 1.0
    density_bounds: Tuple[float, float] = (1.0, 1.0)

    def __post_init__(self):
        object.__setattr__(self, "means", _frozen(self.means))
        rho = {canonical_edge(*e): float(r) for e, r in self.correlation_coeffs.items()}
        object.__setattr__(self, "correlation_coeffs", rho)
        n = self.graph.num_users
        if self.means.shape != (n,):
            raise ValueError(f"expected {n} means, got shape {self.means.shape}")
        if not np.all((self.means > 0) & (self.means < 1)):
            raise ValueError("means must lie in the open interval (0, 1)")
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")
        if set(rho) != set(self.graph.edges):
            raise ValueError("correlation_coeffs must have exactly one entry per graph edge")
        for e, r in rho.items():
            if r == 0 or abs(r) > 1 or not math.isfinite(r):
                raise ValueError(f"edge {e} has invalid correlation coefficient {r}")
        d1, d2 = self.density_bounds
        if not 0 < d1 <= d2:
            raise ValueError("density_bounds must satisfy 0 < delta1 <= delta2")

    @property
    def n(self) -> int:
        return self.graph.num_users

    def rho(self, u: int, v: int) -> float:
        """Correlation coefficient, zero for non-edges."""
        return self.correlation_coeffs.get(canonical_edge(u, v), 0.0)

    def second_moment(self, u: int, v: int) -> float:
        return self.rho(u, v) * self.sigma2 + float(self.means[u]) * float(self.means[v])

    def group_block(self, group: Sequence[int]) -> np.ndarray:
        s = len(group)
        block = np.eye(s) * self.sigma2
        for i in range(s):
            for j in range(i + 1, s):
                c = self.rho(group[i], group[j]) * self.sigma2
                block[i, j] = block[j, i] = c
        return block

    def with_correlations(self, coeffs: Dict[Edge, float]) -> "PopulationParams":
        return PopulationParams(self.graph, self.means, coeffs, self.sigma2, self.density_bounds)


@dataclass(frozen=True)
class TraceSet:
    """Row ``u`` holds user ``u``'s m observations."""

    data: np.ndarray

    def __post_init__(self):
        data = _frozen(self.data)
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise ValueError(f"trace data must be a non-empty 2-D matrix, got shape {data.shape}")
        if not np.isfinite(data).all():
            raise ValueError("trace data contains non-finite entries")
        object.__setattr__(self, "data", data)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def m(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class AnonymizedTraceSet(TraceSet):
    """Row ``v`` holds the trace reported under pseudonym ``v``."""


@dataclass(frozen=True)
class Permutation:
    """Anonymization mapping: user ``u`` is reported as row ``forward[u]``."""

    forward: np.ndarray
    inverse: np.ndarray = field(default=None)

    def __post_init__(self):
        fwd = _frozen(self.forward, dtype=np.int64)
        n = fwd.shape[0]
        if fwd.ndim != 1 or n < 1 or not np.array_equal(np.sort(fwd), np.arange(n)):
            raise ValueError("forward must be a permutation of 0..n-1")
        inv = np.empty(n, dtype=np.int64)
        inv[fwd] = np.arange(n)
        if self.inverse is not None and not np.array_equal(np.asarray(self.inverse), inv):
            raise ValueError("inverse does not invert forward")
        inv.setflags(write=False)
        object.__setattr__(self, "forward", fwd)
        object.__setattr__(self, "inverse", inv)

    @property
    def n(self) -> int:
        return self.forward.shape[0]

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(np.arange(n))


@dataclass(frozen=True)
class Fingerprint:
    """A group's means and pairwise second moments.

    ``correlations`` is an s x s array whose strict upper triangle carries
    the second moments; everything on or below the diagonal is zero.
    """

    means: np.ndarray
    correlations: np.ndarray

    def __post_init__(self):
        means = _frozen(self.means)
        s = means.shape[0]
        corr = np.triu(np.asarray(self.correlations, dtype=float).reshape(s, s), k=1)
        corr.setflags(write=False)
        if means.ndim != 1 or s < 1:
            raise ValueError("fingerprint needs at least one mean")
        if not (np.isfinite(means).all() and np.isfinite(corr).all()):
            raise ValueError("fingerprint entries must be finite")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "correlations", corr)

    @property
    def size(self) -> int:
        return self.means.shape[0]

    def flatten(self) -> np.ndarray:
        """Means followed by the upper triangle row by row; length s(s+1)/2."""
        iu = np.triu_indices(self.size, k=1)
        return np.concatenate([self.means, self.correlations[iu]])

    @classmethod
    def from_flat(cls, flat: Sequence[float]) -> "Fingerprint":
        flat = np.asarray(flat, dtype=float)
        s = int(round((math.sqrt(8 * flat.size + 1) - 1) / 2))
        if s * (s + 1) // 2 != flat.size:
            raise ValueError(f"length {flat.size} is not a triangular number")
        corr = np.zeros((s, s))
        corr[np.triu_indices(s, k=1)] = flat[s:]
        return cls(flat[:s], corr)

    def means_only(self) -> "Fingerprint":
        return Fingerprint(self.means, np.zeros((self.size, self.size)))


@dataclass(frozen=True)
class AttackConfig:
    alpha: float = 1.0
    c_const: float = 1.0
    regime: Regime = Regime.FULL_KNOWLEDGE
    edge_threshold_exponent: float = -0.2
    max_group_size_for_matching: int = 8

    def __post_init__(self):
        object.__setattr__(self, "regime", Regime.parse(self.regime))
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not self.c_const > 0:
            raise ValueError("c_const must be positive")
        if self.max_group_size_for_matching < 1:
            raise ValueError("max_group_size_for_matching must be at least 1")


def _check_ns(n, s):
    if not (isinstance(n, (int, np.integer)) and n >= 1):
        raise ValueError(f"n must be a positive integer, got {n!r}")
    if not (isinstance(s, (int, np.integer)) and s >= 1):
        raise ValueError(f"s must be a positive integer, got {s!r}")


def delta_n(n: int, s: int, alpha: float) -> float:
    """Acceptance radius n^(-2/(s(s+1)) - alpha/4) for group and user matching."""
    _check_ns(n, s)
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha!r}")
    return float(n) ** (-2.0 / (s * (s + 1)) - alpha / 4.0)


def delta_structure(n: int, s: int, alpha: float) -> float:
    """Means-only radius n^(-1/s - alpha/4) for the structure-only adversary."""
    _check_ns(n, s)
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha!r}")
    return float(n) ** (-1.0 / s - alpha / 4.0)


def delta_independent(n: int, alpha: float) -> float:
    _check_ns(n, 1)
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha!r}")
    return float(n) ** (-1.0 - alpha / 4.0)


def regime_exponent(s: int, alpha: float, regime) -> float:
    regime = Regime.parse(regime)
    if regime is Regime.FULL_KNOWLEDGE:
        return 4.0 / (s * (s + 1)) + alpha
    if regime is Regime.STRUCTURE_ONLY:
        return 2.0 / s + alpha
    return 2.0 + alpha


# pow() may land a hair above an exact integer (100 ** 1.5 and friends)
_INT_SNAP = 1e-12


def required_m(n: int, s: int, alpha: float, c: float = 1.0, regime=Regime.FULL_KNOWLEDGE) -> int:
    """Observations per user, ceil(c * n^e), at which the regime's attack succeeds."""
    _check_ns(n, s)
    if alpha < 0:
        raise ValueError(f"alpha must be non-negative, got {alpha!r}")
    if not c > 0:
        raise ValueError(f"c must be positive, got {c!r}")
    x = c * float(n) ** regime_exponent(s, alpha, regime)
    k = round(x)
    if abs(x - k) <= _INT_SNAP * max(1.0, abs(x)):
        return max(1, int(k))
    return max(1, math.ceil(x))


def edge_threshold(m: int, exponent: float = -0.2) -> float:
    if not (isinstance(m, (int, np.integer)) and m >= 1):
        raise ValueError(f"m must be a positive integer, got {m!r}")
    return float(m) ** exponent
