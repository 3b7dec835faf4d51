"""Ground-truth populations and i.i.d. Gaussian trace matrices."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .core import AssociationGraph, Edge, PopulationParams, TraceSet

TOPOLOGIES = ("complete_group", "spanning_tree_plus")


class PSDRetryExhausted(RuntimeError):
    """A group's correlation block stayed indefinite after every resample."""


class FactorizationFailure(RuntimeError):
    """A covariance block could not be Cholesky factorized."""


@dataclass(frozen=True)
class GeneratorConfig:
    n: int
    group_sizes: Optional[Tuple[int, ...]] = None
    s: int = 1
    rho_range: Tuple[float, float] = (0.3, 0.6)
    mean_interval: Tuple[float, float] = (0.0, 1.0)
    sigma2: float = 1.0
    topology: str = "complete_group"
    psd_min_eigenvalue: float = 1e-9
    max_psd_retries: int = 100
    extra_edge_prob: float = 0.5
    allow_negative: bool = False
    fixed_means: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if self.group_sizes is None:
            if self.s < 1 or self.n % self.s:
                raise ValueError(f"n={self.n} is not a multiple of group size s={self.s}")
            object.__setattr__(self, "group_sizes", (self.s,) * (self.n // self.s))
        else:
            object.__setattr__(self, "group_sizes", tuple(int(g) for g in self.group_sizes))
        if any(g < 1 for g in self.group_sizes) or sum(self.group_sizes) != self.n:
            raise ValueError(f"group sizes {list(self.group_sizes)} must be positive and sum to n={self.n}")
        lo, hi = self.rho_range
        if not 0 < lo <= hi < 1:
            raise ValueError(f"rho_range must satisfy 0 < lo <= hi < 1, got {self.rho_range}")
        a, b = self.mean_interval
        if not 0 <= a < b <= 1:
            raise ValueError(f"mean_interval must be a sub-interval of (0, 1), got {self.mean_interval}")
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")
        if self.topology not in TOPOLOGIES:
            raise ValueError(f"unknown topology {self.topology!r}; expected one of {TOPOLOGIES}")
        if not self.psd_min_eigenvalue > 0 or self.max_psd_retries < 1:
            raise ValueError("psd_min_eigenvalue must be positive and max_psd_retries >= 1")
        if self.fixed_means is not None and len(self.fixed_means) != self.n:
            raise ValueError("fixed_means must have one entry per user")


def group_layout(group_sizes: Sequence[int]) -> List[Tuple[int, ...]]:
    """Consecutive index blocks, one per group."""
    groups, start = [], 0
    for size in group_sizes:
        groups.append(tuple(range(start, start + size)))
        start += size
    return groups


def _group_edges(group: Tuple[int, ...], topology: str, extra_p: float, rng) -> List[Edge]:
    s = len(group)
    if s == 1:
        return []
    if topology == "complete_group":
        return [(group[i], group[j]) for i in range(s) for j in range(i + 1, s)]
    # random recursive tree keeps the group connected; extras sprinkled on top
    edges = set()
    for i in range(1, s):
        j = int(rng.integers(0, i))
        edges.add((group[j], group[i]))
    for i in range(s):
        for j in range(i + 1, s):
            e = (group[i], group[j])
            if e not in edges and rng.random() < extra_p:
                edges.add(e)
    return sorted(edges)


def _min_eigenvalue(edges, group, rho, sigma2) -> float:
    pos = {u: i for i, u in enumerate(group)}
    block = np.eye(len(group)) * sigma2
    for (u, v), r in zip(edges, rho):
        block[pos[u], pos[v]] = block[pos[v], pos[u]] = r * sigma2
    return float(np.linalg.eigvalsh(block)[0])


def sample_population(cfg: GeneratorConfig, seed: int) -> PopulationParams:
    rng = np.random.default_rng(seed)
    groups = group_layout(cfg.group_sizes)
    if cfg.fixed_means is not None:
        means = np.asarray(cfg.fixed_means, dtype=float)
    else:
        lo, hi = cfg.mean_interval
        means = rng.uniform(lo, hi, size=cfg.n)
        # uniform() is half-open on the left; keep strictly inside (0, 1)
        means = np.where(means <= 0.0, np.nextafter(0.0, 1.0), means)

    coeffs: Dict[Edge, float] = {}
    all_edges: List[Edge] = []
    rho_lo, rho_hi = cfg.rho_range
    for group in groups:
        edges = _group_edges(group, cfg.topology, cfg.extra_edge_prob, rng)
        if not edges:
            continue
        for _ in range(cfg.max_psd_retries):
            rho = rng.uniform(rho_lo, rho_hi, size=len(edges))
            if cfg.allow_negative:
                rho = rho * rng.choice([-1.0, 1.0], size=len(edges))
            if _min_eigenvalue(edges, group, rho, cfg.sigma2) >= cfg.psd_min_eigenvalue * cfg.sigma2:
                break
        else:
            raise PSDRetryExhausted(
                f"group {list(group)}: no PSD correlation draw in {cfg.max_psd_retries} attempts "
                f"with rho_range={cfg.rho_range}"
            )
        coeffs.update({e: float(r) for e, r in zip(edges, rho)})
        all_edges.extend(edges)

    graph = AssociationGraph(cfg.n, groups, all_edges)
    return PopulationParams(graph, means, coeffs, cfg.sigma2)


def build_covariance(p: PopulationParams) -> np.ndarray:
    n = p.n
    cov = np.eye(n) * p.sigma2
    for (u, v), r in p.correlation_coeffs.items():
        cov[u, v] = cov[v, u] = r * p.sigma2
    return cov


def group_factors(p: PopulationParams) -> List[np.ndarray]:
    """Lower Cholesky factor of every group block, in group order."""
    factors = []
    for group in p.graph.groups:
        block = p.group_block(group)
        try:
            factors.append(np.linalg.cholesky(block))
        except np.linalg.LinAlgError as exc:
            raise FactorizationFailure(f"group {list(group)} covariance is not positive definite") from exc
    return factors


def sample_traces(p: PopulationParams, m: int, seed: int, factors=None) -> TraceSet:
    """Draw m i.i.d. columns from N(means, covariance), one block per group."""
    if m < 1:
        raise ValueError("m must be at least 1")
    if factors is None:
        factors = group_factors(p)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((p.n, m))
    x = np.empty_like(z)
    for group, L in zip(p.graph.groups, factors):
        idx = list(group)
        if len(idx) == 1:
            x[idx[0]] = L[0, 0] * z[idx[0]]
        else:
            x[idx] = L @ z[idx]
    x += p.means[:, None]
    return TraceSet(x)
