"""The statistical-matching attack on anonymized Gaussian traces.

Pipeline for the full-knowledge adversary:

1. estimate every pairwise covariance and keep the pairs whose magnitude
   clears ``m ** -1/5``; the connected components are candidate groups;
2. among components with the target group's size, pick the one whose
   empirical fingerprint is closest (up to member relabeling) to the
   target group's true fingerprint, accepting it only inside ``delta_n``;
3. inside that component, pick the row whose empirical mean falls in the
   ``delta_n`` ball around the target's mean.

The structure-only adversary runs the same pipeline on means alone with a
wider radius; the independent baseline just takes the nearest mean.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import kernels
from .core import (
    AnonymizedTraceSet,
    AttackConfig,
    Fingerprint,
    Permutation,
    PopulationParams,
    Regime,
    delta_independent,
    delta_n,
    delta_structure,
    edge_threshold,
)


class NoCandidateError(Exception):
    """No group or user fell inside the acceptance radius."""

    def __init__(self, stage: str, detail: str = ""):
        super().__init__(f"no candidate at {stage} stage" + (f": {detail}" if detail else ""))
        self.stage = stage


class GroupTooLargeError(ValueError):
    pass


@dataclass(frozen=True)
class AdversaryKnowledge:
    regime: Regime
    population: PopulationParams
    target_user: int = 0

    def __post_init__(self):
        object.__setattr__(self, "regime", Regime.parse(self.regime))
        if not 0 <= self.target_user < self.population.n:
            raise ValueError(f"target_user {self.target_user} out of range")


@dataclass(frozen=True)
class ReconstructedGraph:
    num_users: int
    edges: frozenset
    groups: Tuple[Tuple[int, ...], ...]


@dataclass
class GroupMatch:
    members: Tuple[int, ...]
    permutation: Tuple[int, ...]
    distance: float
    in_radius: int

    @property
    def ambiguous(self) -> bool:
        return self.in_radius > 1


@dataclass
class UserMatch:
    index: int
    distance: float
    in_radius: int

    @property
    def ambiguous(self) -> bool:
        return self.in_radius > 1


@dataclass
class AttackResult:
    """Outcome of one attack.

    ``identified_index`` is None exactly when ``failure`` names the reason.
    ``truth_index``/``success`` are only filled in when the caller supplies
    the true permutation for scoring.
    """

    identified_index: Optional[int]
    failure: Optional[str] = None
    truth_index: Optional[int] = None
    success: Optional[bool] = None
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    @property
    def ambiguous(self) -> bool:
        return bool(self.diagnostics.get("group_ambiguous") or self.diagnostics.get("user_ambiguous"))

    def score(self, permutation: Permutation, target_user: int) -> "AttackResult":
        self.truth_index = int(permutation.forward[target_user])
        self.success = self.identified_index is not None and self.identified_index == self.truth_index
        return self

    def to_dict(self) -> Dict[str, Any]:
        return {
            "identified_index": self.identified_index,
            "failure": self.failure,
            "truth_index": self.truth_index,
            "success": self.success,
            "ambiguous": self.ambiguous,
            "diagnostics": dict(self.diagnostics),
        }


def empirical_mean(row) -> float:
    row = np.asarray(row, dtype=float)
    if row.size == 0:
        raise ValueError("empirical_mean of an empty row")
    return float(row.sum() / row.size)


def empirical_covariance(row_u, row_v) -> float:
    """Biased (1/m) estimator S_uv/m - (S_u/m)(S_v/m)."""
    row_u = np.asarray(row_u, dtype=float)
    row_v = np.asarray(row_v, dtype=float)
    if row_u.shape != row_v.shape:
        raise ValueError(f"row length mismatch: {row_u.shape} vs {row_v.shape}")
    m = row_u.size
    if m == 0:
        raise ValueError("empirical_covariance of empty rows")
    return float(np.dot(row_u, row_v) / m - (row_u.sum() / m) * (row_v.sum() / m))


def empirical_moments(y: AnonymizedTraceSet) -> Tuple[np.ndarray, np.ndarray]:
    """All row means and the full matrix of second moments S_uv / m."""
    data = y.data
    m = data.shape[1]
    means = data.sum(axis=1) / m
    second = (data @ data.T) / m
    return means, second


def covariance_matrix(means: np.ndarray, second: np.ndarray) -> np.ndarray:
    return second - np.outer(means, means)


def reconstruct_graph(y: AnonymizedTraceSet, threshold: float, moments=None) -> ReconstructedGraph:
    """Edges where |empirical covariance| >= threshold, grouped into components."""
    means, second = moments if moments is not None else empirical_moments(y)
    edges, labels = kernels.threshold_components(covariance_matrix(means, second), threshold)
    comps: Dict[int, List[int]] = {}
    for u, root in enumerate(labels.tolist()):
        comps.setdefault(root, []).append(u)
    groups = tuple(tuple(comps[r]) for r in sorted(comps))
    return ReconstructedGraph(y.n, frozenset(map(tuple, edges.tolist())), groups)


def true_fingerprint(p: PopulationParams, group: Sequence[int]) -> Fingerprint:
    group = tuple(int(u) for u in group)
    if group not in p.graph.groups:
        raise ValueError(f"{list(group)} is not a group of the association graph")
    s = len(group)
    corr = np.zeros((s, s))
    for i in range(s):
        for j in range(i + 1, s):
            corr[i, j] = p.second_moment(group[i], group[j])
    return Fingerprint(p.means[list(group)], corr)


def empirical_fingerprint(y: AnonymizedTraceSet, members: Sequence[int], moments=None) -> Fingerprint:
    members = [int(u) for u in members]
    if len(set(members)) != len(members):
        raise ValueError("fingerprint members must be distinct")
    for u in members:
        if not 0 <= u < y.n:
            raise IndexError(f"row {u} out of range [0, {y.n})")
    if moments is None:
        rows = y.data[members]
        m = y.m
        means = rows.sum(axis=1) / m
        second = (rows @ rows.T) / m
    else:
        means = moments[0][members]
        second = moments[1][np.ix_(members, members)]
    return Fingerprint(means, np.triu(second, k=1))


def _check_size(s: int, cap: int) -> None:
    if s > cap:
        raise GroupTooLargeError(
            f"group size {s} exceeds the exhaustive matching cap of {cap} ({s}! relabelings)"
        )


def fingerprint_distance(a: Fingerprint, b: Fingerprint, max_size: int = 8) -> Tuple[float, Tuple[int, ...]]:
    """D(a, b) = min over relabelings pi of ||a - b_pi||_inf, with the argmin pi.

    Under ``pi`` target member ``i`` is matched to member ``pi[i]`` of ``b``.
    """
    if a.size != b.size:
        raise ValueError(f"fingerprint sizes differ: {a.size} vs {b.size}")
    _check_size(a.size, max_size)
    dist, perms = kernels.perm_distances(
        a.means, a.correlations, b.means[None, :], b.correlations[None, :, :]
    )
    return float(dist[0]), tuple(int(i) for i in perms[0])


def identify_group(
    target: Fingerprint,
    rg: ReconstructedGraph,
    y: AnonymizedTraceSet,
    radius: float,
    *,
    max_size: int = 8,
    moments=None,
) -> GroupMatch:
    """Closest size-s component to ``target``; NoCandidateError if none is within ``radius``."""
    s = target.size
    _check_size(s, max_size)
    candidates = [g for g in rg.groups if len(g) == s]
    if not candidates:
        raise NoCandidateError("group", f"no component of size {s}")
    if moments is None:
        moments = empirical_moments(y)
    means, second = moments
    idx = np.asarray(candidates, dtype=np.int64)
    b_means = means[idx]
    b_corr = np.triu(second[idx[:, :, None], idx[:, None, :]], k=1)
    dists, perms = kernels.perm_distances(target.means, target.correlations, b_means, b_corr)
    best = int(np.argmin(dists))
    in_radius = int((dists <= radius).sum())
    if dists[best] > radius:
        raise NoCandidateError("group", f"closest component at distance {dists[best]:.6g} > {radius:.6g}")
    return GroupMatch(tuple(candidates[best]), tuple(int(i) for i in perms[best]), float(dists[best]), in_radius)


def identify_user(group_members: Sequence[int], y: AnonymizedTraceSet, target_mean: float, radius: float, means=None) -> UserMatch:
    """Member whose empirical mean lies in the ball around ``target_mean``."""
    members = [int(u) for u in group_members]
    if not members:
        raise ValueError("group_members must be nonempty")
    if means is None:
        emp = y.data[members].sum(axis=1) / y.m
    else:
        emp = np.asarray(means)[members]
    gaps = np.abs(emp - target_mean)
    best = int(np.argmin(gaps))
    in_radius = int((gaps <= radius).sum())
    if gaps[best] > radius:
        raise NoCandidateError("user", f"closest mean at distance {gaps[best]:.6g} > {radius:.6g}")
    return UserMatch(members[best], float(gaps[best]), in_radius)


def _target_group(k: AdversaryKnowledge) -> Tuple[int, ...]:
    return k.population.graph.group_containing(k.target_user)


def attack(
    y: AnonymizedTraceSet,
    k: AdversaryKnowledge,
    cfg: AttackConfig,
    permutation: Optional[Permutation] = None,
) -> AttackResult:
    """Run the regime's pipeline; stage failures are recorded, never raised.

    ``permutation`` is used only to score the result afterwards.
    """
    regime = k.regime
    n = y.n
    if n != k.population.n:
        raise ValueError(f"trace set has {n} rows but knowledge describes {k.population.n} users")
    target_mean = float(k.population.means[k.target_user])
    diag: Dict[str, Any] = {"regime": regime.value, "n": n, "m": y.m}

    if regime is Regime.INDEPENDENT:
        means = y.data.sum(axis=1) / y.m
        gaps = np.abs(means - target_mean)
        best = int(np.argmin(gaps))
        radius = delta_independent(n, cfg.alpha)
        diag.update(radius=radius, user_distance=float(gaps[best]), users_in_radius=int((gaps <= radius).sum()))
        result = AttackResult(best, diagnostics=diag)
        return result.score(permutation, k.target_user) if permutation is not None else result

    group = _target_group(k)
    s = len(group)
    pos = group.index(k.target_user)
    if regime is Regime.FULL_KNOWLEDGE:
        target = true_fingerprint(k.population, group)
        radius = delta_n(n, s, cfg.alpha)
    else:
        target = Fingerprint(k.population.means[list(group)], np.zeros((s, s)))
        radius = delta_structure(n, s, cfg.alpha)
    threshold = edge_threshold(y.m, cfg.edge_threshold_exponent)
    diag.update(s=s, radius=radius, edge_threshold=threshold)

    result = AttackResult(None, diagnostics=diag)
    moments = empirical_moments(y)
    rg = reconstruct_graph(y, threshold, moments=moments)
    diag.update(
        n_edges=len(rg.edges),
        n_components=len(rg.groups),
        candidates_of_size_s=sum(1 for g in rg.groups if len(g) == s),
    )
    try:
        if regime is Regime.STRUCTURE_ONLY:
            moments_used = (moments[0], np.zeros_like(moments[1]))
        else:
            moments_used = moments
        gm = identify_group(target, rg, y, radius, max_size=cfg.max_group_size_for_matching, moments=moments_used)
        diag.update(
            group_members=list(gm.members),
            group_distance=gm.distance,
            groups_in_radius=gm.in_radius,
            group_ambiguous=gm.ambiguous,
            matched_by_relabeling=gm.members[gm.permutation[pos]],
        )
        um = identify_user(gm.members, y, target_mean, radius, means=moments[0])
        diag.update(user_distance=um.distance, users_in_radius=um.in_radius, user_ambiguous=um.ambiguous)
        result.identified_index = um.index
    except NoCandidateError as exc:
        result.failure = f"no_candidate:{exc.stage}"
        diag["failure_detail"] = str(exc)
    if permutation is not None:
        result.score(permutation, k.target_user)
    return result
