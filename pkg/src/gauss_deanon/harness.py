"""Seeded Monte Carlo trials, error-probability estimates and sweeps."""

from __future__ import annotations

import itertools
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .adversary import AdversaryKnowledge, GroupTooLargeError, attack, reconstruct_graph
from .anonymizer import anonymize, sample_permutation
from .core import AttackConfig, Regime, edge_threshold, required_m
from .generator import FactorizationFailure, GeneratorConfig, PSDRetryExhausted, sample_population, sample_traces

MASK64 = (1 << 64) - 1
WILSON_Z = 1.959963984540054

OUTCOMES = ("success", "ambiguous", "failure", "error")


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(base: int, *keys: int) -> int:
    """Mix integer keys into ``base``; independent of any scheduling order."""
    state = splitmix64(int(base) & MASK64)
    for key in keys:
        state = splitmix64(state ^ splitmix64(int(key) & MASK64))
    return state


@dataclass(frozen=True)
class CellConfig:
    """One point of a sweep grid.

    ``m`` overrides the regime's required_m when set. In the independent
    regime users are generated as singletons regardless of ``s``.
    """

    regime: Regime = Regime.FULL_KNOWLEDGE
    n: int = 20
    s: int = 2
    alpha: float = 1.0
    c: float = 1.0
    m: Optional[int] = None
    rho_range: Tuple[float, float] = (0.3, 0.6)
    mean_interval: Tuple[float, float] = (0.0, 1.0)
    sigma2: float = 1.0
    topology: str = "complete_group"
    target_user: int = 0
    edge_threshold_exponent: float = -0.2
    max_group_size_for_matching: int = 8
    fixed_means: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "regime", Regime.parse(self.regime))
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.m is not None and self.m < 1:
            raise ValueError("m override must be at least 1")

    @property
    def observations(self) -> int:
        if self.m is not None:
            return int(self.m)
        return required_m(self.n, self.s, self.alpha, self.c, self.regime)

    def generator_config(self) -> GeneratorConfig:
        s = 1 if self.regime is Regime.INDEPENDENT else self.s
        return GeneratorConfig(
            n=self.n,
            s=s,
            rho_range=self.rho_range,
            mean_interval=self.mean_interval,
            sigma2=self.sigma2,
            topology=self.topology,
            fixed_means=self.fixed_means,
        )

    def attack_config(self) -> AttackConfig:
        return AttackConfig(
            alpha=self.alpha,
            c_const=self.c,
            regime=self.regime,
            edge_threshold_exponent=self.edge_threshold_exponent,
            max_group_size_for_matching=self.max_group_size_for_matching,
        )

    def snapshot(self) -> Dict[str, Any]:
        d = asdict(self)
        d["regime"] = self.regime.value
        d["m"] = self.observations
        return d


@dataclass
class TrialRecord:
    seed: int
    config: Dict[str, Any]
    outcome: str
    result: Optional[Dict[str, Any]]
    error: Optional[str] = None
    wall_time: float = field(default=0.0, compare=False)

    @property
    def success(self) -> bool:
        return self.outcome in ("success", "ambiguous")


def run_trial(cell: CellConfig, seed: int) -> TrialRecord:
    """Generate, anonymize and attack once. Deterministic in (cell, seed)."""
    t0 = time.perf_counter()
    m = cell.observations
    snapshot = cell.snapshot()
    try:
        pop = sample_population(cell.generator_config(), derive_seed(seed, 1))
        x = sample_traces(pop, m, derive_seed(seed, 2))
    except (PSDRetryExhausted, FactorizationFailure) as exc:
        return TrialRecord(seed, snapshot, "error", None, f"{type(exc).__name__}: {exc}", time.perf_counter() - t0)
    perm = sample_permutation(cell.n, derive_seed(seed, 3))
    y = anonymize(x, perm)
    knowledge = AdversaryKnowledge(cell.regime, pop, cell.target_user)
    try:
        result = attack(y, knowledge, cell.attack_config(), permutation=perm)
    except GroupTooLargeError as exc:
        return TrialRecord(seed, snapshot, "error", None, f"{type(exc).__name__}: {exc}", time.perf_counter() - t0)
    if not result.success:
        outcome = "failure"
    elif result.ambiguous:
        outcome = "ambiguous"
    else:
        outcome = "success"
    return TrialRecord(seed, snapshot, outcome, result.to_dict(), None, time.perf_counter() - t0)


def wilson_interval(failures: int, trials: int, z: float = WILSON_Z) -> Tuple[float, float]:
    if trials <= 0:
        return 0.0, 1.0
    p = failures / trials
    denom = 1.0 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    lo, hi = max(0.0, centre - half), min(1.0, centre + half)
    # guard the invariant lo <= p <= hi against rounding at the endpoints
    return min(lo, p), max(hi, p)


@dataclass(frozen=True)
class ErrorEstimate:
    """P_e estimate over the trials that ran (errored trials excluded)."""

    trials: int
    failures: int
    p_e_hat: float
    ci_low: float
    ci_high: float
    ambiguity_rate: float
    ambiguous_successes: int = 0
    errors: int = 0

    @property
    def strict_p_e_hat(self) -> float:
        if self.trials == 0:
            return float("nan")
        return (self.failures + self.ambiguous_successes) / self.trials

    @classmethod
    def from_records(cls, records: Sequence[TrialRecord]) -> "ErrorEstimate":
        counts = {k: 0 for k in OUTCOMES}
        flagged = 0
        for r in records:
            counts[r.outcome] += 1
            if r.result is not None and r.result.get("ambiguous"):
                flagged += 1
        ran = len(records) - counts["error"]
        fails = counts["failure"]
        p = fails / ran if ran else float("nan")
        lo, hi = wilson_interval(fails, ran) if ran else (float("nan"), float("nan"))
        return cls(
            trials=ran,
            failures=fails,
            p_e_hat=p,
            ci_low=lo,
            ci_high=hi,
            ambiguity_rate=flagged / ran if ran else float("nan"),
            ambiguous_successes=counts["ambiguous"],
            errors=counts["error"],
        )


def _ordered_map(fn, items, jobs: int) -> list:
    # results are indexed like items, so scheduling order never leaks into output
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (8 * jobs))))


def _run_item(item):
    cell, seed = item
    return run_trial(cell, seed)


def run_trials(items: Sequence[Tuple[CellConfig, int]], jobs: int = 1) -> List[TrialRecord]:
    """Run work items in order; the result list is indexed like ``items``."""
    return _ordered_map(_run_item, list(items), jobs)


@dataclass(frozen=True)
class EdgeRecovery:
    """Reconstructed edge set scored against the relabeled true edge set."""

    seed: int
    true_edges: int
    found_edges: int
    correct_edges: int

    @property
    def precision(self) -> float:
        return self.correct_edges / self.found_edges if self.found_edges else 1.0

    @property
    def recall(self) -> float:
        return self.correct_edges / self.true_edges if self.true_edges else 1.0

    @property
    def f1(self) -> float:
        denom = self.true_edges + self.found_edges
        return 2 * self.correct_edges / denom if denom else 1.0


def edge_recovery(cell: CellConfig, seed: int) -> EdgeRecovery:
    """Reconstruct the graph from anonymized traces and count edges it gets right.

    Uses the same seed derivation as ``run_trial``, so the traces are the
    ones the attack would see.
    """
    pop = sample_population(cell.generator_config(), derive_seed(seed, 1))
    x = sample_traces(pop, cell.observations, derive_seed(seed, 2))
    perm = sample_permutation(cell.n, derive_seed(seed, 3))
    fwd = perm.forward
    truth = {tuple(sorted((int(fwd[u]), int(fwd[v])))) for u, v in pop.graph.edges}
    found = reconstruct_graph(anonymize(x, perm), edge_threshold(x.m, cell.edge_threshold_exponent)).edges
    return EdgeRecovery(seed, len(truth), len(found), len(truth & found))


def _edge_item(item):
    cell, seed = item
    return edge_recovery(cell, seed)


def edge_recovery_trials(cell: CellConfig, trials: int, base_seed: int, jobs: int = 1) -> List[EdgeRecovery]:
    return _ordered_map(_edge_item, [(cell, s) for s in trial_seeds(base_seed, trials)], jobs)


def trial_seeds(base_seed: int, trials: int) -> List[int]:
    return [derive_seed(base_seed, t) for t in range(trials)]


def estimate_error(cell: CellConfig, trials: int, base_seed: int, jobs: int = 1) -> ErrorEstimate:
    if trials < 1:
        raise ValueError("trials must be at least 1")
    records = run_trials([(cell, s) for s in trial_seeds(base_seed, trials)], jobs)
    return ErrorEstimate.from_records(records)


@dataclass(frozen=True)
class SweepSpec:
    n: Tuple[int, ...]
    s: Tuple[int, ...] = (2,)
    alpha: Tuple[float, ...] = (1.0,)
    c: Tuple[float, ...] = (1.0,)
    regime: Tuple[Regime, ...] = (Regime.FULL_KNOWLEDGE,)
    trials: int = 100
    seed: int = 0
    jobs: int = 1
    m: Optional[int] = None
    base_cell: CellConfig = field(default_factory=CellConfig)

    def __post_init__(self):
        object.__setattr__(self, "regime", tuple(Regime.parse(r) for r in self.regime))
        for name in ("n", "s", "alpha", "c", "regime"):
            if not getattr(self, name):
                raise ValueError(f"sweep grid {name!r} is empty")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")

    def cells(self) -> List[CellConfig]:
        """Grid cells in deterministic order: regime, n, s, alpha, c."""
        return [
            replace(self.base_cell, regime=r, n=n, s=s, alpha=a, c=c, m=self.m)
            for r, n, s, a, c in itertools.product(self.regime, self.n, self.s, self.alpha, self.c)
        ]


@dataclass
class SweepRow:
    cell: CellConfig
    seed: int
    estimate: Optional[ErrorEstimate]
    error: Optional[str] = None


def sweep(spec: SweepSpec, jobs: Optional[int] = None) -> List[SweepRow]:
    jobs = spec.jobs if jobs is None else jobs
    rows: List[SweepRow] = []
    items: List[Tuple[CellConfig, int]] = []
    spans: List[Tuple[int, int]] = []
    for idx, cell in enumerate(spec.cells()):
        cell_seed = derive_seed(spec.seed, idx)
        try:
            cell.generator_config()
            cell.observations
        except ValueError as exc:
            rows.append(SweepRow(cell, cell_seed, None, str(exc)))
            continue
        start = len(items)
        items.extend((cell, s) for s in trial_seeds(cell_seed, spec.trials))
        spans.append((len(rows), start))
        rows.append(SweepRow(cell, cell_seed, None))
    records = run_trials(items, jobs)
    for i, (row_idx, start) in enumerate(spans):
        rows[row_idx].estimate = ErrorEstimate.from_records(records[start : start + spec.trials])
    return rows


@dataclass
class DecayReport:
    regime: Regime
    s: int
    alpha: float
    rows: List[SweepRow]
    decay_observed: bool

    def lines(self) -> List[str]:
        out = [f"regime={self.regime.value} s={self.s} alpha={self.alpha}"]
        for row in self.rows:
            e = row.estimate
            out.append(
                f"  n={row.cell.n:<6d} m={row.cell.observations:<10d} pe_hat={e.p_e_hat:.4f} "
                f"ci=[{e.ci_low:.4f}, {e.ci_high:.4f}] ambiguity={e.ambiguity_rate:.4f}"
            )
        out.append(f"decay observed: {self.decay_observed}")
        return out


def decay_observed(first: ErrorEstimate, last: ErrorEstimate) -> bool:
    if first.p_e_hat == 0 and last.p_e_hat == 0:
        return True
    return last.ci_high < first.ci_low


def scaling_experiment(
    regime,
    s: int,
    alpha: float,
    n_grid: Sequence[int],
    trials: int,
    *,
    c: float = 1.0,
    seed: int = 0,
    jobs: int = 1,
    m: Optional[int] = None,
    base_cell: Optional[CellConfig] = None,
) -> DecayReport:
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    n_grid = tuple(int(n) for n in n_grid)
    if len(n_grid) < 2 or any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise ValueError("n_grid must be strictly increasing with at least two entries")
    spec = SweepSpec(
        n=n_grid,
        s=(s,),
        alpha=(alpha,),
        c=(c,),
        regime=(regime,),
        trials=trials,
        seed=seed,
        jobs=jobs,
        m=m,
        base_cell=base_cell or CellConfig(),
    )
    rows = sweep(spec)
    return DecayReport(Regime.parse(regime), s, alpha, rows, decay_observed(rows[0].estimate, rows[-1].estimate))
