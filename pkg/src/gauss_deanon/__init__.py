"""Statistical-matching de-anonymization of dependent Gaussian user traces."""

from .adversary import (
    AdversaryKnowledge,
    AttackResult,
    NoCandidateError,
    attack,
    empirical_covariance,
    empirical_fingerprint,
    empirical_mean,
    fingerprint_distance,
    identify_group,
    identify_user,
    reconstruct_graph,
    true_fingerprint,
)
from .anonymizer import anonymize, sample_permutation
from .core import (
    AnonymizedTraceSet,
    AssociationGraph,
    AttackConfig,
    Fingerprint,
    Permutation,
    PopulationParams,
    Regime,
    TraceSet,
    delta_n,
    delta_structure,
    edge_threshold,
    required_m,
)
from .generator import GeneratorConfig, build_covariance, sample_population, sample_traces
from .harness import (
    CellConfig,
    ErrorEstimate,
    SweepSpec,
    edge_recovery,
    estimate_error,
    run_trial,
    scaling_experiment,
    sweep,
)

__version__ = "0.1.0"
