"""Universal noise-guessing decoding for finite-state additive channels."""

from .channel import (
    ModelStructure,
    UnifilarModel,
    load_model,
    make_markov_order1,
    make_memoryless,
    markov1_regime,
    model_from_dict,
    model_to_dict,
    noise_prob,
    sample_noise,
    state_path,
)
from .ftypes import (
    CountMatrix,
    EmpiricalLaw,
    count_stats,
    empirical_divergence,
    empirical_entropy,
    iter_type_class,
    iter_types,
    prefix_count,
    rank,
    type_class_size,
    unrank,
)
from .metrics import (
    KTMixtureSampler,
    KTSequentialSampler,
    MatchedMetric,
    MaximisingMetric,
    TypeMetricSampler,
    WeightingMetric,
    kt_conditional,
    kt_log_prob,
    matched_log_metric,
    maximising_log_metric,
    sample_from_type_metric,
    sample_kt_mixture,
    sample_kt_sequential,
)
from .codes import (
    ExplicitCodebook,
    LinearCode,
    make_bch_63_51,
    make_modified_bch,
    prune_antipodal,
    puncture,
)
from .decoders import (
    DecodeOutcome,
    GuessPlan,
    decode_deterministic,
    decode_memoryless_mismatched,
    decode_randomised,
    decode_training,
    plan_for,
    query_cap,
)
from .analysis import (
    BoundReport,
    build_bound_report,
    complexity_bounds,
    divergence_rate,
    entropy_rate,
    redundancy_bounds,
    renyi_half_rate,
    renyi_rate,
    stationary_distribution,
    vanishing_terms,
)
from .sim import SimConfig, SimPoint, run_point, run_sweep

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
