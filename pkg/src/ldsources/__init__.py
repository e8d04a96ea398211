"""Large deviations and posterior concentration for sources, via the method of types."""
from .core import (
    DEFAULT_BALL,
    HALF_L1,
    L1,
    SIMPLEX,
    Alphabet,
    Ball,
    Complement,
    Intersection,
    LinearEq,
    LinearFamily,
    LinearIneq,
    NType,
    Pmf,
    PriorSpec,
    evaluate_set,
    make_pmf,
    support,
)
from .divergence import i_divergence, kerridge_inaccuracy, l_divergence, lambda_score, log_multiplicity
from .enumeration import EnumerationPlan, count_sources, enumerate_sources, k_equivalent, quantize_prior, round_to_type
from .partitions import PartitionSpec, empirical_type, l_m_divergence
from .posterior import (
    colt_series,
    decay_series,
    map_source,
    posterior_prob,
    source_decay_rate,
    types_rate_series,
)
from .projection import i_projection, i_projection_linear, l_projection, l_projection_linear

__version__ = "0.1.0"
