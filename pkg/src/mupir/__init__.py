"""Multi-user private information retrieval laboratory.

Capacity formulas, capacity-achieving query plans for S = N + U - 1
sources, a protocol simulator, brute-force inference attacks, and exact
privacy checks on small instances.
"""

from .core import (
    BitRef,
    ConfigurationError,
    IncompleteTranscriptError,
    InvariantViolation,
    MessageSet,
    ProtocolViolation,
    QueryElement,
    SystemConfig,
    block_length,
    capacity,
    query_cardinality,
    rate_of,
    source_count,
)
from .scheme import (
    AnswerSheet,
    RetrievalPlan,
    build_plan,
    canonical_shape,
    decode,
    evaluate_answers,
    generate_plan,
)
from .simnet import RoutingTable, Transcript, observed_sets, run_retrieval
from .adversary import AttackReport, SingletonCatalog, complexity_sweep, infer_cross_user, infer_single_user
from .privacylab import (
    QueryDistribution,
    enumerate_distribution,
    mutual_information_with_theta,
    shape_symmetry_check,
)

__version__ = "0.1.0"
