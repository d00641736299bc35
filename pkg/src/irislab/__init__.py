"""Deterministic Chord simulator with privacy-preserving retrieval and (alpha, delta)-privacy analysis."""

from .chord import (
    LookupResult,
    Network,
    QueryTrace,
    RoutingTable,
    Step,
    chord_retrieve,
    chord_store,
    closest_preceding,
    fetch,
    generate_network,
    load_network,
    lookup_step,
    push,
    responsible_node,
    routing_table,
    save_network,
)
from .errors import (
    AnalysisError,
    CapacityError,
    IrisLabError,
    ParameterError,
    RoutingAttackError,
    SetupError,
    StateError,
)
from .iris import (
    IrisParams,
    bound_check,
    delta_from_fraction,
    iris_retrieve,
    predicted_distance,
    predicted_hops,
    select_start_node,
)
from .privacy import (
    ColluderModel,
    PrivacyObservation,
    PrivacyReport,
    analytic_probability,
    analyze_trace,
    empirical_probability,
    min_privacy_ratio,
)
from .ring import RingParams, cw_distance, in_cw_interval, lerp_toward, offset_back

__version__ = "0.1.0"
