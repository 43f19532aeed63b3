"""Causal boundaries of discretized model spacetimes.

The package builds finite chronological sets from scene descriptions,
extracts their terminal past and future sets, assembles boundary
completions under several pairing rules, and compares the resulting
boundary topologies.  A small wave-type family with curved chronology
is included alongside the flat obstacle scenes.
"""

from .chrono import (
    Chain,
    ChronoSet,
    IdealSet,
    PointRecord,
    build_chrono_set,
    causality_ladder,
    common_future,
    common_past,
    dec,
    derived_causal,
    future,
    harris_chron,
    is_indecomposable,
    load_chrono,
    maximal_chains,
    past,
    past_determined_chron,
    save_chrono,
)
from .completion import (
    BoundaryPair,
    Completion,
    SequenceSpec,
    SRelationGraph,
    bs_related,
    chain_to_sequence,
    check_limit,
    chr_limit,
    classify_boundary,
    endpoint_of_chain,
    enumerate_minimal_completions,
    extended_chronology,
    gkp_precompletion,
    gkp_topology_verdict,
    hat_limit,
    interior_pair,
    is_admissible,
    is_globally_hyperbolic,
    is_minimal,
    is_strongly_causal_via_S,
    marolf_ross_completion,
    mr_topology_limit,
    s_relation_graph,
    sequence_from_pairs,
    sequence_from_points,
    szabados_related,
    terminal_sets,
    verify_extended_transitivity,
)

__version__ = "0.1.0"

__all__ = [
    "BoundaryPair",
    "Chain",
    "ChronoSet",
    "Completion",
    "IdealSet",
    "PointRecord",
    "SRelationGraph",
    "SequenceSpec",
    "bs_related",
    "build_chrono_set",
    "causality_ladder",
    "chain_to_sequence",
    "check_limit",
    "chr_limit",
    "classify_boundary",
    "common_future",
    "common_past",
    "dec",
    "derived_causal",
    "endpoint_of_chain",
    "enumerate_minimal_completions",
    "extended_chronology",
    "future",
    "gkp_precompletion",
    "gkp_topology_verdict",
    "harris_chron",
    "hat_limit",
    "interior_pair",
    "is_admissible",
    "is_globally_hyperbolic",
    "is_indecomposable",
    "is_minimal",
    "is_strongly_causal_via_S",
    "load_chrono",
    "marolf_ross_completion",
    "maximal_chains",
    "mr_topology_limit",
    "past",
    "past_determined_chron",
    "s_relation_graph",
    "save_chrono",
    "sequence_from_pairs",
    "sequence_from_points",
    "szabados_related",
    "terminal_sets",
    "verify_extended_transitivity",
    "__version__",
]
