"""Simulator and analysis toolkit for anonymous transmission over GHZ states."""

from .anonymity import (
    AdversaryView,
    AnonymityVerdict,
    DcNetInstance,
    adversary_view,
    anonymity_verdict,
    dcnet_record,
    dcnet_round,
    exact_transcript_distribution,
    trace_attack,
    traceless_verdict,
    tv_distance,
)
from .keygraph import (
    KeySharingGraph,
    is_connected,
    is_partitioning_set,
    key_lower_bound,
    min_degree,
    tolerance,
    vertex_connectivity,
)
from .protocols import (
    AlohaSchedule,
    BroadcastEntry,
    CollisionOutcome,
    CollisionVerdict,
    PlayerConfig,
    RandomnessLedger,
    Role,
    Transcript,
    ae_establish,
    aloha_schedule,
    anon_multiparty_parity,
    anon_send,
    anonq_send,
    anonymous_key_exchange,
    collision_detect,
    decompose_k,
    elect_sender_receiver,
    prepare_rotated_states,
)
from .qsim import (
    DENSE_QUBIT_LIMIT,
    DenseState,
    GhzPhaseState,
    MeasurementRecord,
    ResidualPair,
    apply_phase_flip,
    apply_rz,
    bell_measure,
    dense_apply_gate,
    dense_measure,
    fidelity,
    ghz_dense,
    hadamard_measure_all,
    hadamard_measure_subset,
    make_ghz,
    outcome_distribution,
    parity_odd_probability,
    tensor,
)
from .rng import RngStream, derive_stream_id

__version__ = "0.1.0"

__all__ = [
    "AdversaryView",
    "AlohaSchedule",
    "AnonymityVerdict",
    "BroadcastEntry",
    "CollisionOutcome",
    "CollisionVerdict",
    "DENSE_QUBIT_LIMIT",
    "DcNetInstance",
    "DenseState",
    "GhzPhaseState",
    "KeySharingGraph",
    "MeasurementRecord",
    "PlayerConfig",
    "RandomnessLedger",
    "ResidualPair",
    "RngStream",
    "Role",
    "Transcript",
    "adversary_view",
    "ae_establish",
    "aloha_schedule",
    "anon_multiparty_parity",
    "anon_send",
    "anonq_send",
    "anonymity_verdict",
    "anonymous_key_exchange",
    "apply_phase_flip",
    "apply_rz",
    "bell_measure",
    "collision_detect",
    "dcnet_record",
    "dcnet_round",
    "decompose_k",
    "dense_apply_gate",
    "dense_measure",
    "derive_stream_id",
    "elect_sender_receiver",
    "exact_transcript_distribution",
    "fidelity",
    "ghz_dense",
    "hadamard_measure_all",
    "hadamard_measure_subset",
    "is_connected",
    "is_partitioning_set",
    "key_lower_bound",
    "make_ghz",
    "min_degree",
    "outcome_distribution",
    "parity_odd_probability",
    "prepare_rotated_states",
    "tensor",
    "tolerance",
    "trace_attack",
    "traceless_verdict",
    "tv_distance",
    "vertex_connectivity",
]
