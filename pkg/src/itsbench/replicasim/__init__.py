"""Deterministic discrete-event simulation of the replicated architecture."""

from .config import ConfigInvalid, ScriptedCompromise, SimConfig
from .engine import (
    CompromiseState,
    ManagedProcess,
    Proxy,
    ProxyMode,
    RecoveryCapacityExhausted,
    Replica,
    ReplicaSimulation,
    ReplicaStatus,
    SecurityState,
    choose_rejuvenation_target,
    inspect_output,
    majority_vote,
    run,
    security_state,
)
from .trace import (
    AuditRecord,
    SimMetrics,
    metrics_from_trace,
    parse_record,
    read_trace,
    verify_invariants,
    write_trace,
)

__all__ = [
    "AuditRecord",
    "CompromiseState",
    "ConfigInvalid",
    "ManagedProcess",
    "Proxy",
    "ProxyMode",
    "RecoveryCapacityExhausted",
    "Replica",
    "ReplicaSimulation",
    "ReplicaStatus",
    "ScriptedCompromise",
    "SecurityState",
    "SimConfig",
    "SimMetrics",
    "choose_rejuvenation_target",
    "inspect_output",
    "majority_vote",
    "metrics_from_trace",
    "parse_record",
    "read_trace",
    "run",
    "security_state",
    "verify_invariants",
    "write_trace",
]
