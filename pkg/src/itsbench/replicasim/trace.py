"""Audit trace records: wire format, replay metrics, invariant checks.

One event per line, fields in fixed order::

    <timestamp> <module> <kind> key=value key=value ...

Timestamps are ``repr()`` of the float simulation time, so parsing a
trace reproduces the exact values and identical configurations produce
byte-identical files.  Values never contain whitespace.

The trace is the authoritative account of a run: `metrics_from_trace`
rebuilds every SimMetrics field from the records alone, and
`verify_invariants` replays the records against the structural rules of
the architecture (recovery caps, active floor, vote soundness, proxy
coverage).  Both are deliberately independent of the simulation engine.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .config import SimConfig

# Event kinds grouped by the architecture module that emits them.
MODULE_BY_KIND = {
    "ReplicaInit": "replication",
    "ProxyOnline": "proxy",
    "Compromise": "attacker",
    "InspectorReject": "detector",
    "VoteDivergence": "detector",
    "Vote": "detector",
    "VoteNoConsensus": "detector",
    "ProactiveStart": "reconfiguration",
    "ProactiveEnd": "reconfiguration",
    "SystemRecoveryStart": "reconfiguration",
    "SystemRecoveryEnd": "reconfiguration",
    "RecoveryDeferred": "reconfiguration",
    "ProcessRecovery": "reconfiguration",
    "ManualRestorationStart": "reconfiguration",
    "ManualRestorationEnd": "reconfiguration",
    "ProxyRotation": "proxy",
    "ProxyCleansingEnd": "proxy",
    "ProxyRotationDeferred": "proxy",
    "SecurityFailure": "monitor",
}


@dataclass(frozen=True)
class AuditRecord:
    """One audit event: when, which module, what, plus ordered payload."""

    timestamp: float
    module: str
    kind: str
    payload: tuple[tuple[str, str], ...] = ()

    def get(self, key: str) -> str:
        for k, v in self.payload:
            if k == key:
                return v
        raise KeyError(key)

    def format(self) -> str:
        fields = " ".join(f"{k}={v}" for k, v in self.payload)
        head = f"{self.timestamp!r} {self.module} {self.kind}"
        return f"{head} {fields}" if fields else head


class TraceFormatError(ValueError):
    """A trace line does not follow the documented format."""


def parse_record(line: str) -> AuditRecord:
    tokens = line.split()
    if len(tokens) < 3:
        raise TraceFormatError(f"short trace line: {line!r}")
    try:
        timestamp = float(tokens[0])
    except ValueError:
        raise TraceFormatError(f"bad timestamp in line: {line!r}") from None
    payload = []
    for token in tokens[3:]:
        if "=" not in token:
            raise TraceFormatError(f"bad payload token {token!r} in line: {line!r}")
        key, value = token.split("=", 1)
        payload.append((key, value))
    return AuditRecord(
        timestamp=timestamp,
        module=tokens[1],
        kind=tokens[2],
        payload=tuple(payload),
    )


def write_trace(records: Iterable[AuditRecord], path: str | Path) -> None:
    """Write records one per line, LF endings, UTF-8."""
    text = "".join(record.format() + "\n" for record in records)
    Path(path).write_bytes(text.encode("utf-8"))


def read_trace(path: str | Path) -> list[AuditRecord]:
    lines = Path(path).read_bytes().decode("utf-8").splitlines()
    return [parse_record(line) for line in lines if line]


@dataclass(frozen=True)
class SimMetrics:
    """Run-level results, all recomputable from the audit trace."""

    empirical_availability: float
    time_to_first_security_failure: float | None
    proactive_recoveries: int
    reactive_system_recoveries: int
    process_recoveries: int
    proxy_rotations: int
    manual_restorations: int
    recovery_deferrals: int
    proxy_rotation_deferrals: int
    max_concurrent_system_recoveries: int


def metrics_from_trace(
    records: Sequence[AuditRecord], config: SimConfig
) -> SimMetrics:
    """Rebuild SimMetrics from the trace alone.

    Failure time accumulates from each SecurityFailure to the matching
    ManualRestorationEnd (or the horizon when restoration is still in
    progress).  An open recovery interval is closed early by a
    ManualRestorationStart, which resets the whole system.
    """
    counts = {
        "ProactiveStart": 0,
        "SystemRecoveryStart": 0,
        "ProcessRecovery": 0,
        "ProxyRotation": 0,
        "ManualRestorationEnd": 0,
        "RecoveryDeferred": 0,
        "ProxyRotationDeferred": 0,
    }
    failure_time = 0.0
    failure_since: float | None = None
    first_failure: float | None = None
    open_recoveries = 0
    max_concurrent = 0
    for record in records:
        kind = record.kind
        if kind in counts:
            counts[kind] += 1
        if kind in ("ProactiveStart", "SystemRecoveryStart"):
            open_recoveries += 1
            max_concurrent = max(max_concurrent, open_recoveries)
        elif kind in ("ProactiveEnd", "SystemRecoveryEnd"):
            open_recoveries -= 1
        elif kind == "ManualRestorationStart":
            open_recoveries = 0
        elif kind == "SecurityFailure":
            if first_failure is None:
                first_failure = record.timestamp
            failure_since = record.timestamp
        elif kind == "ManualRestorationEnd":
            if failure_since is not None:
                failure_time += record.timestamp - failure_since
                failure_since = None
    if failure_since is not None:
        failure_time += config.horizon - failure_since
    return SimMetrics(
        empirical_availability=1.0 - failure_time / config.horizon,
        time_to_first_security_failure=first_failure,
        proactive_recoveries=counts["ProactiveStart"],
        reactive_system_recoveries=counts["SystemRecoveryStart"],
        process_recoveries=counts["ProcessRecovery"],
        proxy_rotations=counts["ProxyRotation"],
        manual_restorations=counts["ManualRestorationEnd"],
        recovery_deferrals=counts["RecoveryDeferred"],
        proxy_rotation_deferrals=counts["ProxyRotationDeferred"],
        max_concurrent_system_recoveries=max_concurrent,
    )


def verify_invariants(
    records: Sequence[AuditRecord], config: SimConfig
) -> list[str]:
    """Replay the trace against the structural rules of the architecture.

    Returns a list of human-readable violations (empty when the trace is
    clean):

    * timestamps are non-decreasing;
    * concurrent system-level recoveries never exceed k, concurrent
      proactive recoveries never exceed 1;
    * outside declared failure intervals, active replicas never drop
      below 2f + 1 and at least one proxy is online;
    * every vote is taken by at least 2f + 1 replicas and returns the
      healthy value whenever at most f of the voters are compromised;
    * replica diversity labels stay pairwise distinct.
    """
    violations: list[str] = []
    n = config.n
    active = {f"r{i}" for i in range(n)}
    compromised: set[str] = set()
    recovering: set[str] = set()
    proactive: set[str] = set()
    os_labels: dict[str, str] = {}
    online_proxies: set[str] = set()
    proxies_seen = False
    in_failure = False
    last_t = float("-inf")

    def check_os_unique(t: float) -> None:
        labels = list(os_labels.values())
        if len(set(labels)) != len(labels):
            violations.append(f"{t!r}: duplicate replica diversity labels")

    for record in records:
        t = record.timestamp
        if t < last_t:
            violations.append(f"{t!r}: timestamp precedes {last_t!r}")
        last_t = t
        kind = record.kind
        if kind == "ReplicaInit":
            os_labels[record.get("replica")] = record.get("os")
            check_os_unique(t)
        elif kind == "ProxyOnline":
            online_proxies.add(record.get("proxy"))
            proxies_seen = True
        elif kind == "Compromise":
            if record.get("scope") == "system":
                compromised.add(record.get("replica"))
        elif kind in ("ProactiveStart", "SystemRecoveryStart"):
            replica = record.get("replica")
            active.discard(replica)
            recovering.add(replica)
            if kind == "ProactiveStart":
                proactive.add(replica)
                if len(proactive) > 1:
                    violations.append(f"{t!r}: concurrent proactive recoveries > 1")
            if len(recovering) > config.k:
                violations.append(
                    f"{t!r}: {len(recovering)} concurrent recoveries exceed k={config.k}"
                )
        elif kind in ("ProactiveEnd", "SystemRecoveryEnd"):
            replica = record.get("replica")
            recovering.discard(replica)
            proactive.discard(replica)
            active.add(replica)
            compromised.discard(replica)
            if kind == "SystemRecoveryEnd":
                os_labels[replica] = record.get("os")
                check_os_unique(t)
        elif kind == "SecurityFailure":
            in_failure = True
        elif kind == "ManualRestorationStart":
            active.clear()
            recovering.clear()
            proactive.clear()
        elif kind == "ManualRestorationEnd":
            in_failure = False
            active = {f"r{i}" for i in range(n)}
            compromised.clear()
        elif kind == "ProxyRotation":
            online_proxies.discard(record.get("old"))
            online_proxies.add(record.get("new"))
        elif kind == "Vote":
            voters = int(record.get("voters"))
            correct = record.get("correct") == "1"
            if voters < 2 * config.f + 1:
                violations.append(f"{t!r}: vote with only {voters} voters")
            if len(compromised & active) <= config.f and not correct:
                violations.append(
                    f"{t!r}: vote returned a non-healthy value with "
                    f"{len(compromised & active)} <= f compromised voters"
                )
        if not in_failure:
            if len(active) < 2 * config.f + 1:
                violations.append(
                    f"{t!r}: active replicas {len(active)} below 2f+1={2 * config.f + 1}"
                )
            if proxies_seen and not online_proxies:
                violations.append(f"{t!r}: no proxy online")
    return violations
