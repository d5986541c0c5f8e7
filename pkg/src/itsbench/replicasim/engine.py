"""Deterministic discrete-event simulation of the replicated architecture.

The simulated system is a pool of n = 2f + 1 + k diverse replicas behind a
rotating proxy set.  A Poisson attacker compromises active replicas either
at process scope (one managed process turns suspect, handled by the
replica's process manager) or at system scope (the replica emits divergent
outputs until recovered).  Detection happens in periodic service rounds:
an inspector sanity-checks each output, then the survivors are majority
voted; rejected or divergent replicas go to system-level reactive
recovery.  Independently, a proactive scheduler rejuvenates the active
replica with the oldest recovery timestamp, one at a time, and each
replica's process manager polls for suspect processes, activating a warm
standby or escalating when none is left.  At most k system-level
recoveries (proactive plus reactive) ever run concurrently, so at least
2f + 1 replicas stay active.

A security failure is declared the moment more than f active replicas are
compromised (or the active count drops below 2f + 1); the system is then
down for a fixed manual-restoration interval and restarts pristine.

Determinism: a single event queue orders events by (time, kind priority,
sequence number) with priorities completion < detection < attack <
scheduler, and all randomness derives from per-purpose generators spawned
from the root seed.  Identical configurations therefore produce
byte-identical audit traces.
"""

from __future__ import annotations

import heapq
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping

import numpy as np

from .config import ConfigInvalid, SimConfig
from .trace import MODULE_BY_KIND, AuditRecord, SimMetrics

# Tie-break priorities for simultaneous events.
_PRIO_COMPLETION = 0
_PRIO_DETECTION = 1
_PRIO_ATTACK = 2
_PRIO_SCHEDULER = 3

_HEALTHY_OUTPUT = "ok"


class RecoveryCapacityExhausted(Exception):
    """All k concurrent system-level recovery slots are busy."""


class ReplicaStatus(str, Enum):
    ACTIVE = "Active"
    SYSTEM_RECOVERY = "SystemRecovery"
    DEGRADED = "Degraded"


class CompromiseState(str, Enum):
    NO = "No"
    LATENT = "Latent"
    DETECTED = "Detected"


class ProcessState(str, Enum):
    RUNNING = "Running"
    SUSPECTED = "Suspected"
    STANDBY = "Standby"
    KILLED = "Killed"


class ProxyMode(str, Enum):
    ONLINE = "Online"
    OFFLINE = "Offline"
    CLEANSING = "Cleansing"


class SecurityState(str, Enum):
    NORMAL = "Normal"
    MASKED = "Masked"
    SECURITY_FAILURE = "SecurityFailure"


def security_state(
    *, compromised_active: int, active: int, recovering: int, f: int
) -> SecurityState:
    """Classify a system snapshot.

    Failure means the voting majority can no longer be trusted: more than
    f active replicas are compromised, or fewer than 2f + 1 replicas are
    active at all.  Masked means some compromise or recovery is in
    progress but the failure condition is false.
    """
    if compromised_active > f or active < 2 * f + 1:
        return SecurityState.SECURITY_FAILURE
    if compromised_active > 0 or recovering > 0:
        return SecurityState.MASKED
    return SecurityState.NORMAL


def majority_vote(values: Mapping[int, str]) -> tuple[str | None, tuple[int, ...]]:
    """Strict-majority comparison of replica outputs.

    Returns (consensus value, divergent replica ids).  When no value is
    held by a strict majority of the voters the consensus is None and the
    caller must treat the round as a security-failure signal.
    """
    if not values:
        return None, ()
    counts = Counter(values.values())
    value, count = counts.most_common(1)[0]
    if 2 * count <= len(values):
        return None, ()
    divergent = tuple(sorted(rid for rid, v in values.items() if v != value))
    return value, divergent


def inspect_output(
    compromised: bool,
    detection_prob: float,
    false_positive_prob: float,
    rng: np.random.Generator,
) -> bool:
    """Sanity-check one replica output; True means reject.

    Compromised outputs are rejected with ``detection_prob``; healthy
    outputs are rejected with ``false_positive_prob``, which is zero in
    the baseline so no random draw is consumed for healthy replicas.
    """
    if compromised:
        return bool(rng.random() < detection_prob)
    if false_positive_prob > 0.0:
        return bool(rng.random() < false_positive_prob)
    return False


@dataclass
class ManagedProcess:
    pid: int
    state: ProcessState = ProcessState.RUNNING
    standby_left: int = 0
    checkpoint: str | None = None
    incarnation: int = 0


@dataclass
class Replica:
    rid: int
    os_label: str
    status: ReplicaStatus = ReplicaStatus.ACTIVE
    compromised: CompromiseState = CompromiseState.NO
    last_rejuvenation_timestamp: float = 0.0
    processes: list[ManagedProcess] = field(default_factory=list)
    attack_gen: int = 0

    @property
    def name(self) -> str:
        return f"r{self.rid}"


@dataclass
class Proxy:
    pid: int
    os_label: str
    mode: ProxyMode = ProxyMode.OFFLINE
    online_since: float = 0.0
    offline_since: float = 0.0

    @property
    def name(self) -> str:
        return f"x{self.pid}"


def choose_rejuvenation_target(replicas: list[Replica]) -> Replica | None:
    """Active replica with the smallest recovery timestamp, id tie-break."""
    candidates = [r for r in replicas if r.status is ReplicaStatus.ACTIVE]
    if not candidates:
        return None
    return min(candidates, key=lambda r: (r.last_rejuvenation_timestamp, r.rid))


class ReplicaSimulation:
    """One deterministic run of the architecture; see the module docstring."""

    def __init__(self, config: SimConfig):
        self.config = config.validated()
        cfg = self.config
        self.os_pool = cfg.effective_os_pool()
        self.replicas = [
            Replica(
                rid=i,
                os_label=self.os_pool[i],
                processes=[
                    ManagedProcess(pid=j, standby_left=cfg.standby_per_process)
                    for j in range(cfg.process_count)
                ],
            )
            for i in range(cfg.n)
        ]
        self._os_cursor = cfg.n % len(self.os_pool)
        self.proxies = [
            Proxy(pid=i, os_label=f"pos-{i:02d}") for i in range(cfg.proxy_count)
        ]
        for proxy in self.proxies[: cfg.online_proxy_target]:
            proxy.mode = ProxyMode.ONLINE
        self.pending_proxy_rotations: list[int] = []
        self.now = 0.0
        self.queue: list[tuple[float, int, int, str, tuple]] = []
        self.seq = 0
        self.epoch = 0
        self.restoring = False
        self.concurrent_recoveries = 0
        self.proactive_in_progress = False
        self.records: list[AuditRecord] = []
        # Metrics accumulators (the trace is independently recomputable).
        self.failure_time = 0.0
        self.failure_since: float | None = None
        self.first_failure: float | None = None
        self.counts = Counter()
        self.max_concurrent = 0
        # Randomness: one stream per purpose, spawned from the root seed.
        self.attack_rngs = [
            np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(0, i)))
            for i in range(cfg.n)
        ]
        self.inspect_rng = np.random.default_rng(
            np.random.SeedSequence(cfg.seed, spawn_key=(1, 0))
        )
        self.vote_rng = np.random.default_rng(
            np.random.SeedSequence(cfg.seed, spawn_key=(2, 0))
        )

    # ------------------------------------------------------------------
    # plumbing

    def emit(self, kind: str, **payload) -> None:
        self.records.append(
            AuditRecord(
                timestamp=self.now,
                module=MODULE_BY_KIND[kind],
                kind=kind,
                payload=tuple((k, str(v)) for k, v in payload.items()),
            )
        )

    def schedule(self, delay: float, priority: int, kind: str, data: tuple = ()) -> None:
        heapq.heappush(self.queue, (self.now + delay, priority, self.seq, kind, data))
        self.seq += 1

    def _next_os_label(self) -> str:
        in_use = {r.os_label for r in self.replicas}
        for _ in range(len(self.os_pool)):
            label = self.os_pool[self._os_cursor]
            self._os_cursor = (self._os_cursor + 1) % len(self.os_pool)
            if label not in in_use:
                return label
        raise ConfigInvalid("os_pool exhausted; validation should prevent this")

    def _active(self) -> list[Replica]:
        return [r for r in self.replicas if r.status is ReplicaStatus.ACTIVE]

    # ------------------------------------------------------------------
    # attacker

    def schedule_attack(self, replica: Replica) -> None:
        if self.config.attack_rate <= 0.0 or self.restoring:
            return
        if replica.status is not ReplicaStatus.ACTIVE:
            return
        gap = float(self.attack_rngs[replica.rid].exponential(1.0 / self.config.attack_rate))
        self.schedule(gap, _PRIO_ATTACK, "attack", (replica.rid, replica.attack_gen, self.epoch))

    def _apply_compromise(self, replica: Replica, scope: str, process: ManagedProcess | None,
                          scripted: bool) -> None:
        if scope == "process" and process is not None:
            process.state = ProcessState.SUSPECTED
            payload = {"replica": replica.name, "scope": "process", "process": f"p{process.pid}"}
            if scripted:
                payload["scripted"] = 1
            self.emit("Compromise", **payload)
            return
        if replica.compromised is CompromiseState.NO:
            replica.compromised = CompromiseState.LATENT
        payload = {"replica": replica.name, "scope": "system"}
        if scripted:
            payload["scripted"] = 1
        self.emit("Compromise", **payload)
        self._check_security_failure()

    def on_attack(self, rid: int, gen: int, epoch: int) -> None:
        replica = self.replicas[rid]
        if epoch != self.epoch or gen != replica.attack_gen or self.restoring:
            return
        if replica.status is not ReplicaStatus.ACTIVE:
            return
        rng = self.attack_rngs[rid]
        process_scope = bool(rng.random() < self.config.process_infection_share)
        target: ManagedProcess | None = None
        if process_scope:
            running = [p for p in replica.processes if p.state is ProcessState.RUNNING]
            if running:
                target = running[int(rng.integers(len(running)))]
            else:
                process_scope = False
        self._apply_compromise(
            replica, "process" if process_scope else "system", target, scripted=False
        )
        if not self.restoring and replica.status is ReplicaStatus.ACTIVE:
            self.schedule_attack(replica)

    def on_scripted(self, index: int) -> None:
        entry = self.config.scripted_compromises[index]
        replica = self.replicas[entry.replica]
        if self.restoring or replica.status is not ReplicaStatus.ACTIVE:
            return
        target: ManagedProcess | None = None
        if entry.scope == "process":
            running = [p for p in replica.processes if p.state is ProcessState.RUNNING]
            target = running[0] if running else None
        self._apply_compromise(
            replica,
            entry.scope if target or entry.scope == "system" else "system",
            target,
            scripted=True,
        )

    # ------------------------------------------------------------------
    # recovery

    def start_reactive_recovery(self, replica: Replica, cause: str) -> None:
        """System-level reactive recovery; raises when k slots are busy."""
        if self.concurrent_recoveries >= self.config.k:
            raise RecoveryCapacityExhausted(
                f"{self.concurrent_recoveries} recoveries in progress, k={self.config.k}"
            )
        self.concurrent_recoveries += 1
        self.max_concurrent = max(self.max_concurrent, self.concurrent_recoveries)
        self.counts["reactive"] += 1
        replica.status = ReplicaStatus.SYSTEM_RECOVERY
        replica.attack_gen += 1
        self.emit("SystemRecoveryStart", replica=replica.name, cause=cause)
        self.schedule(
            self.config.system_recovery_duration, _PRIO_COMPLETION,
            "recovery_end", (replica.rid, self.epoch),
        )

    def _request_reactive(self, replica: Replica, cause: str) -> bool:
        try:
            self.start_reactive_recovery(replica, cause)
            return True
        except RecoveryCapacityExhausted:
            self.counts["recovery_deferred"] += 1
            self.emit("RecoveryDeferred", replica=replica.name, cause=cause)
            return False

    def _restore_pristine(self, replica: Replica) -> None:
        replica.compromised = CompromiseState.NO
        replica.last_rejuvenation_timestamp = self.now
        for process in replica.processes:
            process.state = ProcessState.RUNNING
            process.standby_left = self.config.standby_per_process
        replica.status = ReplicaStatus.ACTIVE

    def on_recovery_end(self, rid: int, epoch: int) -> None:
        if epoch != self.epoch:
            return
        replica = self.replicas[rid]
        replica.os_label = self._next_os_label()  # reactive recovery rotates diversity
        self._restore_pristine(replica)
        self.concurrent_recoveries -= 1
        self.emit("SystemRecoveryEnd", replica=replica.name, os=replica.os_label)
        self.schedule_attack(replica)

    # ------------------------------------------------------------------
    # proactive rejuvenation

    def on_proactive_trigger(self, epoch: int) -> None:
        if epoch != self.epoch:
            return
        if self.concurrent_recoveries >= self.config.k or self.proactive_in_progress:
            self.schedule(
                self.config.rejuvenation_period, _PRIO_SCHEDULER,
                "proactive_trigger", (self.epoch,),
            )
            return
        target = choose_rejuvenation_target(self.replicas)
        if target is None:
            self.schedule(
                self.config.rejuvenation_period, _PRIO_SCHEDULER,
                "proactive_trigger", (self.epoch,),
            )
            return
        self.proactive_in_progress = True
        self.concurrent_recoveries += 1
        self.max_concurrent = max(self.max_concurrent, self.concurrent_recoveries)
        self.counts["proactive"] += 1
        target.status = ReplicaStatus.SYSTEM_RECOVERY
        target.attack_gen += 1
        self.emit("ProactiveStart", replica=target.name)
        self.schedule(
            self.config.system_recovery_duration, _PRIO_COMPLETION,
            "proactive_end", (target.rid, self.epoch),
        )

    def on_proactive_end(self, rid: int, epoch: int) -> None:
        if epoch != self.epoch:
            return
        replica = self.replicas[rid]
        self._restore_pristine(replica)
        self.concurrent_recoveries -= 1
        self.proactive_in_progress = False
        self.emit("ProactiveEnd", replica=replica.name)
        self.schedule_attack(replica)
        self.schedule(
            self.config.rejuvenation_period, _PRIO_SCHEDULER,
            "proactive_trigger", (self.epoch,),
        )

    # ------------------------------------------------------------------
    # process manager

    def on_process_poll(self, rid: int, epoch: int) -> None:
        if epoch != self.epoch:
            return
        replica = self.replicas[rid]
        if replica.status is ReplicaStatus.ACTIVE and not self.restoring:
            for process in replica.processes:
                if process.state is not ProcessState.SUSPECTED:
                    continue
                if process.standby_left > 0:
                    process.incarnation += 1
                    process.checkpoint = (
                        f"ck-{replica.name}-p{process.pid}-{process.incarnation}"
                    )
                    process.state = ProcessState.RUNNING
                    process.standby_left -= 1
                    self.counts["process"] += 1
                    self.emit(
                        "ProcessRecovery",
                        replica=replica.name,
                        process=f"p{process.pid}",
                        standby_left=process.standby_left,
                    )
                else:
                    # No standby left: escalate to system level, or leave the
                    # remaining suspects for the next poll when k slots are busy.
                    self._request_reactive(replica, "process")
                    break
        self.schedule(
            self.config.process_poll_timeout, _PRIO_DETECTION,
            "process_poll", (rid, self.epoch),
        )

    # ------------------------------------------------------------------
    # detection rounds

    def on_service_round(self, epoch: int) -> None:
        if epoch != self.epoch:
            return
        cfg = self.config
        for replica in self._active():
            reject = inspect_output(
                replica.compromised is not CompromiseState.NO,
                cfg.inspector_detection_prob,
                cfg.inspector_false_positive_prob,
                self.inspect_rng,
            )
            if reject:
                if replica.compromised is not CompromiseState.NO:
                    replica.compromised = CompromiseState.DETECTED
                self.emit("InspectorReject", replica=replica.name)
                self._request_reactive(replica, "inspector")
        voters = self._active()
        if voters:
            values: dict[int, str] = {}
            for replica in voters:
                if replica.compromised is not CompromiseState.NO:
                    diverges = bool(self.vote_rng.random() < cfg.voting_divergence_prob)
                    values[replica.rid] = f"bad-{replica.name}" if diverges else _HEALTHY_OUTPUT
                else:
                    values[replica.rid] = _HEALTHY_OUTPUT
            consensus, divergent = majority_vote(values)
            if consensus is None:
                self.emit("VoteNoConsensus", voters=len(values))
                self._declare_security_failure("no_consensus")
            else:
                for rid in divergent:
                    replica = self.replicas[rid]
                    replica.compromised = CompromiseState.DETECTED
                    self.emit("VoteDivergence", replica=replica.name)
                    self._request_reactive(replica, "vote")
                self.emit(
                    "Vote",
                    voters=len(values),
                    divergent=len(divergent),
                    correct=1 if consensus == _HEALTHY_OUTPUT else 0,
                )
        if not self.restoring:
            self.schedule(
                cfg.service_round_period, _PRIO_DETECTION, "service_round", (self.epoch,)
            )

    # ------------------------------------------------------------------
    # security failure and manual restoration

    def _check_security_failure(self) -> None:
        if self.restoring:
            return
        active = self._active()
        compromised_active = sum(
            1 for r in active if r.compromised is not CompromiseState.NO
        )
        state = security_state(
            compromised_active=compromised_active,
            active=len(active),
            recovering=self.concurrent_recoveries,
            f=self.config.f,
        )
        if state is SecurityState.SECURITY_FAILURE:
            self._declare_security_failure(
                "compromise", compromised=compromised_active, active=len(active)
            )

    def _declare_security_failure(self, reason: str, **extra) -> None:
        if self.restoring:
            return
        if self.first_failure is None:
            self.first_failure = self.now
        self.emit("SecurityFailure", reason=reason, **extra)
        self.failure_since = self.now
        self.restoring = True
        self.epoch += 1  # cancels every pending replica-side event
        self.concurrent_recoveries = 0
        self.proactive_in_progress = False
        for replica in self.replicas:
            replica.status = ReplicaStatus.DEGRADED
        self.emit("ManualRestorationStart")
        self.schedule(
            self.config.manual_restoration_duration, _PRIO_COMPLETION,
            "restoration_end", (),
        )

    def on_restoration_end(self) -> None:
        assert self.failure_since is not None
        self.failure_time += self.now - self.failure_since
        self.failure_since = None
        self.restoring = False
        self.counts["manual"] += 1
        for replica in self.replicas:
            replica.attack_gen += 1
            self._restore_pristine(replica)
        self.emit("ManualRestorationEnd")
        self._schedule_system_cycle()

    # ------------------------------------------------------------------
    # proxies

    def _try_rotate(self, proxy: Proxy) -> None:
        offline = sorted(
            (p for p in self.proxies if p.mode is ProxyMode.OFFLINE),
            key=lambda p: (p.offline_since, p.pid),
        )
        if not offline:
            if proxy.pid not in self.pending_proxy_rotations:
                self.pending_proxy_rotations.append(proxy.pid)
                self.counts["proxy_deferred"] += 1
                self.emit("ProxyRotationDeferred", proxy=proxy.name)
            return
        replacement = offline[0]
        proxy.mode = ProxyMode.CLEANSING
        self.schedule(
            self.config.cleansing_duration, _PRIO_COMPLETION,
            "cleansing_end", (proxy.pid,),
        )
        replacement.mode = ProxyMode.ONLINE
        replacement.online_since = self.now
        self.counts["rotations"] += 1
        self.emit("ProxyRotation", old=proxy.name, new=replacement.name)
        self.schedule(
            self.config.proxy_exposure_time, _PRIO_SCHEDULER,
            "proxy_due", (replacement.pid, replacement.online_since),
        )

    def on_proxy_due(self, pid: int, expected_online_since: float) -> None:
        proxy = self.proxies[pid]
        if proxy.mode is not ProxyMode.ONLINE:
            return
        if proxy.online_since != expected_online_since:
            return
        self._try_rotate(proxy)

    def on_cleansing_end(self, pid: int) -> None:
        proxy = self.proxies[pid]
        proxy.mode = ProxyMode.OFFLINE
        proxy.offline_since = self.now
        self.emit("ProxyCleansingEnd", proxy=proxy.name)
        while self.pending_proxy_rotations:
            overdue = self.proxies[self.pending_proxy_rotations.pop(0)]
            if overdue.mode is ProxyMode.ONLINE:
                self._try_rotate(overdue)
                break

    # ------------------------------------------------------------------
    # run loop

    def _schedule_system_cycle(self) -> None:
        """(Re)arm the periodic replica-side machinery after start/reset."""
        cfg = self.config
        self.schedule(cfg.service_round_period, _PRIO_DETECTION, "service_round", (self.epoch,))
        for replica in self.replicas:
            self.schedule(
                cfg.process_poll_timeout, _PRIO_DETECTION,
                "process_poll", (replica.rid, self.epoch),
            )
        self.schedule(cfg.rejuvenation_period, _PRIO_SCHEDULER, "proactive_trigger", (self.epoch,))
        for replica in self.replicas:
            self.schedule_attack(replica)

    def run(self) -> tuple[SimMetrics, list[AuditRecord]]:
        cfg = self.config
        for replica in self.replicas:
            self.emit("ReplicaInit", replica=replica.name, os=replica.os_label)
        for proxy in self.proxies:
            if proxy.mode is ProxyMode.ONLINE:
                self.emit("ProxyOnline", proxy=proxy.name, os=proxy.os_label)
                self.schedule(
                    cfg.proxy_exposure_time, _PRIO_SCHEDULER,
                    "proxy_due", (proxy.pid, proxy.online_since),
                )
        self._schedule_system_cycle()
        for index, entry in enumerate(cfg.scripted_compromises):
            heapq.heappush(
                self.queue, (entry.time, _PRIO_ATTACK, self.seq, "scripted", (index,))
            )
            self.seq += 1

        handlers = {
            "attack": self.on_attack,
            "scripted": self.on_scripted,
            "recovery_end": self.on_recovery_end,
            "proactive_trigger": self.on_proactive_trigger,
            "proactive_end": self.on_proactive_end,
            "process_poll": self.on_process_poll,
            "service_round": self.on_service_round,
            "restoration_end": self.on_restoration_end,
            "proxy_due": self.on_proxy_due,
            "cleansing_end": self.on_cleansing_end,
        }
        while self.queue and self.queue[0][0] <= cfg.horizon:
            time, _prio, _seq, kind, data = heapq.heappop(self.queue)
            self.now = time
            handlers[kind](*data)
        self.now = cfg.horizon
        if self.failure_since is not None:
            self.failure_time += cfg.horizon - self.failure_since
        metrics = SimMetrics(
            empirical_availability=1.0 - self.failure_time / cfg.horizon,
            time_to_first_security_failure=self.first_failure,
            proactive_recoveries=self.counts["proactive"],
            reactive_system_recoveries=self.counts["reactive"],
            process_recoveries=self.counts["process"],
            proxy_rotations=self.counts["rotations"],
            manual_restorations=self.counts["manual"],
            recovery_deferrals=self.counts["recovery_deferred"],
            proxy_rotation_deferrals=self.counts["proxy_deferred"],
            max_concurrent_system_recoveries=self.max_concurrent,
        )
        return metrics, self.records


def run(config: SimConfig) -> tuple[SimMetrics, list[AuditRecord]]:
    """Run one simulation; deterministic for a fixed configuration."""
    return ReplicaSimulation(config).run()
