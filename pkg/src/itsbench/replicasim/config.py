"""Configuration for the replicated-architecture simulation.

The replica count is never configured directly: it is always
n = 2f + 1 + k, so a strict voting majority of healthy replicas survives
up to f simultaneous compromises while up to k replicas are away for
system-level recovery.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class ConfigInvalid(Exception):
    """A simulation configuration field violates its constraints."""


@dataclass(frozen=True)
class ScriptedCompromise:
    """Deterministic compromise injection, bypassing the random attacker.

    ``scope`` is ``"system"`` (the replica emits divergent outputs until
    recovered) or ``"process"`` (one running process turns suspect).
    """

    time: float
    replica: int
    scope: str = "system"


@dataclass(frozen=True)
class SimConfig:
    """All knobs of one simulation run; replicas derive as n = 2f + 1 + k.

    Durations and the horizon share one abstract time unit.  The proxy
    pool cycles online -> cleansing -> offline -> online; replicas run
    ``process_count`` managed processes, each with ``standby_per_process``
    warm standbys for process-level recovery.
    """

    f: int = 1
    k: int = 1
    rejuvenation_period: float = 50.0
    system_recovery_duration: float = 5.0
    process_poll_timeout: float = 2.0
    standby_per_process: int = 1
    process_count: int = 2
    proxy_count: int = 3
    proxy_exposure_time: float = 20.0
    cleansing_duration: float = 4.0
    attack_rate: float = 0.01
    process_infection_share: float = 0.5
    inspector_detection_prob: float = 0.75
    inspector_false_positive_prob: float = 0.0
    voting_divergence_prob: float = 0.9
    service_round_period: float = 1.0
    manual_restoration_duration: float = 25.0
    online_proxy_target: int = 1
    horizon: float = 1000.0
    seed: int = 0
    os_pool: tuple[str, ...] = ()
    scripted_compromises: tuple[ScriptedCompromise, ...] = ()

    @property
    def n(self) -> int:
        """Total replica count."""
        return 2 * self.f + 1 + self.k

    def effective_os_pool(self) -> tuple[str, ...]:
        """Configured diversity labels, or a generated pool of n + 2."""
        if self.os_pool:
            return self.os_pool
        return tuple(f"os-{i:02d}" for i in range(self.n + 2))

    def validated(self) -> SimConfig:
        """Return self after checking every field constraint."""
        if self.f < 1:
            raise ConfigInvalid(f"f = {self.f} must be >= 1")
        if self.k < 1:
            raise ConfigInvalid(f"k = {self.k} must be >= 1")
        durations = (
            ("rejuvenation_period", self.rejuvenation_period),
            ("system_recovery_duration", self.system_recovery_duration),
            ("process_poll_timeout", self.process_poll_timeout),
            ("proxy_exposure_time", self.proxy_exposure_time),
            ("cleansing_duration", self.cleansing_duration),
            ("service_round_period", self.service_round_period),
            ("manual_restoration_duration", self.manual_restoration_duration),
            ("horizon", self.horizon),
        )
        for name, value in durations:
            if not value > 0.0:
                raise ConfigInvalid(f"{name} = {value!r} must be > 0")
        probabilities = (
            ("process_infection_share", self.process_infection_share),
            ("inspector_detection_prob", self.inspector_detection_prob),
            ("inspector_false_positive_prob", self.inspector_false_positive_prob),
            ("voting_divergence_prob", self.voting_divergence_prob),
        )
        for name, value in probabilities:
            if not 0.0 <= value <= 1.0:
                raise ConfigInvalid(f"{name} = {value!r} not in [0, 1]")
        if self.attack_rate < 0.0:
            raise ConfigInvalid(f"attack_rate = {self.attack_rate!r} must be >= 0")
        if self.standby_per_process < 0:
            raise ConfigInvalid("standby_per_process must be >= 0")
        if self.process_count < 1:
            raise ConfigInvalid("process_count must be >= 1")
        if self.proxy_count < 2:
            raise ConfigInvalid(f"proxy_count = {self.proxy_count} must be >= 2")
        if not 1 <= self.online_proxy_target <= self.proxy_count - 1:
            raise ConfigInvalid(
                "online_proxy_target must lie in [1, proxy_count - 1] so "
                "rotation always has an offline proxy to promote"
            )
        pool = self.effective_os_pool()
        if len(set(pool)) != len(pool):
            raise ConfigInvalid("os_pool labels must be unique")
        if len(pool) < self.n + 1:
            raise ConfigInvalid(
                f"os_pool needs at least n + 1 = {self.n + 1} labels so a "
                f"recovering replica can rotate to an unused one"
            )
        for entry in self.scripted_compromises:
            if entry.scope not in ("system", "process"):
                raise ConfigInvalid(
                    f"scripted scope {entry.scope!r} must be 'system' or 'process'"
                )
            if not 0 <= entry.replica < self.n:
                raise ConfigInvalid(
                    f"scripted replica {entry.replica} not in [0, {self.n})"
                )
            if entry.time < 0.0:
                raise ConfigInvalid("scripted time must be >= 0")
        return self
