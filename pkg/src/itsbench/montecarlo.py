"""Monte Carlo cross-checks for the semi-Markov analytics.

Two samplers: one estimates steady-state availability by walking the jump
chain with sampled holding times over a fixed horizon, the other samples
the time to absorption of a transient/absorbing partition.  Both are
deterministic given (seed, configuration): replication ``i`` always draws
from the stream ``SeedSequence(seed, spawn_key=(i,))``, so increasing the
replication count never perturbs earlier replications.

Holding-time families are parameterized by the mean, which is the only
moment the steady-state quantities depend on: ``deterministic`` always
returns the mean, ``exponential`` has that mean, and ``uniform`` draws
from [0, 2 * mean].
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .semimarkov import (
    AbsorbingPartition,
    DimensionMismatch,
    SemiMarkovError,
    SemiMarkovModel,
    validate_model,
    visit_counts,
)

SOJOURN_FAMILIES = ("deterministic", "exponential", "uniform")

_Z95 = 1.959963984540054  # two-sided 95% normal quantile


class MaxStepsExceeded(SemiMarkovError):
    """An absorption replication hit the step guard, which signals a
    (near-)singular partition rather than ordinary bad luck."""


@dataclass(frozen=True)
class McEstimate:
    """Point estimate with a 95% confidence half-width.

    ``ci_half_width`` is zero when fewer than two replications were run or
    the replications agreed exactly.
    """

    mean: float
    ci_half_width: float
    samples: int


def replication_rng(seed: int, index: int) -> np.random.Generator:
    """Independent per-replication generator for a given root seed."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def _check_family(sojourn_dist: str) -> None:
    if sojourn_dist not in SOJOURN_FAMILIES:
        raise ValueError(
            f"unknown sojourn distribution {sojourn_dist!r}; "
            f"expected one of {SOJOURN_FAMILIES}"
        )


def _draw_sojourn(rng: np.random.Generator, family: str, mean: float) -> float:
    if family == "deterministic":
        return mean
    if family == "exponential":
        return float(rng.exponential(mean))
    return float(rng.uniform(0.0, 2.0 * mean))


def _next_index(rng: np.random.Generator, cumulative: np.ndarray) -> int:
    idx = int(np.searchsorted(cumulative, rng.random(), side="right"))
    return min(idx, len(cumulative) - 1)


def _summarize(samples: np.ndarray) -> McEstimate:
    n = len(samples)
    mean = float(np.mean(samples))
    if n < 2:
        return McEstimate(mean=mean, ci_half_width=0.0, samples=n)
    half = _Z95 * float(np.std(samples, ddof=1)) / float(np.sqrt(n))
    return McEstimate(mean=mean, ci_half_width=half, samples=n)


def simulate_chain(
    model: SemiMarkovModel,
    unavailable: Iterable[str],
    *,
    sojourn_dist: str = "exponential",
    seed: int = 0,
    replications: int = 100,
    horizon: float = 1000.0,
    start_state: str | None = None,
) -> McEstimate:
    """Estimate steady-state availability by simulating the chain.

    Each replication walks the jump chain from ``start_state`` (default:
    the first state) up to ``horizon``, accumulating the fraction of
    elapsed time spent outside the ``unavailable`` states; the final
    holding interval is truncated at the horizon.
    """
    validate_model(model)
    _check_family(sojourn_dist)
    if horizon <= 0.0:
        raise ValueError("horizon must be positive")
    if replications < 1:
        raise ValueError("replications must be >= 1")
    down = np.zeros(len(model.states), dtype=bool)
    for label in unavailable:
        down[model.states.index(label)] = True
    start = model.states.index(start_state) if start_state is not None else 0
    cumulative = np.cumsum(model.transition, axis=1)
    h = model.sojourn_mean
    samples = np.empty(replications)
    for rep in range(replications):
        rng = replication_rng(seed, rep)
        t = 0.0
        state = start
        down_time = 0.0
        while t < horizon:
            dwell = _draw_sojourn(rng, sojourn_dist, float(h[state]))
            end = min(t + dwell, horizon)
            if down[state]:
                down_time += end - t
            t += dwell
            if t >= horizon:
                break
            state = _next_index(rng, cumulative[state])
        samples[rep] = 1.0 - down_time / horizon
    return _summarize(samples)


def simulate_absorption(
    partition: AbsorbingPartition,
    sojourn_mean: Sequence[float] | np.ndarray,
    *,
    sojourn_dist: str = "exponential",
    seed: int = 0,
    replications: int = 1000,
    max_steps: int | None = None,
) -> McEstimate:
    """Sample the time to absorption of a transient/absorbing partition.

    The start state of each replication is drawn from the partition's
    initial distribution; sampled holding times of visited transient
    states are accumulated until the chain jumps into the absorbing set.
    Without an explicit ``max_steps`` guard the partition must have
    certain absorption (checked up front); with a guard, a replication
    exceeding it raises MaxStepsExceeded.
    """
    _check_family(sojourn_dist)
    if replications < 1:
        raise ValueError("replications must be >= 1")
    h = np.asarray(sojourn_mean, dtype=float)
    m = len(partition.transient)
    if h.shape != (m,):
        raise DimensionMismatch(
            f"sojourn_mean has length {h.shape}, expected {m}"
        )
    if max_steps is None:
        visit_counts(partition)  # raises NoAbsorption when not certain
        step_guard = 100_000_000
    else:
        step_guard = max_steps
    combined = np.cumsum(np.hstack([partition.Q, partition.C]), axis=1)
    initial_cum = np.cumsum(partition.initial)
    samples = np.empty(replications)
    for rep in range(replications):
        rng = replication_rng(seed, rep)
        state = _next_index(rng, initial_cum)
        elapsed = 0.0
        steps = 0
        while True:
            steps += 1
            if steps > step_guard:
                raise MaxStepsExceeded(
                    f"replication {rep} exceeded {step_guard} steps before absorbing"
                )
            elapsed += _draw_sojourn(rng, sojourn_dist, float(h[state]))
            nxt = _next_index(rng, combined[state])
            if nxt >= m:
                break
            state = nxt
        samples[rep] = elapsed
    return _summarize(samples)
