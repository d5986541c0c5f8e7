"""Generic discrete-time semi-Markov chain analysis.

A semi-Markov process is represented here by its embedded jump chain (a
row-stochastic transition matrix over a fixed, ordered state space) plus a
strictly positive mean holding time per state.  The module provides:

* structural validation of models,
* the stationary vector of the embedded chain,
* steady-state occupancy probabilities (holding-time weighted) and
  availability with respect to a set of "down" states,
* absorbing-chain analysis: expected visit counts per transient state and
  the mean time to absorption,
* aggregation of the occupancy vector into SLA agreeability clusters.

Everything is dense linear algebra; the intended state spaces are a few
dozen states at most.  All operations are pure functions of their inputs
and safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

ROW_SUM_TOL = 1e-12
"""Tolerance for row-stochasticity and other algebraic sum checks."""

RESIDUAL_TOL = 1e-10
"""Acceptance threshold for linear-solve residuals."""


class SemiMarkovError(Exception):
    """Base class for all model and solver errors in this module."""


class NonStochasticRow(SemiMarkovError):
    """A transition-matrix row does not sum to 1."""


class NegativeEntry(SemiMarkovError):
    """A transition-matrix entry is negative."""


class NonPositiveSojourn(SemiMarkovError):
    """A mean holding time is zero or negative."""


class DimensionMismatch(SemiMarkovError):
    """Matrix or vector dimensions disagree with the state count."""


class NoUniqueStationary(SemiMarkovError):
    """The embedded chain has more than one recurrent class."""


class SolveFailure(SemiMarkovError):
    """A linear solve did not meet the residual tolerance."""


class UnknownState(SemiMarkovError):
    """A state label is not part of the model's state space."""


class InitialStateAbsorbing(SemiMarkovError):
    """The requested start state lies in the absorbing set."""


class NoAbsorption(SemiMarkovError):
    """Absorption is not certain: some transient state cannot reach an
    absorbing state, so expected visit counts are undefined."""


class MissingState(SemiMarkovError):
    """A state has no SLA cluster assignment."""


@dataclass(frozen=True)
class StateSpace:
    """Ordered collection of unique state labels.

    The order is significant: it defines the row/column indices of every
    matrix attached to the model.
    """

    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "labels", tuple(self.labels))
        if not self.labels:
            raise DimensionMismatch("state space must not be empty")
        if len(set(self.labels)) != len(self.labels):
            raise DimensionMismatch("state labels must be unique")

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise UnknownState(f"unknown state {label!r}") from None

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self) -> Iterator[str]:
        return iter(self.labels)

    def __contains__(self, label: object) -> bool:
        return label in self.labels


@dataclass
class SemiMarkovModel:
    """Embedded jump chain plus mean holding time per state.

    ``transition[i, j]`` is the probability that the next state is
    ``states.labels[j]`` given the chain currently occupies
    ``states.labels[i]``; ``sojourn_mean[i]`` is the mean holding time in
    state ``i`` in abstract time units.  Use :func:`validate_model` to
    check the structural invariants.
    """

    states: StateSpace
    transition: np.ndarray
    sojourn_mean: np.ndarray

    def __post_init__(self) -> None:
        self.transition = np.asarray(self.transition, dtype=float)
        self.sojourn_mean = np.asarray(self.sojourn_mean, dtype=float)


@dataclass(frozen=True)
class StationaryResult:
    """Stationary vector of the jump chain and occupancy probabilities.

    ``nu`` solves nu = nu @ P with sum(nu) = 1.  ``pi`` weights nu by the
    mean holding times: pi_i = nu_i h_i / sum_j nu_j h_j, the long-run
    fraction of time the process spends in each state.
    """

    states: StateSpace
    nu: np.ndarray
    pi: np.ndarray


@dataclass(frozen=True)
class AbsorbingPartition:
    """Transient/absorbing split of a model.

    ``Q`` holds transient-to-transient probabilities, ``C`` transient-to-
    absorbing ones; both use the model's row order restricted to each
    subset.  ``initial`` is a distribution over the transient states.
    """

    transient: StateSpace
    absorbing: tuple[str, ...]
    Q: np.ndarray
    C: np.ndarray
    initial: np.ndarray


@dataclass(frozen=True)
class VisitCounts:
    """Expected number of visits to each transient state before absorption,
    aligned with the partition's transient order."""

    V: np.ndarray


class SlaCluster(str, Enum):
    """Agreeability clusters for steady-state SLA analysis."""

    HIGHLY_SATISFYING = "HighlySatisfying"
    SATISFYING = "Satisfying"
    VIOLATING = "Violating"
    HIGHLY_VIOLATING = "HighlyViolating"


@dataclass(frozen=True)
class SlaClusterMap:
    """Total assignment of state labels to SLA clusters."""

    assignment: Mapping[str, SlaCluster]


def validate_model(model: SemiMarkovModel) -> SemiMarkovModel:
    """Check all structural invariants and return the model unchanged.

    Raises the most specific error for the first violation found, naming
    the offending state or row: DimensionMismatch, NegativeEntry,
    NonStochasticRow, or NonPositiveSojourn.
    """
    n = len(model.states)
    P = model.transition
    h = model.sojourn_mean
    if P.shape != (n, n):
        raise DimensionMismatch(
            f"transition matrix is {P.shape}, expected ({n}, {n})"
        )
    if h.shape != (n,):
        raise DimensionMismatch(
            f"sojourn_mean has length {h.shape}, expected {n}"
        )
    for i, label in enumerate(model.states):
        row = P[i]
        neg = np.flatnonzero(row < 0.0)
        if neg.size:
            j = int(neg[0])
            raise NegativeEntry(
                f"transition[{label!r} -> {model.states.labels[j]!r}] = {row[j]!r} is negative"
            )
        total = float(row.sum())
        if abs(total - 1.0) > ROW_SUM_TOL:
            raise NonStochasticRow(
                f"row {label!r} sums to {total!r}, expected 1 within {ROW_SUM_TOL}"
            )
        if not h[i] > 0.0:
            raise NonPositiveSojourn(
                f"sojourn_mean[{label!r}] = {h[i]!r} must be > 0"
            )
    return model


def embedded_stationary(model: SemiMarkovModel) -> np.ndarray:
    """Stationary probability vector of the embedded jump chain.

    Solves the augmented dense system (nu @ (I - P) = 0, sum(nu) = 1) by
    least squares and verifies the residual.  A rank test on (I - P)
    rejects chains with more than one recurrent class, for which no unique
    stationary vector exists.
    """
    validate_model(model)
    P = model.transition
    n = len(model.states)
    if np.linalg.matrix_rank(np.eye(n) - P) < n - 1:
        raise NoUniqueStationary(
            "embedded chain has multiple recurrent classes"
        )
    A = np.vstack([np.eye(n) - P.T, np.ones((1, n))])
    b = np.zeros(n + 1)
    b[n] = 1.0
    nu, *_ = np.linalg.lstsq(A, b, rcond=None)
    if np.any(nu < -ROW_SUM_TOL):
        raise SolveFailure(f"stationary vector has negative entries: {nu!r}")
    nu = np.where(nu < 0.0, 0.0, nu)
    nu = nu / nu.sum()
    residual = float(np.max(np.abs(nu @ P - nu)))
    if residual > RESIDUAL_TOL:
        raise SolveFailure(f"stationary residual {residual!r} exceeds {RESIDUAL_TOL}")
    return nu


def smp_steady_state(model: SemiMarkovModel) -> StationaryResult:
    """Jump-chain stationary vector and holding-time-weighted occupancy."""
    nu = embedded_stationary(model)
    weights = nu * model.sojourn_mean
    pi = weights / weights.sum()
    return StationaryResult(states=model.states, nu=nu, pi=pi)


def availability(model: SemiMarkovModel, unavailable: Iterable[str]) -> float:
    """Steady-state probability of being outside the given down states.

    Computed as 1 minus the summed occupancy of ``unavailable``; an empty
    set yields 1, the full state space yields 0.
    """
    result = smp_steady_state(model)
    idx = [model.states.index(label) for label in unavailable]
    a = 1.0 - float(result.pi[idx].sum()) if idx else 1.0
    return min(1.0, max(0.0, a))


def absorbing_partition(
    model: SemiMarkovModel,
    absorbing: Iterable[str],
    initial_state: str,
) -> AbsorbingPartition:
    """Split the model into transient and absorbing states.

    Q and C are extracted from the transition matrix by index selection;
    row order follows the model's state order restricted to each subset.
    The initial distribution is a point mass on ``initial_state``, which
    must be transient.
    """
    validate_model(model)
    absorbing_set = set(absorbing)
    if not absorbing_set:
        raise ValueError("absorbing set must not be empty")
    for label in absorbing_set:
        model.states.index(label)
    if initial_state in absorbing_set:
        raise InitialStateAbsorbing(
            f"initial state {initial_state!r} is in the absorbing set"
        )
    transient_labels = tuple(s for s in model.states if s not in absorbing_set)
    absorbing_labels = tuple(s for s in model.states if s in absorbing_set)
    t_idx = [model.states.index(s) for s in transient_labels]
    a_idx = [model.states.index(s) for s in absorbing_labels]
    Q = model.transition[np.ix_(t_idx, t_idx)]
    C = model.transition[np.ix_(t_idx, a_idx)]
    transient = StateSpace(transient_labels)
    initial = np.zeros(len(transient_labels))
    initial[transient.index(initial_state)] = 1.0
    return AbsorbingPartition(
        transient=transient,
        absorbing=absorbing_labels,
        Q=Q,
        C=C,
        initial=initial,
    )


def _absorption_certain(partition: AbsorbingPartition) -> bool:
    """Exact graph test: every transient state reaches an absorbing one.

    Equivalent to (I - Q) being nonsingular, but immune to the numeric
    ambiguity of near-singular factorizations.
    """
    m = len(partition.transient)
    reaches = partition.C.sum(axis=1) > 0.0
    changed = True
    while changed:
        changed = False
        for i in range(m):
            if not reaches[i] and bool(np.any((partition.Q[i] > 0.0) & reaches)):
                reaches[i] = True
                changed = True
    return bool(reaches.all())


def visit_counts(partition: AbsorbingPartition) -> VisitCounts:
    """Expected visits to each transient state before absorption.

    Solves V (I - Q) = initial.  Raises NoAbsorption when some transient
    state has no path into the absorbing set (the system is singular and
    the expectation diverges).
    """
    if not _absorption_certain(partition):
        raise NoAbsorption(
            "some transient state cannot reach the absorbing set"
        )
    m = len(partition.transient)
    A = np.eye(m) - partition.Q
    try:
        V = np.linalg.solve(A.T, partition.initial)
    except np.linalg.LinAlgError as exc:
        raise NoAbsorption(f"(I - Q) is singular: {exc}") from None
    scale = max(1.0, float(np.max(np.abs(V))))
    residual = float(np.max(np.abs(V @ A - partition.initial)))
    if not np.all(np.isfinite(V)) or residual > RESIDUAL_TOL * scale:
        raise SolveFailure(
            f"visit-count residual {residual!r} exceeds tolerance"
        )
    V = np.where((V < 0.0) & (V > -ROW_SUM_TOL), 0.0, V)
    return VisitCounts(V=V)


def mean_time_to_absorption(
    partition: AbsorbingPartition,
    sojourn_mean: Sequence[float] | np.ndarray,
    *,
    infinite_ok: bool = False,
) -> float:
    """Expected total holding time spent in transient states.

    ``sojourn_mean`` supplies the mean holding time of each transient
    state, aligned with the partition's transient order.  When absorption
    is not certain the result is unbounded: with ``infinite_ok`` the
    function returns ``inf`` instead of raising NoAbsorption.
    """
    h = np.asarray(sojourn_mean, dtype=float)
    if h.shape != (len(partition.transient),):
        raise DimensionMismatch(
            f"sojourn_mean has length {h.shape}, expected {len(partition.transient)}"
        )
    try:
        counts = visit_counts(partition)
    except NoAbsorption:
        if infinite_ok:
            return float("inf")
        raise
    return float(counts.V @ h)


def sla_agreeability(
    result: StationaryResult, clusters: SlaClusterMap
) -> dict[SlaCluster, float]:
    """Sum occupancy probabilities per SLA cluster.

    Every state must be assigned a cluster; the four sums total 1 up to
    the occupancy normalization.
    """
    totals = {cluster: 0.0 for cluster in SlaCluster}
    for i, label in enumerate(result.states):
        if label not in clusters.assignment:
            raise MissingState(f"state {label!r} has no SLA cluster")
        totals[clusters.assignment[label]] += float(result.pi[i])
    return totals
