"""Concrete intrusion-tolerant-system models and their closed forms.

Three architecture variants share one security state space:

* ``Proposed`` - combined proactive + reactive recovery; all ten states.
* ``SITAR`` - detection-triggered recovery only, so an undetected
  intrusion can never be masked: no UMC state.
* ``SCIT`` - periodic self-cleansing only, no detection: intrusions are
  either masked proactively (UMC) or lead straight to failure, so only
  {G, V, I, UMC, F} exist.

State mnemonics: G good, V vulnerable, I intruded, DMC/UMC detected/
undetected masked compromise, UNC/DNC undetected/detected non-masked
compromise, GD graceful degradation, FS fail-secure, F failed.

For each variant the module builds the semi-Markov model consumed by the
generic solver and also evaluates hand-coded closed-form expressions for
steady-state availability and mean time to security failure (MTTSF).  The
two routes are independent and are cross-checked in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from . import semimarkov as smp
from .semimarkov import (
    AbsorbingPartition,
    SemiMarkovModel,
    SlaCluster,
    SlaClusterMap,
    StateSpace,
)

STATE_ORDER = ("G", "V", "I", "DMC", "UNC", "UMC", "DNC", "FS", "GD", "F")

BRANCH_SUM_TOL = 1e-12

INFINITE_DENOMINATOR = 1e-15
"""MTTSF denominators at or below this are reported as infinite."""


class ParameterError(Exception):
    """Base class for parameter validation errors."""


class BranchSumViolation(ParameterError):
    """A branch-probability row does not sum to 1 for the variant."""


class InapplicableParameter(ParameterError):
    """A probability is nonzero for a state the variant does not have."""


class ParameterOutOfRange(ParameterError):
    """A probability is outside [0, 1] or a sojourn mean is not positive."""


class ZeroIntrusionProbability(ParameterError):
    """MTTSF is unbounded when intrusions never occur (p_I = 0)."""


class ItsVariant(str, Enum):
    """The three architectures under comparison."""

    PROPOSED = "Proposed"
    SITAR = "SITAR"
    SCIT = "SCIT"

    @property
    def states(self) -> tuple[str, ...]:
        if self is ItsVariant.PROPOSED:
            return STATE_ORDER
        if self is ItsVariant.SITAR:
            return tuple(s for s in STATE_ORDER if s != "UMC")
        return ("G", "V", "I", "UMC", "F")


class ProjectionMode(str, Enum):
    """How a full (Proposed-style) parameter set maps onto SITAR.

    ``renormalize`` removes the proactively-masked branch and rescales the
    remaining intrusion outcomes to keep their sum at 1.  ``shift`` moves
    the undetected-masked mass to undetected-not-masked instead: without
    proactive recovery those intrusions stay undetected and unmasked.
    """

    RENORMALIZE = "renormalize"
    SHIFT = "shift"


@dataclass
class ItsParams:
    """Branch probabilities and mean sojourn times for the state model.

    ``p_I`` is the probability that a vulnerable system is successfully
    intruded; ``p_DM``/``p_UM``/``p_UN``/``p_DN`` split the outcome of an
    intrusion (detected-masked, undetected-masked, undetected-not-masked,
    detected-not-masked); ``p_FS``/``p_GD``/``p_F`` split the outcome of a
    detected-but-not-masked compromise.  ``h`` maps every state label to
    its mean sojourn time in abstract time units.
    """

    p_I: float
    p_DM: float
    p_UM: float
    p_UN: float
    p_DN: float
    p_FS: float
    p_GD: float
    p_F: float
    h: dict[str, float] = field(
        default_factory=lambda: {s: 1.0 for s in STATE_ORDER}
    )

    PROBABILITY_FIELDS = (
        "p_I", "p_DM", "p_UM", "p_UN", "p_DN", "p_FS", "p_GD", "p_F",
    )

    def probability(self, name: str) -> float:
        if name not in self.PROBABILITY_FIELDS:
            raise KeyError(name)
        return float(getattr(self, name))


@dataclass(frozen=True)
class ModelBundle:
    """A built variant model plus the state sets its metrics refer to."""

    variant: ItsVariant
    model: SemiMarkovModel
    unavailable: frozenset[str]
    absorbing: frozenset[str]
    sla: SlaClusterMap


_SLA_BY_STATE = {
    "G": SlaCluster.HIGHLY_SATISFYING,
    "V": SlaCluster.HIGHLY_SATISFYING,
    "I": SlaCluster.SATISFYING,
    "DMC": SlaCluster.SATISFYING,
    "UMC": SlaCluster.SATISFYING,
    "DNC": SlaCluster.VIOLATING,
    "GD": SlaCluster.VIOLATING,
    "UNC": SlaCluster.HIGHLY_VIOLATING,
    "FS": SlaCluster.HIGHLY_VIOLATING,
    "F": SlaCluster.HIGHLY_VIOLATING,
}


def sla_clusters(variant: ItsVariant) -> SlaClusterMap:
    """Default agreeability clustering restricted to the variant's states."""
    return SlaClusterMap(
        assignment={s: _SLA_BY_STATE[s] for s in variant.states}
    )


def _check_bounds(params: ItsParams) -> None:
    for name in ItsParams.PROBABILITY_FIELDS:
        value = getattr(params, name)
        if not 0.0 <= value <= 1.0:
            raise ParameterOutOfRange(f"{name} = {value!r} not in [0, 1]")
    for state in STATE_ORDER:
        if state not in params.h:
            raise ParameterOutOfRange(f"h[{state!r}] is missing")
        if not params.h[state] > 0.0:
            raise ParameterOutOfRange(
                f"h[{state!r}] = {params.h[state]!r} must be > 0"
            )


def _check_sum(row: str, total: float) -> None:
    if abs(total - 1.0) > BRANCH_SUM_TOL:
        raise BranchSumViolation(
            f"branch probabilities out of state {row} sum to {total!r}, "
            f"expected 1 within {BRANCH_SUM_TOL}"
        )


def _check_zero(variant: ItsVariant, params: ItsParams, names: tuple[str, ...]) -> None:
    for name in names:
        if abs(getattr(params, name)) > BRANCH_SUM_TOL:
            raise InapplicableParameter(
                f"{name} = {getattr(params, name)!r} must be 0 for {variant.value}: "
                f"the corresponding state does not exist in this variant"
            )


def validate_params(variant: ItsVariant, params: ItsParams) -> ItsParams:
    """Validate a parameter set against a variant's state structure.

    Proposed requires both branch rows (out of I and out of DNC) to sum
    to 1.  SITAR has no UMC, so p_UM must be 0 and the remaining I-row
    must sum to 1.  SCIT's intrusions branch only to UMC or F, so p_DM,
    p_UN, p_DN, p_FS and p_GD must be 0 and p_UM + p_F must be 1.
    """
    _check_bounds(params)
    if variant is ItsVariant.PROPOSED:
        _check_sum("I", params.p_DM + params.p_UM + params.p_UN + params.p_DN)
        _check_sum("DNC", params.p_FS + params.p_GD + params.p_F)
    elif variant is ItsVariant.SITAR:
        _check_zero(variant, params, ("p_UM",))
        _check_sum("I", params.p_DM + params.p_UN + params.p_DN)
        _check_sum("DNC", params.p_FS + params.p_GD + params.p_F)
    else:
        _check_zero(variant, params, ("p_DM", "p_UN", "p_DN", "p_FS", "p_GD"))
        _check_sum("I", params.p_UM + params.p_F)
    return params


def build_model(variant: ItsVariant, params: ItsParams) -> ModelBundle:
    """Construct the variant's semi-Markov model and metric state sets.

    Common structure: G moves to V with certainty (resistance wears off),
    V returns to G or is intruded, every recovery/restoration state
    returns to G with certainty.  The I row and the presence of DNC and
    its successors differ per variant.
    """
    validate_params(variant, params)
    labels = variant.states
    states = StateSpace(labels)
    n = len(labels)
    idx = {s: i for i, s in enumerate(labels)}
    P = np.zeros((n, n))
    P[idx["G"], idx["V"]] = 1.0
    P[idx["V"], idx["G"]] = 1.0 - params.p_I
    P[idx["V"], idx["I"]] = params.p_I
    if variant is ItsVariant.PROPOSED:
        P[idx["I"], idx["DMC"]] = params.p_DM
        P[idx["I"], idx["UNC"]] = params.p_UN
        P[idx["I"], idx["UMC"]] = params.p_UM
        P[idx["I"], idx["DNC"]] = params.p_DN
    elif variant is ItsVariant.SITAR:
        P[idx["I"], idx["DMC"]] = params.p_DM
        P[idx["I"], idx["UNC"]] = params.p_UN
        P[idx["I"], idx["DNC"]] = params.p_DN
    else:
        P[idx["I"], idx["UMC"]] = params.p_UM
        P[idx["I"], idx["F"]] = params.p_F
    if "DNC" in idx:
        P[idx["DNC"], idx["FS"]] = params.p_FS
        P[idx["DNC"], idx["GD"]] = params.p_GD
        P[idx["DNC"], idx["F"]] = params.p_F
    for s in labels:
        if s not in ("G", "V", "I", "DNC"):
            P[idx[s], idx["G"]] = 1.0
    model = smp.validate_model(
        SemiMarkovModel(
            states=states,
            transition=P,
            sojourn_mean=np.array([params.h[s] for s in labels]),
        )
    )
    if variant is ItsVariant.SCIT:
        unavailable = frozenset({"F"})
        absorbing = frozenset({"F"})
    else:
        unavailable = frozenset({"UNC", "FS", "F"}) & set(labels)
        absorbing = frozenset({"UNC", "GD", "FS", "F"}) & set(labels)
    return ModelBundle(
        variant=variant,
        model=model,
        unavailable=unavailable,
        absorbing=absorbing,
        sla=sla_clusters(variant),
    )


def closed_form_availability(variant: ItsVariant, params: ItsParams) -> float:
    """Hand-coded steady-state availability expression for a variant.

    Serves as the independent oracle for the generic stationary solver:
    the numerator collects the occupancy weight of the down states, the
    denominator the total weight of one regeneration cycle through G.
    """
    validate_params(variant, params)
    h = params.h
    p_I, p_DN = params.p_I, params.p_DN
    if variant is ItsVariant.SCIT:
        num = h["F"] * p_I * params.p_F
        den = h["G"] + h["V"] + p_I * (
            h["I"] + h["UMC"] * params.p_UM + h["F"] * params.p_F
        )
        return 1.0 - num / den
    num = (
        h["UNC"] * p_I * params.p_UN
        + h["F"] * p_I * p_DN * params.p_F
        + h["FS"] * p_I * p_DN * params.p_FS
    )
    den = h["G"] + h["V"] + p_I * (
        h["I"]
        + h["DMC"] * params.p_DM
        + h["UNC"] * params.p_UN
        + (h["UMC"] * params.p_UM if variant is ItsVariant.PROPOSED else 0.0)
        + h["DNC"] * p_DN
        + h["GD"] * p_DN * params.p_GD
        + h["FS"] * p_DN * params.p_FS
        + h["F"] * p_DN * params.p_F
    )
    return 1.0 - num / den


def closed_form_mttsf(variant: ItsVariant, params: ItsParams) -> float:
    """Hand-coded mean time to security failure for a variant.

    Counts the expected sojourn time accumulated in transient states
    before absorption into a security-compromised state, starting from G.
    Returns ``inf`` when masking is (almost) certain and absorption never
    happens; raises ZeroIntrusionProbability for p_I = 0, where the 1/p_I
    factors are undefined.
    """
    validate_params(variant, params)
    if params.p_I == 0.0:
        raise ZeroIntrusionProbability("MTTSF is unbounded when p_I = 0")
    h = params.h
    per_intrusion = h["G"] / params.p_I + h["V"] / params.p_I + h["I"]
    if variant is ItsVariant.PROPOSED:
        num = per_intrusion + h["DMC"] * params.p_DM + h["UMC"] * params.p_UM \
            + h["DNC"] * params.p_DN
        den = 1.0 - params.p_DM - params.p_UM
    elif variant is ItsVariant.SITAR:
        num = per_intrusion + h["DMC"] * params.p_DM + h["DNC"] * params.p_DN
        den = 1.0 - params.p_DM
    else:
        num = per_intrusion + h["UMC"] * params.p_UM
        den = 1.0 - params.p_UM
    if den <= INFINITE_DENOMINATOR:
        return math.inf
    return num / den


def masking_probability(params: ItsParams) -> tuple[float, float]:
    """Split intrusion outcomes into masked and not-masked probabilities.

    Returns (p_M, p_N) with p_M = p_DM + p_UM.  Because the four branch
    probabilities are validated to sum to 1, p_N equals p_UN + p_DN up to
    the validation tolerance; it is returned as 1 - p_M so the pair always
    closes exactly.
    """
    validate_params(ItsVariant.PROPOSED, params)
    p_m = params.p_DM + params.p_UM
    return p_m, 1.0 - p_m


def default_params() -> ItsParams:
    """Documented baseline parameter set.

    These are engineering assumptions, not published measurements: a
    day-scale mean time to become vulnerable (h_G = 24, hour units), slow
    manual restoration of failed/undetected-compromised states, and a
    moderately capable detector.  Reports derived from this baseline must
    carry an assumption flag.
    """
    return ItsParams(
        p_I=0.3,
        p_DM=0.35,
        p_UM=0.25,
        p_UN=0.15,
        p_DN=0.25,
        p_FS=1.0 / 3.0,
        p_GD=1.0 / 3.0,
        p_F=1.0 / 3.0,
        h={
            "G": 24.0,
            "V": 1.0,
            "I": 1.0,
            "DMC": 1.0,
            "UNC": 4.0,
            "UMC": 1.0,
            "DNC": 1.0,
            "FS": 2.0,
            "GD": 2.0,
            "F": 4.0,
        },
    )


def project_params(
    variant: ItsVariant,
    params: ItsParams,
    mode: ProjectionMode = ProjectionMode.RENORMALIZE,
) -> ItsParams:
    """Map a full (Proposed-valid) parameter set onto another variant.

    SITAR: see :class:`ProjectionMode`.  SCIT has a single rule: all
    masking becomes proactive (p_UM' = p_DM + p_UM) and every non-masked
    intrusion is a failure (p_F' = p_UN + p_DN).  Proposed is returned
    unchanged.
    """
    validate_params(ItsVariant.PROPOSED, params)
    if variant is ItsVariant.PROPOSED:
        return params
    if variant is ItsVariant.SITAR:
        if mode is ProjectionMode.RENORMALIZE:
            remaining = 1.0 - params.p_UM
            if remaining <= 0.0:
                raise InapplicableParameter(
                    "p_UM = 1 leaves no probability mass to renormalize for SITAR"
                )
            projected = replace(
                params,
                p_DM=params.p_DM / remaining,
                p_UM=0.0,
                p_UN=params.p_UN / remaining,
                p_DN=params.p_DN / remaining,
                h=dict(params.h),
            )
        else:
            projected = replace(
                params,
                p_UM=0.0,
                p_UN=params.p_UN + params.p_UM,
                h=dict(params.h),
            )
    else:
        projected = replace(
            params,
            p_DM=0.0,
            p_UM=params.p_DM + params.p_UM,
            p_UN=0.0,
            p_DN=0.0,
            p_FS=0.0,
            p_GD=0.0,
            p_F=params.p_UN + params.p_DN,
            h=dict(params.h),
        )
    return validate_params(variant, projected)


def bundle_partition(bundle: ModelBundle) -> AbsorbingPartition:
    """Transient/absorbing split of a bundle, starting from state G."""
    return smp.absorbing_partition(bundle.model, bundle.absorbing, "G")


def bundle_availability(bundle: ModelBundle) -> float:
    """Availability of a bundle via the generic stationary solver."""
    return smp.availability(bundle.model, bundle.unavailable)


def bundle_mttsf(bundle: ModelBundle, *, infinite_ok: bool = True) -> float:
    """MTTSF of a bundle via the generic absorption analysis."""
    partition = bundle_partition(bundle)
    h = [
        float(bundle.model.sojourn_mean[bundle.model.states.index(label)])
        for label in partition.transient
    ]
    return smp.mean_time_to_absorption(partition, h, infinite_ok=infinite_ok)
