"""Shared test helpers.

The matrix builders here are written out row by row, independently of the
package's model construction code, so tests can cross-check the built
models against a literal reference.  The samplers produce valid random
parameter sets per variant for the oracle-equivalence checks.
"""

from __future__ import annotations

import numpy as np

from itsbench.models import STATE_ORDER, ItsParams, ItsVariant
from itsbench.semimarkov import SemiMarkovModel, StateSpace

SITAR_ORDER = tuple(s for s in STATE_ORDER if s != "UMC")
SCIT_ORDER = ("G", "V", "I", "UMC", "F")


def hand_proposed_matrix(p: ItsParams) -> np.ndarray:
    """Reference transition matrix of the full model, row by row."""
    i = {s: n for n, s in enumerate(STATE_ORDER)}
    P = np.zeros((10, 10))
    P[i["G"], i["V"]] = 1.0
    P[i["V"], i["G"]] = 1.0 - p.p_I
    P[i["V"], i["I"]] = p.p_I
    P[i["I"], i["DMC"]] = p.p_DM
    P[i["I"], i["UNC"]] = p.p_UN
    P[i["I"], i["UMC"]] = p.p_UM
    P[i["I"], i["DNC"]] = p.p_DN
    P[i["DMC"], i["G"]] = 1.0
    P[i["UNC"], i["G"]] = 1.0
    P[i["UMC"], i["G"]] = 1.0
    P[i["DNC"], i["FS"]] = p.p_FS
    P[i["DNC"], i["GD"]] = p.p_GD
    P[i["DNC"], i["F"]] = p.p_F
    P[i["FS"], i["G"]] = 1.0
    P[i["GD"], i["G"]] = 1.0
    P[i["F"], i["G"]] = 1.0
    return P


def hand_sitar_matrix(p: ItsParams) -> np.ndarray:
    i = {s: n for n, s in enumerate(SITAR_ORDER)}
    P = np.zeros((9, 9))
    P[i["G"], i["V"]] = 1.0
    P[i["V"], i["G"]] = 1.0 - p.p_I
    P[i["V"], i["I"]] = p.p_I
    P[i["I"], i["DMC"]] = p.p_DM
    P[i["I"], i["UNC"]] = p.p_UN
    P[i["I"], i["DNC"]] = p.p_DN
    P[i["DNC"], i["FS"]] = p.p_FS
    P[i["DNC"], i["GD"]] = p.p_GD
    P[i["DNC"], i["F"]] = p.p_F
    for s in ("DMC", "UNC", "FS", "GD", "F"):
        P[i[s], i["G"]] = 1.0
    return P


def hand_scit_matrix(p: ItsParams) -> np.ndarray:
    i = {s: n for n, s in enumerate(SCIT_ORDER)}
    P = np.zeros((5, 5))
    P[i["G"], i["V"]] = 1.0
    P[i["V"], i["G"]] = 1.0 - p.p_I
    P[i["V"], i["I"]] = p.p_I
    P[i["I"], i["UMC"]] = p.p_UM
    P[i["I"], i["F"]] = p.p_F
    P[i["UMC"], i["G"]] = 1.0
    P[i["F"], i["G"]] = 1.0
    return P


def canonical_params() -> ItsParams:
    """The documented derived parameter set with unit sojourn times."""
    return ItsParams(
        p_I=0.5, p_DM=0.4, p_UM=0.2, p_UN=0.2, p_DN=0.2,
        p_FS=1.0 / 3.0, p_GD=1.0 / 3.0, p_F=1.0 / 3.0,
    )


def sample_params(rng: np.random.Generator, variant: ItsVariant) -> ItsParams:
    """Random valid parameter set for a variant."""
    p_I = float(rng.uniform(0.02, 1.0))
    h = {s: float(10.0 ** rng.uniform(-1.0, 1.7)) for s in STATE_ORDER}
    dnc = [float(x) for x in rng.dirichlet(np.ones(3))]
    if variant is ItsVariant.PROPOSED:
        row = [float(x) for x in rng.dirichlet(np.ones(4))]
        return ItsParams(p_I=p_I, p_DM=row[0], p_UM=row[1], p_UN=row[2],
                         p_DN=row[3], p_FS=dnc[0], p_GD=dnc[1], p_F=dnc[2], h=h)
    if variant is ItsVariant.SITAR:
        row = [float(x) for x in rng.dirichlet(np.ones(3))]
        return ItsParams(p_I=p_I, p_DM=row[0], p_UM=0.0, p_UN=row[1],
                         p_DN=row[2], p_FS=dnc[0], p_GD=dnc[1], p_F=dnc[2], h=h)
    p_UM = float(rng.uniform(0.0, 1.0))
    return ItsParams(p_I=p_I, p_DM=0.0, p_UM=p_UM, p_UN=0.0, p_DN=0.0,
                     p_FS=0.0, p_GD=0.0, p_F=1.0 - p_UM, h=h)


def random_irreducible_model(rng: np.random.Generator, n: int) -> SemiMarkovModel:
    """Dense random chain: strictly positive rows, hence irreducible."""
    P = np.vstack([rng.dirichlet(np.ones(n)) for _ in range(n)])
    h = rng.uniform(0.2, 5.0, size=n)
    labels = tuple(f"s{i}" for i in range(n))
    return SemiMarkovModel(StateSpace(labels), P, h)
