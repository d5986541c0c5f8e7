"""Acceptance suite.

One test per acceptance criterion, each printing a single ``[PASS]`` /
``[FAIL]`` line (run ``pytest tests/test_acceptance.py -v -s`` to see them
all).  Criteria 1-9 exercise the analytic stack at full sampling sizes;
criteria 10-12 exercise the simulator and the command-line determinism
contract.
"""

from __future__ import annotations

import math
import time
from dataclasses import replace

import numpy as np
import pytest

from conftest import random_irreducible_model, sample_params
from itsbench import cli
from itsbench import models as its
from itsbench.models import ItsParams, ItsVariant
from itsbench.montecarlo import simulate_absorption, simulate_chain
from itsbench.replicasim import (
    ScriptedCompromise,
    SimConfig,
    metrics_from_trace,
    run as run_simulation,
    verify_invariants,
)

VARIANTS = (ItsVariant.PROPOSED, ItsVariant.SITAR, ItsVariant.SCIT)


def _report(number: int, description: str, ok: bool, detail: str = "") -> bool:
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"[{status}] criterion {number:02d}: {description}{suffix}")
    return ok


def _grid(start: float, stop: float, steps: int) -> list[float]:
    return [float(v) for v in np.linspace(start, stop, steps)]


def _strictly_decreasing(xs) -> bool:
    return all(a > b for a, b in zip(xs, xs[1:]))


def _strictly_increasing(xs) -> bool:
    return all(a < b for a, b in zip(xs, xs[1:]))


def _sweep_metrics(vary: str, values: list[float]) -> dict[ItsVariant, tuple[list, list]]:
    base = its.default_params()
    out = {}
    for variant in VARIANTS:
        avail, mttsf = [], []
        for value in values:
            point = cli.apply_parameter(base, vary, value)
            projected = its.project_params(variant, point)
            avail.append(its.closed_form_availability(variant, projected))
            mttsf.append(its.closed_form_mttsf(variant, projected))
        out[variant] = (avail, mttsf)
    return out


def test_criterion_01_availability_oracle_equivalence():
    started = time.monotonic()
    rng = np.random.default_rng(1001)
    worst = 0.0
    for variant in VARIANTS:
        for _ in range(1000):
            params = sample_params(rng, variant)
            bundle = its.build_model(variant, params)
            diff = abs(
                its.bundle_availability(bundle)
                - its.closed_form_availability(variant, params)
            )
            worst = max(worst, diff)
    elapsed = time.monotonic() - started
    ok = worst <= 1e-10 and elapsed < 10.0
    assert _report(
        1, "availability: generic solver equals closed forms on 1000 samples/variant",
        ok, f"worst |diff| = {worst:.3e}, {elapsed:.1f}s",
    )


def test_criterion_02_mttsf_oracle_equivalence():
    started = time.monotonic()
    rng = np.random.default_rng(2002)
    worst = 0.0
    infinite_checked = 0
    for variant in VARIANTS:
        for _ in range(1000):
            params = sample_params(rng, variant)
            bundle = its.build_model(variant, params)
            generic = its.bundle_mttsf(bundle)
            closed = its.closed_form_mttsf(variant, params)
            if math.isinf(closed) or math.isinf(generic):
                assert math.isinf(closed) and math.isinf(generic)
                infinite_checked += 1
            else:
                worst = max(worst, abs(generic - closed) / closed)
    # deterministic unbounded cases: total masking on each route
    fully_masked = ItsParams(p_I=0.6, p_DM=0.55, p_UM=0.45, p_UN=0.0, p_DN=0.0,
                             p_FS=1 / 3, p_GD=1 / 3, p_F=1 / 3)
    assert its.closed_form_mttsf(ItsVariant.PROPOSED, fully_masked) == math.inf
    assert its.bundle_mttsf(its.build_model(ItsVariant.PROPOSED, fully_masked)) == math.inf
    scit_masked = ItsParams(p_I=0.6, p_DM=0.0, p_UM=1.0, p_UN=0.0, p_DN=0.0,
                            p_FS=0.0, p_GD=0.0, p_F=0.0)
    assert its.closed_form_mttsf(ItsVariant.SCIT, scit_masked) == math.inf
    assert its.bundle_mttsf(its.build_model(ItsVariant.SCIT, scit_masked)) == math.inf
    elapsed = time.monotonic() - started
    ok = worst <= 1e-8 and elapsed < 10.0
    assert _report(
        2, "MTTSF: generic absorption equals closed forms on 1000 samples/variant",
        ok, f"worst rel diff = {worst:.3e}, {infinite_checked + 2} unbounded cases, {elapsed:.1f}s",
    )


def test_criterion_03_spot_values():
    # Hand re-derivation for p_I=0.5, p_DM=0.4, p_UM=0.2, p_UN=0.2,
    # p_DN=0.2, p_FS=p_GD=p_F=1/3, every sojourn mean 1:
    #   down-state weight   = 0.5*0.2 + 2*(0.5*0.2/3)      = 1/6
    #   cycle weight        = 2 + 0.5*(1 + 1 + 0.2)        = 3.1
    #   availability        = 1 - (1/6)/3.1                = 0.946236559...
    #   visits start at 1/(0.5*(1-0.6)) = 5, so time to absorption
    #                       = (2 + 2 + 1 + 0.4 + 0.2 + 0.2)/0.4 = 14.5
    params = ItsParams(p_I=0.5, p_DM=0.4, p_UM=0.2, p_UN=0.2, p_DN=0.2,
                       p_FS=1 / 3, p_GD=1 / 3, p_F=1 / 3)
    expected_a = 0.9462365591397849
    expected_m = 14.5
    bundle = its.build_model(ItsVariant.PROPOSED, params)
    values = {
        "A closed": its.closed_form_availability(ItsVariant.PROPOSED, params),
        "A generic": its.bundle_availability(bundle),
        "M closed": its.closed_form_mttsf(ItsVariant.PROPOSED, params),
        "M generic": its.bundle_mttsf(bundle),
    }
    ok = (
        abs(values["A closed"] - expected_a) <= 1e-9
        and abs(values["A generic"] - expected_a) <= 1e-9
        and abs(values["M closed"] - expected_m) <= 1e-9 * expected_m
        and abs(values["M generic"] - expected_m) <= 1e-9 * expected_m
    )
    assert _report(
        3, "spot values 0.946237 and 14.5 match on both code paths to 1e-9",
        ok, ", ".join(f"{k}={v:.12f}" for k, v in values.items()),
    )


def test_criterion_04_intrusion_probability_shape():
    started = time.monotonic()
    results = _sweep_metrics("p_I", _grid(0.05, 0.95, 19))
    ok = all(
        _strictly_decreasing(avail) and _strictly_decreasing(mttsf)
        for avail, mttsf in results.values()
    )
    elapsed = time.monotonic() - started
    ok = ok and elapsed < 5.0
    assert _report(
        4, "availability and MTTSF strictly decrease in p_I (19 points, 3 variants)",
        ok, f"{elapsed:.1f}s",
    )


def test_criterion_05_good_state_sojourn_shape():
    started = time.monotonic()
    results = _sweep_metrics("h.G", _grid(1.0, 100.0, 19))
    ok = all(
        _strictly_increasing(avail) and _strictly_increasing(mttsf)
        for avail, mttsf in results.values()
    )
    elapsed = time.monotonic() - started
    ok = ok and elapsed < 5.0
    assert _report(
        5, "availability and MTTSF strictly increase in h_G (19 points, 3 variants)",
        ok, f"{elapsed:.1f}s",
    )


def test_criterion_06_masking_dominance():
    rng = np.random.default_rng(20260808)
    availability_drops = []
    mttsf_failures = []
    for _ in range(100):
        h_value = float(rng.uniform(0.3, 8.0))
        row = rng.dirichlet(np.ones(4))
        dnc = rng.dirichlet(np.ones(3))
        params = ItsParams(
            p_I=float(rng.uniform(0.05, 0.95)),
            p_DM=row[0], p_UM=row[1], p_UN=row[2], p_DN=row[3],
            p_FS=dnc[0], p_GD=dnc[1], p_F=dnc[2],
            h={s: h_value for s in its.STATE_ORDER},
        )
        source = ("p_UN", "p_DN")[int(rng.integers(2))]
        target = ("p_DM", "p_UM")[int(rng.integers(2))]
        delta = float(rng.uniform(0.05, 0.95)) * params.probability(source)
        moved = replace(params, h=dict(params.h), **{
            source: params.probability(source) - delta,
            target: params.probability(target) + delta,
        })
        a_before = its.closed_form_availability(ItsVariant.PROPOSED, params)
        a_after = its.closed_form_availability(ItsVariant.PROPOSED, moved)
        m_before = its.closed_form_mttsf(ItsVariant.PROPOSED, params)
        m_after = its.closed_form_mttsf(ItsVariant.PROPOSED, moved)
        if a_after < a_before - 1e-12:
            availability_drops.append((params, source, target, delta, a_before - a_after))
        if math.isfinite(m_before) and math.isfinite(m_after) and not m_after > m_before:
            mttsf_failures.append((params, source, target, delta))
    ok = not availability_drops and not mttsf_failures
    detail = f"{len(availability_drops)} availability drops, {len(mttsf_failures)} MTTSF failures"
    assert _report(
        6,
        "100 random transfers to masking branches never reduce availability "
        "and strictly raise finite MTTSF",
        ok, detail,
    )


def test_criterion_07_branch_closure():
    rng = np.random.default_rng(7007)
    exact = all(
        sum(its.masking_probability(sample_params(rng, ItsVariant.PROPOSED))) == 1.0
        for _ in range(500)
    )
    base = its.default_params()
    nudged = replace(base, p_DM=base.p_DM + 1e-11, h=dict(base.h))
    rejected = False
    try:
        its.validate_params(ItsVariant.PROPOSED, nudged)
    except its.BranchSumViolation:
        rejected = True
    within_tolerance_ok = True
    try:
        its.validate_params(
            ItsVariant.PROPOSED, replace(base, p_DM=base.p_DM + 5e-13, h=dict(base.h))
        )
    except its.BranchSumViolation:
        within_tolerance_ok = False
    ok = exact and rejected and within_tolerance_ok
    assert _report(
        7, "masking split always sums to exactly 1; branch sums beyond 1e-12 rejected",
        ok,
    )


def test_criterion_08_monte_carlo_convergence():
    started = time.monotonic()
    params = its.default_params()
    bundle = its.build_model(ItsVariant.PROPOSED, params)
    analytic_a = its.bundle_availability(bundle)
    chain = simulate_chain(
        bundle.model, bundle.unavailable, sojourn_dist="exponential",
        seed=0, replications=200, horizon=10000.0,
    )
    covered = abs(chain.mean - analytic_a) <= chain.ci_half_width
    partition = its.bundle_partition(bundle)
    h = [params.h[label] for label in partition.transient.labels]
    analytic_m = its.closed_form_mttsf(ItsVariant.PROPOSED, params)
    absorption = simulate_absorption(partition, h, sojourn_dist="exponential",
                                     seed=0, replications=10000)
    rel_err = abs(absorption.mean - analytic_m) / analytic_m
    elapsed = time.monotonic() - started
    ok = covered and rel_err <= 0.02 and elapsed < 60.0
    assert _report(
        8, "MC availability CI covers analytic value; MTTSF within 2% on 1e4 samples",
        ok,
        f"A mc={chain.mean:.6f}+-{chain.ci_half_width:.6f} vs {analytic_a:.6f}; "
        f"MTTSF rel err={rel_err:.4f}; {elapsed:.1f}s",
    )


def test_criterion_09_distribution_insensitivity():
    rng = np.random.default_rng(909)
    overlaps = []
    for _ in range(5):
        n = int(rng.integers(3, 7))
        model = random_irreducible_model(rng, n)
        down_count = int(rng.integers(1, n))
        down = tuple(f"s{i}" for i in rng.choice(n, size=down_count, replace=False))
        seed = int(rng.integers(0, 1 << 16))
        det = simulate_chain(model, down, sojourn_dist="deterministic",
                             seed=seed, replications=60, horizon=2000.0)
        exp = simulate_chain(model, down, sojourn_dist="exponential",
                             seed=seed, replications=60, horizon=2000.0)
        overlaps.append(abs(det.mean - exp.mean) <= det.ci_half_width + exp.ci_half_width)
    ok = all(overlaps)
    assert _report(
        9, "deterministic vs exponential sojourns agree within joint 95% CIs (5 models)",
        ok, f"overlaps={overlaps}",
    )


def _random_sim_config(rng: np.random.Generator) -> SimConfig:
    return SimConfig(
        f=int(rng.integers(1, 3)),
        k=int(rng.integers(1, 3)),
        rejuvenation_period=float(rng.uniform(10.0, 80.0)),
        system_recovery_duration=float(rng.uniform(0.5, 6.0)),
        process_poll_timeout=float(rng.uniform(1.0, 4.0)),
        standby_per_process=int(rng.integers(0, 3)),
        process_count=int(rng.integers(1, 4)),
        proxy_count=int(rng.integers(2, 5)),
        proxy_exposure_time=float(rng.uniform(5.0, 40.0)),
        cleansing_duration=float(rng.uniform(1.0, 10.0)),
        attack_rate=float(rng.uniform(0.0, 0.08)),
        process_infection_share=float(rng.uniform(0.0, 1.0)),
        inspector_detection_prob=float(rng.uniform(0.2, 1.0)),
        voting_divergence_prob=float(rng.uniform(0.2, 1.0)),
        manual_restoration_duration=float(rng.uniform(5.0, 40.0)),
        horizon=1000.0,
        seed=int(rng.integers(0, 1 << 32)),
    )


def test_criterion_10_simulator_structural_suite():
    started = time.monotonic()
    rng = np.random.default_rng(1010)
    failures = []
    for index in range(50):
        config = _random_sim_config(rng)
        metrics, records = run_simulation(config)
        violations = verify_invariants(records, config)
        if violations:
            failures.append(f"run {index}: {violations[0]}")
        if metrics_from_trace(records, config) != metrics:
            failures.append(f"run {index}: trace recomputation mismatch")
        if metrics.max_concurrent_system_recoveries > config.k:
            failures.append(f"run {index}: recovery cap exceeded")
    elapsed = time.monotonic() - started
    ok = not failures and elapsed < 120.0
    assert _report(
        10, "50 random simulator runs satisfy caps, floor, vote soundness, "
            "and trace-recomputed metrics",
        ok, failures[0] if failures else f"{elapsed:.1f}s",
    )


def test_criterion_11_attack_scenarios():
    # Tolerable attack: one system compromise plus one process infection,
    # both detected and repaired with no security failure.
    tolerated = SimConfig(
        attack_rate=0.0, horizon=80.0, f=1, k=1,
        inspector_detection_prob=1.0, voting_divergence_prob=1.0,
        standby_per_process=1,
        scripted_compromises=(
            ScriptedCompromise(time=5.0, replica=1, scope="system"),
            ScriptedCompromise(time=9.0, replica=2, scope="process"),
        ),
    )
    metrics_a, records_a = run_simulation(tolerated)
    kinds_a = [r.kind for r in records_a]
    system_recovered = any(
        r.kind in ("SystemRecoveryEnd", "ProactiveEnd") and r.get("replica") == "r1"
        and r.timestamp > 5.0
        for r in records_a
    )
    process_recovered = any(
        r.kind == "ProcessRecovery" and r.get("replica") == "r2" and r.timestamp > 9.0
        for r in records_a
    )
    scenario_a_ok = (
        "SecurityFailure" not in kinds_a
        and metrics_a.time_to_first_security_failure is None
        and system_recovered
        and process_recovered
    )
    # Overwhelming attack: f+1 simultaneous compromises with detection
    # suppressed; exactly one security failure, then manual restoration.
    overwhelmed = SimConfig(
        attack_rate=0.0, horizon=80.0, f=1, k=1,
        inspector_detection_prob=0.0, voting_divergence_prob=0.0,
        manual_restoration_duration=15.0,
        scripted_compromises=(
            ScriptedCompromise(time=10.0, replica=0, scope="system"),
            ScriptedCompromise(time=10.0, replica=1, scope="system"),
        ),
    )
    metrics_b, records_b = run_simulation(overwhelmed)
    kinds_b = [r.kind for r in records_b]
    failure_index = kinds_b.index("SecurityFailure") if "SecurityFailure" in kinds_b else -1
    scenario_b_ok = (
        kinds_b.count("SecurityFailure") == 1
        and failure_index >= 0
        and kinds_b[failure_index + 1] == "ManualRestorationStart"
        and kinds_b.count("ManualRestorationEnd") == 1
        and metrics_b.time_to_first_security_failure == 10.0
        and metrics_b.empirical_availability < 1.0
    )
    ok = scenario_a_ok and scenario_b_ok
    assert _report(
        11, "scripted attack scenarios: tolerated within f, one failure plus "
            "manual restoration beyond f",
        ok, f"tolerated={scenario_a_ok}, overwhelmed={scenario_b_ok}",
    )


def test_criterion_12_command_determinism(tmp_path, capsys):
    sweep_args = [
        "sweep", "--vary", "p_I", "--from", "0.05", "--to", "0.95",
        "--steps", "19",
    ]
    csv_a, csv_b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(sweep_args + ["--out", str(csv_a)]) == 0
    assert cli.main(sweep_args + ["--out", str(csv_b)]) == 0
    sweep_ok = csv_a.read_bytes() == csv_b.read_bytes()
    config_path = tmp_path / "sim.toml"
    config_path.write_text("attack_rate = 0.03\nhorizon = 400.0\nseed = 21\n")
    trace_a, trace_b = tmp_path / "a.log", tmp_path / "b.log"
    assert cli.main(["simulate", "--config", str(config_path), "--out", str(trace_a)]) == 0
    assert cli.main(["simulate", "--config", str(config_path), "--out", str(trace_b)]) == 0
    trace_ok = trace_a.read_bytes() == trace_b.read_bytes()
    capsys.readouterr()
    mc_args = ["mc", "--replications", "30", "--horizon", "1500",
               "--absorption-replications", "300", "--seed", "4"]
    assert cli.main(mc_args) == 0
    first = capsys.readouterr().out
    assert cli.main(mc_args) == 0
    second = capsys.readouterr().out
    mc_ok = first == second
    ok = sweep_ok and trace_ok and mc_ok
    assert _report(
        12, "fixed seeds give byte-identical CSV, trace, and MC report output",
        ok, f"sweep={sweep_ok}, trace={trace_ok}, mc={mc_ok}",
    )
