"""Command-line front end: validation, sweeps, comparisons, Monte Carlo
cross-checks, and simulator launch.

Commands::

    itsbench validate [--params FILE] [--variant V ...] [--projection MODE]
    itsbench sweep    [--params FILE] --vary NAME --from X --to Y --steps N
                      [--variant V ...] [--projection MODE] --out FILE.csv
    itsbench compare  [--params FILE] [--projection MODE]
    itsbench mc       [--params FILE] [--variant V] [--replications N]
                      [--horizon T] [--seed S] [--dist D]
                      [--absorption-replications N]
    itsbench simulate --config FILE --out TRACE

Exit codes: 0 success, 1 usage or parse error, 2 validation failure,
3 tolerance or invariant breach.

Parameter files describe the full (Proposed) model; SITAR and SCIT values
are derived through the configured projection.  Every report starts with
a header line naming the tool version and the parameter source, plus an
assumption flag whenever the built-in baseline supplied the values.  All
output is deterministic: identical inputs produce byte-identical reports,
CSV files, and traces.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, replace

import numpy as np

from . import __version__
from . import models as its
from . import semimarkov as smp
from .montecarlo import simulate_absorption, simulate_chain
from .paramio import ParseError, parse_params, parse_sim_config
from .replicasim import (
    ConfigInvalid,
    metrics_from_trace,
    run as run_simulation,
    verify_invariants,
    write_trace,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_TOLERANCE = 3

AVAILABILITY_TOL = 1e-10
MTTSF_REL_TOL = 1e-8

_I_ROW = ("p_DM", "p_UM", "p_UN", "p_DN")
_DNC_ROW = ("p_FS", "p_GD", "p_F")

VARIANT_ORDER = (its.ItsVariant.PROPOSED, its.ItsVariant.SITAR, its.ItsVariant.SCIT)

CSV_HEADER = (
    "variant,param_name,param_value,availability,mttsf,"
    "availability_closed_form,mttsf_closed_form,"
    "abs_diff_availability,rel_diff_mttsf"
)


class InvalidGrid(Exception):
    """A sweep grid is malformed or a grid point fails validation."""


@dataclass(frozen=True)
class ComparisonReport:
    """Closed-form availability and MTTSF per variant plus the relative
    improvements of the combined-recovery architecture over the other two.

    ``improvements`` maps "<metric>_vs_<variant>" to (value_P - value_other)
    / value_other; entries exist only when both values are finite, so an
    unbounded MTTSF is reported verbatim rather than as a ratio.
    """

    availability: dict[its.ItsVariant, float]
    mttsf: dict[its.ItsVariant, float]
    improvements: dict[str, float]
    projection: its.ProjectionMode
    baseline_assumed: bool


def build_comparison(
    params: its.ItsParams,
    mode: its.ProjectionMode,
    baseline_assumed: bool,
) -> ComparisonReport:
    availability: dict[its.ItsVariant, float] = {}
    mttsf: dict[its.ItsVariant, float] = {}
    for variant in VARIANT_ORDER:
        projected = its.project_params(variant, params, mode)
        availability[variant] = its.closed_form_availability(variant, projected)
        try:
            mttsf[variant] = its.closed_form_mttsf(variant, projected)
        except its.ZeroIntrusionProbability:
            mttsf[variant] = float("inf")
    improvements: dict[str, float] = {}
    a_p = availability[its.ItsVariant.PROPOSED]
    m_p = mttsf[its.ItsVariant.PROPOSED]
    for other in (its.ItsVariant.SITAR, its.ItsVariant.SCIT):
        improvements[f"availability_vs_{other.value}"] = (
            (a_p - availability[other]) / availability[other]
        )
        if m_p != float("inf") and mttsf[other] != float("inf"):
            improvements[f"mttsf_vs_{other.value}"] = (m_p - mttsf[other]) / mttsf[other]
    return ComparisonReport(
        availability=availability,
        mttsf=mttsf,
        improvements=improvements,
        projection=mode,
        baseline_assumed=baseline_assumed,
    )


@dataclass(frozen=True)
class SweepSpec:
    """One parameter sweep: vary one field over a grid for some variants.

    Varying a branch probability rescales the other probabilities of the
    same row proportionally so the row keeps summing to 1; p_I and the
    sojourn means need no renormalization.
    """

    vary: str
    start: float
    stop: float
    steps: int
    variants: tuple[its.ItsVariant, ...]
    base: its.ItsParams
    renormalize: str = "proportional"

    def grid(self) -> list[float]:
        if self.steps < 2:
            raise InvalidGrid(f"steps = {self.steps}; a grid needs at least 2 points")
        if self.renormalize != "proportional":
            raise InvalidGrid(f"unknown renormalization rule {self.renormalize!r}")
        return [float(v) for v in np.linspace(self.start, self.stop, self.steps)]


def apply_parameter(base: its.ItsParams, name: str, value: float) -> its.ItsParams:
    """Set one parameter on a full model parameter set.

    Branch probabilities are renormalized within their row; the result is
    validated for the full model and InvalidGrid raised on any failure.
    """
    try:
        if name == "p_I":
            updated = replace(base, p_I=value, h=dict(base.h))
        elif name.startswith("h."):
            state = name[2:]
            if state not in its.STATE_ORDER:
                raise InvalidGrid(f"unknown state {state!r} in parameter {name!r}")
            h = dict(base.h)
            h[state] = value
            updated = replace(base, h=h)
        elif name in _I_ROW or name in _DNC_ROW:
            row = _I_ROW if name in _I_ROW else _DNC_ROW
            rest = 1.0 - base.probability(name)
            updates = {name: value}
            if rest > 0.0:
                scale = (1.0 - value) / rest
                for other in row:
                    if other != name:
                        updates[other] = base.probability(other) * scale
            elif abs(value - 1.0) > its.BRANCH_SUM_TOL:
                raise InvalidGrid(
                    f"cannot renormalize {name!r} away from 1: the rest of the row is 0"
                )
            updated = replace(base, h=dict(base.h), **updates)
        else:
            raise InvalidGrid(f"unknown parameter {name!r}")
        its.validate_params(its.ItsVariant.PROPOSED, updated)
        return updated
    except its.ParameterError as exc:
        raise InvalidGrid(f"{name} = {value!r}: {exc}") from None


def _fmt(x: float) -> str:
    """12 significant digits; infinities render as 'inf'."""
    if x == float("inf"):
        return "inf"
    return f"{x:.12g}"


def _evaluate_variant(
    variant: its.ItsVariant, params: its.ItsParams, mode: its.ProjectionMode
) -> tuple[float, float, float, float]:
    """(A generic, MTTSF generic, A closed form, MTTSF closed form).

    Unbounded MTTSF is reported as inf on both routes; that includes the
    p_I = 0 case where no intrusion ever happens.
    """
    projected = its.project_params(variant, params, mode)
    bundle = its.build_model(variant, projected)
    a_generic = its.bundle_availability(bundle)
    a_closed = its.closed_form_availability(variant, projected)
    m_generic = its.bundle_mttsf(bundle, infinite_ok=True)
    try:
        m_closed = its.closed_form_mttsf(variant, projected)
    except its.ZeroIntrusionProbability:
        m_closed = float("inf")
    return a_generic, m_generic, a_closed, m_closed


def _diffs(a_generic: float, m_generic: float, a_closed: float, m_closed: float
           ) -> tuple[float, float]:
    abs_diff_a = abs(a_generic - a_closed)
    if m_generic == float("inf") and m_closed == float("inf"):
        rel_diff_m = 0.0
    elif m_generic == float("inf") or m_closed == float("inf"):
        rel_diff_m = float("inf")
    else:
        rel_diff_m = abs(m_generic - m_closed) / abs(m_closed)
    return abs_diff_a, rel_diff_m


def _load_params(args) -> tuple[its.ItsParams, str, bool]:
    """Returns (params, source description, assumed-baseline flag)."""
    if args.params is None:
        return its.default_params(), "builtin-baseline", True
    params, warnings = parse_params(args.params)
    for warning in warnings:
        print(f"warning: {args.params}: {warning}", file=sys.stderr)
    return params, str(args.params), False


def _header(command: str, source: str, assumed: bool, extra: str = "") -> str:
    parts = [f"# itsbench {__version__}", command, f"params={source}"]
    if assumed:
        parts.append("baseline=assumed-defaults (not published values)")
    if extra:
        parts.append(extra)
    return " | ".join(parts)


# ----------------------------------------------------------------------
# commands

def cmd_validate(args) -> int:
    params, source, assumed = _load_params(args)
    mode = its.ProjectionMode(args.projection)
    variants = [its.ItsVariant(v) for v in args.variant] if args.variant else list(VARIANT_ORDER)
    print(_header("validate", source, assumed, f"projection={mode.value}"))
    print(
        "variant availability_generic availability_closed abs_diff "
        "mttsf_generic mttsf_closed rel_diff"
    )
    breached = False
    for variant in variants:
        a_g, m_g, a_c, m_c = _evaluate_variant(variant, params, mode)
        abs_a, rel_m = _diffs(a_g, m_g, a_c, m_c)
        if abs_a > AVAILABILITY_TOL or rel_m > MTTSF_REL_TOL:
            breached = True
        print(
            f"{variant.value} {_fmt(a_g)} {_fmt(a_c)} {_fmt(abs_a)} "
            f"{_fmt(m_g)} {_fmt(m_c)} {_fmt(rel_m)}"
        )
    if breached:
        print("tolerance breach: generic solver and closed forms disagree", file=sys.stderr)
        return EXIT_TOLERANCE
    return EXIT_OK


def cmd_sweep(args) -> int:
    params, source, assumed = _load_params(args)
    mode = its.ProjectionMode(args.projection)
    variants = tuple(
        its.ItsVariant(v) for v in args.variant
    ) if args.variant else VARIANT_ORDER
    spec = SweepSpec(
        vary=args.vary,
        start=args.start,
        stop=args.stop,
        steps=args.steps,
        variants=variants,
        base=params,
    )
    grid = spec.grid()
    rows = []
    breached = False
    for variant in spec.variants:
        for value in grid:
            point = apply_parameter(spec.base, spec.vary, value)
            a_g, m_g, a_c, m_c = _evaluate_variant(variant, point, mode)
            abs_a, rel_m = _diffs(a_g, m_g, a_c, m_c)
            if abs_a > AVAILABILITY_TOL or rel_m > MTTSF_REL_TOL:
                breached = True
            rows.append(
                f"{variant.value},{spec.vary},{_fmt(value)},{_fmt(a_g)},{_fmt(m_g)},"
                f"{_fmt(a_c)},{_fmt(m_c)},{_fmt(abs_a)},{_fmt(rel_m)}"
            )
    csv_text = CSV_HEADER + "\n" + "\n".join(rows) + "\n"
    with open(args.out, "wb") as handle:
        handle.write(csv_text.encode("utf-8"))
    print(_header("sweep", source, assumed, f"projection={mode.value} vary={spec.vary}"))
    print(f"wrote {len(rows)} rows to {args.out}")
    if breached:
        print("tolerance breach: generic solver and closed forms disagree", file=sys.stderr)
        return EXIT_TOLERANCE
    return EXIT_OK


def cmd_compare(args) -> int:
    params, source, assumed = _load_params(args)
    mode = its.ProjectionMode(args.projection)
    report = build_comparison(params, mode, assumed)
    print(_header("compare", source, assumed, f"projection={mode.value}"))
    print("variant availability mttsf")
    for variant in VARIANT_ORDER:
        m = report.mttsf[variant]
        mttsf_text = "unbounded" if m == float("inf") else _fmt(m)
        print(f"{variant.value} {_fmt(report.availability[variant])} {mttsf_text}")
    for other in (its.ItsVariant.SITAR, its.ItsVariant.SCIT):
        a_key = f"availability_vs_{other.value}"
        m_key = f"mttsf_vs_{other.value}"
        print(f"availability_improvement_vs_{other.value} = "
              f"{_fmt(report.improvements[a_key] * 100.0)}%")
        if m_key in report.improvements:
            print(f"mttsf_improvement_vs_{other.value} = "
                  f"{_fmt(report.improvements[m_key] * 100.0)}%")
        else:
            print(f"mttsf_improvement_vs_{other.value} = n/a (unbounded MTTSF)")
    return EXIT_OK


def cmd_mc(args) -> int:
    params, source, assumed = _load_params(args)
    mode = its.ProjectionMode(args.projection)
    variant = its.ItsVariant(args.variant)
    projected = its.project_params(variant, params, mode)
    bundle = its.build_model(variant, projected)
    print(_header(
        "mc", source, assumed,
        f"variant={variant.value} dist={args.dist} seed={args.seed} "
        f"replications={args.replications} horizon={_fmt(args.horizon)}",
    ))
    chain = simulate_chain(
        bundle.model,
        bundle.unavailable,
        sojourn_dist=args.dist,
        seed=args.seed,
        replications=args.replications,
        horizon=args.horizon,
    )
    analytic_a = its.bundle_availability(bundle)
    covered = abs(chain.mean - analytic_a) <= chain.ci_half_width
    print(
        f"availability: mc={_fmt(chain.mean)} ci_half_width={_fmt(chain.ci_half_width)} "
        f"analytic={_fmt(analytic_a)} ci_covers_analytic={'yes' if covered else 'no'}"
    )
    try:
        m_closed = its.closed_form_mttsf(variant, projected)
    except its.ZeroIntrusionProbability:
        m_closed = float("inf")
    partition = its.bundle_partition(bundle)
    h = [
        float(bundle.model.sojourn_mean[bundle.model.states.index(label)])
        for label in partition.transient
    ]
    try:
        # Absorption replications use root seed + 1 so the two estimators
        # never share random streams.
        absorption = simulate_absorption(
            partition,
            h,
            sojourn_dist=args.dist,
            seed=args.seed + 1,
            replications=args.absorption_replications,
        )
    except smp.NoAbsorption:
        print(
            "mttsf: NoAbsorption (masking certain: security-compromised states "
            f"unreachable); analytic={_fmt(m_closed)}"
        )
        return EXIT_OK
    covered_m = abs(absorption.mean - m_closed) <= absorption.ci_half_width
    print(
        f"mttsf: mc={_fmt(absorption.mean)} ci_half_width={_fmt(absorption.ci_half_width)} "
        f"analytic={_fmt(m_closed)} ci_covers_analytic={'yes' if covered_m else 'no'}"
    )
    return EXIT_OK


def cmd_simulate(args) -> int:
    config = parse_sim_config(args.config)
    metrics, records = run_simulation(config)
    write_trace(records, args.out)
    print(_header("simulate", str(args.config), False, f"trace={args.out}"))
    ttf = metrics.time_to_first_security_failure
    print(f"empirical_availability = {_fmt(metrics.empirical_availability)}")
    print(f"time_to_first_security_failure = {'none' if ttf is None else _fmt(ttf)}")
    print(f"proactive_recoveries = {metrics.proactive_recoveries}")
    print(f"reactive_system_recoveries = {metrics.reactive_system_recoveries}")
    print(f"process_recoveries = {metrics.process_recoveries}")
    print(f"proxy_rotations = {metrics.proxy_rotations}")
    print(f"manual_restorations = {metrics.manual_restorations}")
    print(f"recovery_deferrals = {metrics.recovery_deferrals}")
    print(f"proxy_rotation_deferrals = {metrics.proxy_rotation_deferrals}")
    print(f"max_concurrent_system_recoveries = {metrics.max_concurrent_system_recoveries}")
    violations = verify_invariants(records, config)
    if metrics_from_trace(records, config) != metrics:
        violations.append("metrics recomputed from trace differ from reported metrics")
    if violations:
        for violation in violations:
            print(f"invariant violation: {violation}", file=sys.stderr)
        return EXIT_TOLERANCE
    return EXIT_OK


# ----------------------------------------------------------------------
# argument parsing

class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on usage errors; the documented
    contract reserves 1 for those, so override."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> _Parser:
    parser = _Parser(prog="itsbench", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    variant_names = [v.value for v in VARIANT_ORDER]
    mode_names = [m.value for m in its.ProjectionMode]

    def add_common(p, multi_variant: bool):
        p.add_argument("--params", help="parameter file (default: built-in assumed baseline)")
        p.add_argument(
            "--projection", choices=mode_names, default=its.ProjectionMode.RENORMALIZE.value,
            help="how full-model parameters map onto SITAR (default: %(default)s)",
        )
        if multi_variant:
            p.add_argument(
                "--variant", action="append", choices=variant_names,
                help="restrict to a variant (repeatable; default: all three)",
            )

    p_validate = sub.add_parser(
        "validate", help="cross-check the generic solver against the closed forms"
    )
    add_common(p_validate, multi_variant=True)

    p_sweep = sub.add_parser("sweep", help="grid sweep of one parameter to CSV")
    add_common(p_sweep, multi_variant=True)
    p_sweep.add_argument("--vary", required=True, help="parameter name, e.g. p_I or h.G")
    p_sweep.add_argument("--from", dest="start", type=float, required=True)
    p_sweep.add_argument("--to", dest="stop", type=float, required=True)
    p_sweep.add_argument("--steps", type=int, required=True)
    p_sweep.add_argument("--out", required=True, help="CSV output path")

    p_compare = sub.add_parser("compare", help="three-variant comparison report")
    add_common(p_compare, multi_variant=False)

    p_mc = sub.add_parser("mc", help="Monte Carlo cross-check of the analytics")
    add_common(p_mc, multi_variant=False)
    p_mc.add_argument("--variant", choices=variant_names,
                      default=its.ItsVariant.PROPOSED.value)
    p_mc.add_argument("--replications", type=int, default=200)
    p_mc.add_argument("--absorption-replications", type=int, default=2000)
    p_mc.add_argument("--horizon", type=float, default=10000.0)
    p_mc.add_argument("--seed", type=int, default=0)
    p_mc.add_argument("--dist", choices=["deterministic", "exponential", "uniform"],
                      default="exponential")

    p_sim = sub.add_parser("simulate", help="run the replicated-architecture simulation")
    p_sim.add_argument("--config", required=True, help="simulator configuration file")
    p_sim.add_argument("--out", required=True, help="audit trace output path")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    commands = {
        "validate": cmd_validate,
        "sweep": cmd_sweep,
        "compare": cmd_compare,
        "mc": cmd_mc,
        "simulate": cmd_simulate,
    }
    try:
        return commands[args.command](args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvalidGrid as exc:
        print(f"invalid grid: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (its.ParameterError, smp.SemiMarkovError, ConfigInvalid) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
