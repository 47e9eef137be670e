"""Command-line interface.

Seven commands over a scenario file: allocate, evaluate, optimize, certify,
pof, curve, mc-check. Machine-readable reports (JSON or CSV) go to --output
or stdout; human-readable summaries and errors go to stderr. Exit codes:
0 success, 1 validation error, 2 optimizer non-convergence.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional

from . import allocation, certificates, metrics, montecarlo, scenario_io
from .distributions import DistributionError

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_OPTIMIZER = 2

DEFAULT_SEED = 42
DEFAULT_SAMPLES = 1_000_000


class CliError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; route through the normal
    # validation path (exit 1) instead.
    def error(self, message):
        raise CliError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fairalloc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_command(name, help_text):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--scenario", required=True, help="path to a scenario JSON file")
        cmd.add_argument("--output", help="write the report here instead of stdout")
        cmd.add_argument("--format", choices=("json", "csv"), default="json")
        cmd.add_argument("--alpha", type=float, help="fairness tolerance")
        cmd.add_argument("--epsilon", type=float, help="lower-deviation epsilon")
        cmd.add_argument(
            "--method",
            choices=certificates.METHODS,
            default=certificates.EXACT_CDF,
            help="certificate method",
        )
        cmd.add_argument("--seed", type=int, help=f"sampling seed (default {DEFAULT_SEED})")
        cmd.add_argument("--samples", type=int, help=f"sample count (default {DEFAULT_SAMPLES})")
        cmd.add_argument("--ell-grid", type=int, help="floor sweep grid size")
        cmd.add_argument("--refine-iterations", type=int, help="floor refinement iterations")
        return cmd

    add_command("allocate", "mean-weighted allocation")
    ev = add_command("evaluate", "availability/utilization/fairness of an allocation")
    ev.add_argument("--allocation", help="comma-separated per-group amounts (default: mean-weighted)")
    add_command("optimize", "max-utilization and alpha-fair allocations")
    ce = add_command("certify", "per-group lower-deviation certificate table")
    ce.add_argument("--delta", type=float, help="target delta for threshold/pass columns")
    add_command("pof", "price of fairness at a given alpha")
    cu = add_command("curve", "availability curve per group")
    cu.add_argument("--v-max", type=float, help="grid end (default: twice the largest mean)")
    cu.add_argument("--steps", type=int, default=201, help="grid size (default 201)")
    mc = add_command("mc-check", "Monte Carlo vs exact comparison table")
    mc.add_argument("--allocation", help="comma-separated per-group amounts (default: mean-weighted)")
    return parser


def _settings(args) -> Optional[allocation.OptimizerSettings]:
    overrides = {}
    if args.ell_grid is not None:
        overrides["ell_grid"] = args.ell_grid
    if args.refine_iterations is not None:
        overrides["refine_iterations"] = args.refine_iterations
    if not overrides:
        return None
    return allocation.OptimizerSettings(**overrides)


def _parse_allocation(text, scenario) -> metrics.Allocation:
    try:
        values = tuple(float(part) for part in text.split(","))
    except ValueError as exc:
        raise CliError(f"--allocation must be comma-separated numbers, got {text!r}") from exc
    alloc = metrics.Allocation(values)
    metrics.check_allocation(scenario, alloc)
    return alloc


def _resolve(flag_value, default_value, fallback=None):
    if flag_value is not None:
        return flag_value
    if default_value is not None:
        return default_value
    return fallback


def _emit(args, envelope: dict, csv_rows, csv_columns, summary: str) -> None:
    if args.format == "csv":
        for row in csv_rows:
            row.setdefault("tool_version", envelope["version"])
            row.setdefault("input_digest", envelope["input_digest"])
        text = scenario_io.rows_to_csv(csv_rows, csv_columns + ["tool_version", "input_digest"])
    else:
        import json

        text = json.dumps(envelope, indent=2) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)
    print(summary, file=sys.stderr)


def _cmd_allocate(args, sf) -> int:
    scenario = sf.scenario
    alloc = allocation.mean_weighted(scenario)
    rows = [
        {"group": g.name, "mean": g.dist.mean(), "allocation": v}
        for g, v in zip(scenario.groups, alloc.values)
    ]
    envelope = scenario_io.report_envelope(
        "allocate",
        {"scenario": args.scenario},
        sf.digest,
        {
            "resource": scenario.resource,
            "total_mean": scenario.total_mean,
            "groups": rows,
        },
    )
    _emit(args, envelope, rows, ["group", "mean", "allocation"],
          f"mean-weighted allocation over {scenario.size} groups, resource {scenario.resource}")
    return EXIT_OK


def _cmd_evaluate(args, sf) -> int:
    scenario = sf.scenario
    alloc = (
        _parse_allocation(args.allocation, scenario)
        if args.allocation
        else allocation.mean_weighted(scenario)
    )
    epsilon = _resolve(args.epsilon, sf.defaults.epsilon)
    alpha = _resolve(args.alpha, sf.defaults.alpha)
    report = metrics.evaluate(
        scenario, alloc, epsilon=epsilon, method=args.method, alpha=alpha
    )
    settings = {"scenario": args.scenario, "epsilon": epsilon, "alpha": alpha,
                "method": args.method if epsilon is not None else None,
                "allocation": list(alloc.values)}
    envelope = scenario_io.report_envelope("evaluate", settings, sf.digest, report.to_dict())
    rows = report.to_csv_rows()
    columns = ["group", "v", "q", "utilization", "fairness"]
    if report.bounds is not None:
        columns += ["epsilon", "delta", "fairness_bound", "utilization_bound",
                    "fairness_ok", "utilization_ok"]
    _emit(args, envelope, rows, columns,
          f"utilization {report.utilization:.6g}, fairness {report.fairness:.6g}")
    return EXIT_OK


def _cmd_optimize(args, sf) -> int:
    scenario = sf.scenario
    settings = _settings(args)
    alpha = _resolve(args.alpha, sf.defaults.alpha)
    v_max = allocation.max_utilization(scenario, settings)
    u_max = metrics.utilization(scenario, v_max)
    result = {
        "max_utilization": {
            "allocation": list(v_max.values),
            "utilization": u_max,
            "fairness": metrics.fairness(scenario, v_max),
        },
        "alpha_fair": None,
    }
    rows = [
        {"group": g.name, "v_max_utilization": v, "max_utilization": u_max}
        for g, v in zip(scenario.groups, v_max.values)
    ]
    columns = ["group", "v_max_utilization", "max_utilization"]
    summary = f"max utilization {u_max:.6g}"
    if alpha is not None:
        v_fair = allocation.alpha_fair_optimal(scenario, alpha, settings)
        u_fair = metrics.utilization(scenario, v_fair)
        result["alpha_fair"] = {
            "alpha": alpha,
            "allocation": list(v_fair.values),
            "utilization": u_fair,
            "fairness": metrics.fairness(scenario, v_fair),
        }
        for row, v in zip(rows, v_fair.values):
            row["v_alpha_fair"] = v
            row["alpha_fair_utilization"] = u_fair
        columns += ["v_alpha_fair", "alpha_fair_utilization"]
        summary += f"; alpha-fair utilization {u_fair:.6g} at alpha={alpha}"
    envelope = scenario_io.report_envelope(
        "optimize", {"scenario": args.scenario, "alpha": alpha}, sf.digest, result
    )
    _emit(args, envelope, rows, columns, summary)
    return EXIT_OK


def _cmd_certify(args, sf) -> int:
    scenario = sf.scenario
    epsilon = _resolve(args.epsilon, sf.defaults.epsilon)
    if epsilon is None:
        raise CliError("certify requires --epsilon (or a defaults.epsilon in the scenario)")
    cert = certificates.scenario_certificate(scenario, epsilon, args.method)
    target = args.delta
    rows = []
    for group, group_delta in zip(scenario.groups, cert.per_group_deltas):
        exact = certificates.exact_lower_deviation(group.dist, epsilon)
        try:
            chernoff = certificates.chernoff_delta(group.dist, epsilon)
        except certificates.CertificateError:
            chernoff = None
        threshold = None
        if target is not None:
            kind = group.dist.kind
            if kind == "binomial":
                threshold = certificates.min_parameter_threshold(
                    "binomial", epsilon, target, p=group.dist.p
                )
            elif kind == "normal":
                threshold = certificates.min_parameter_threshold(
                    "normal", epsilon, target, sigma=group.dist.sigma
                )
            elif kind == "poisson":
                threshold = certificates.min_parameter_threshold("poisson", epsilon, target)
        rows.append(
            {
                "group": group.name,
                "mean": group.dist.mean(),
                "method": cert.method,
                "delta_exact": exact,
                "delta_chernoff": chernoff,
                "threshold": threshold,
                "ok": (group_delta <= target) if target is not None else None,
            }
        )
    envelope = scenario_io.report_envelope(
        "certify",
        {"scenario": args.scenario, "epsilon": epsilon, "method": args.method,
         "target_delta": target},
        sf.digest,
        {"certificate": cert.to_dict(), "groups": rows},
    )
    _emit(args, envelope, rows,
          ["group", "mean", "method", "delta_exact", "delta_chernoff", "threshold", "ok"],
          f"certificate delta {cert.delta:.6g} at epsilon {epsilon} ({cert.method})")
    return EXIT_OK


def _cmd_pof(args, sf) -> int:
    scenario = sf.scenario
    alpha = _resolve(args.alpha, sf.defaults.alpha)
    if alpha is None:
        raise CliError("pof requires an explicit --alpha (or a defaults.alpha in the scenario)")
    epsilon = _resolve(args.epsilon, sf.defaults.epsilon)
    cert = None
    if epsilon is not None:
        cert = certificates.scenario_certificate(scenario, epsilon, args.method)
    result = allocation.pof(scenario, alpha, _settings(args), cert)
    row = {
        "alpha": result.alpha,
        "unconstrained_utilization": result.unconstrained_utilization,
        "constrained_utilization": result.constrained_utilization,
        "pof": result.pof,
        "bound_1_over_1_minus_alpha": result.bound_1_over_1_minus_alpha,
        "bound_1_plus_2alpha": result.bound_1_plus_2alpha,
    }
    envelope = scenario_io.report_envelope(
        "pof",
        {"scenario": args.scenario, "alpha": alpha, "epsilon": epsilon,
         "method": args.method if epsilon is not None else None},
        sf.digest,
        result.to_dict(),
    )
    _emit(args, envelope, [row], list(row.keys()),
          f"pof {result.pof:.9g} at alpha={alpha} "
          f"(unconstrained {result.unconstrained_utilization:.6g}, "
          f"constrained {result.constrained_utilization:.6g})")
    return EXIT_OK


def _cmd_curve(args, sf) -> int:
    scenario = sf.scenario
    v_max = args.v_max if args.v_max is not None else 2.0 * max(scenario.means)
    rows = []
    series = {}
    for group in scenario.groups:
        table = scenario_io.emit_availability_curve(group.dist, v_max, args.steps)
        series[group.name] = [[v, q, em] for v, q, em in table]
        rows.extend(
            {"group": group.name, "v": v, "availability": q, "expected_min": em}
            for v, q, em in table
        )
    envelope = scenario_io.report_envelope(
        "curve",
        {"scenario": args.scenario, "v_max": v_max, "steps": args.steps},
        sf.digest,
        {"v_max": v_max, "steps": args.steps, "series": series},
    )
    _emit(args, envelope, rows, ["group", "v", "availability", "expected_min"],
          f"curves for {scenario.size} groups over [0, {v_max}] in {args.steps} steps")
    return EXIT_OK


def _cmd_mc_check(args, sf) -> int:
    scenario = sf.scenario
    alloc = (
        _parse_allocation(args.allocation, scenario)
        if args.allocation
        else allocation.mean_weighted(scenario)
    )
    seed = _resolve(args.seed, sf.defaults.seed, DEFAULT_SEED)
    samples = _resolve(args.samples, sf.defaults.samples, DEFAULT_SAMPLES)
    mc = montecarlo.estimate_report(scenario, alloc, samples, seed)

    def comparison(quantity, exact, estimate):
        gap = estimate.value - exact
        if estimate.standard_error > 0.0:
            z = gap / estimate.standard_error
        else:
            z = 0.0 if abs(gap) <= 1e-12 else float("inf")
        return {
            "quantity": quantity,
            "exact": exact,
            "mc_value": estimate.value,
            "se": estimate.standard_error,
            "z_score": z,
            "ok": abs(z) <= 4.0,
        }

    rows = []
    for group, v, report in zip(scenario.groups, alloc.values, mc.groups):
        rows.append(
            comparison(f"expected_min[{group.name}]", group.dist.expected_min(v), report.expected_min)
        )
        rows.append(
            comparison(f"availability[{group.name}]", metrics.availability(group.dist, v), report.availability)
        )
    rows.append(comparison("utilization", metrics.utilization(scenario, alloc), mc.utilization))
    all_ok = all(row["ok"] for row in rows)
    envelope = scenario_io.report_envelope(
        "mc-check",
        {"scenario": args.scenario, "seed": seed, "samples": samples,
         "allocation": list(alloc.values)},
        sf.digest,
        {"rows": rows, "all_ok": all_ok, "mc_report": mc.to_dict()},
    )
    _emit(args, envelope, rows, ["quantity", "exact", "mc_value", "se", "z_score", "ok"],
          f"{len(rows)} quantities compared at {samples} samples: "
          + ("all |z| <= 4" if all_ok else "SOME CHECKS EXCEED 4 SE"))
    return EXIT_OK


_HANDLERS = {
    "allocate": _cmd_allocate,
    "evaluate": _cmd_evaluate,
    "optimize": _cmd_optimize,
    "certify": _cmd_certify,
    "pof": _cmd_pof,
    "curve": _cmd_curve,
    "mc-check": _cmd_mc_check,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        sf = scenario_io.load_scenario_path(args.scenario)
        return _HANDLERS[args.command](args, sf)
    except allocation.OptimizerError as exc:
        print(f"fairalloc: optimizer error: {exc}", file=sys.stderr)
        return EXIT_OPTIMIZER
    except (CliError, scenario_io.ScenarioError, DistributionError,
            certificates.CertificateError, ValueError) as exc:
        print(f"fairalloc: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"fairalloc: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def entry_point() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry_point()
