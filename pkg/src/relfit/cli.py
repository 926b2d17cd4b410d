"""Command-line front end: describe, fit, test, simulate.

Exit codes: 0 success, 1 parse or validation failure, 2 solver
non-convergence, 3 augmented fallback from ``fit`` (the genuine MLE does
not exist; distinct so scripts can branch on it).  With --out, standard
output stays silent apart from one status line under --verbose.

Structured results are JSON with 17-significant-digit numbers in a fixed
field order; bulk per-replicate output is CSV.  Wall-clock metadata is
deliberately left out of the files so identical invocations produce
identical bytes.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .asymptotics import AsymptoticSummary, multinomial_cov, poisson_cov
from .errors import (
    NonConvergence,
    ParseError,
    ValidationError,
)
from .gof import GofReport, gof_test
from .mle import FitResult, SolverOptions, as_table, fit_augmented
from .model_core import RelationalModel, SamplingScheme, load_model
from .serialize import csv_row, dumps, format_float
from .simulate import (
    STATISTIC_NAMES,
    ExperimentConfig,
    SimulationReport,
    run_experiment,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relfit",
        description="Fit relational models, test goodness of fit, and run "
                    "Monte Carlo calibration experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    describe = sub.add_parser("describe", help="print model structure")
    describe.add_argument("--model", required=True, help="model JSON file")
    describe.set_defaults(handler=_cmd_describe)

    fit = sub.add_parser("fit", help="fit cell parameters by maximum likelihood")
    _add_fit_args(fit)
    fit.add_argument("--with-asymptotics", action="store_true",
                     help="attach standard errors and Pearson residuals")
    fit.add_argument("--full-cov", metavar="PATH",
                     help="write scaled and plug-in covariance matrices as CSV")
    fit.set_defaults(handler=_cmd_fit)

    test = sub.add_parser("test", help="goodness-of-fit statistics and p-values")
    _add_fit_args(test)
    test.add_argument("--statistic", default="all",
                      choices=("pearson", "lr", "bregman", "all"),
                      help="which rows the table output shows")
    test.set_defaults(handler=_cmd_test)

    simulate = sub.add_parser("simulate", help="Monte Carlo experiment")
    simulate.add_argument("--model", required=True, help="model JSON file")
    simulate.add_argument("--scheme", required=True,
                          choices=("poisson", "multinomial"))
    simulate.add_argument("--truth", required=True,
                          help="comma-separated cell parameters, e.g. 5,8,40")
    simulate.add_argument("--n", type=int, default=None,
                          help="multinomial sample size N")
    simulate.add_argument("--reps", type=int, default=10000,
                          help="number of replicates (default 10000)")
    simulate.add_argument("--seed", type=int, default=0,
                          help="64-bit unsigned seed (default 0)")
    simulate.add_argument("--statistic", default="all",
                          choices=("pearson", "lr", "bregman", "all"),
                          help="statistics to analyze (default all)")
    simulate.add_argument("--out", metavar="PATH", help="report JSON file")
    simulate.add_argument("--samples", metavar="PATH",
                          help="per-replicate CSV file")
    simulate.add_argument("--figures", metavar="DIR",
                          help="render density-vs-chi-squared PNGs into DIR")
    _add_solver_args(simulate)
    simulate.add_argument("--verbose", action="store_true")
    simulate.set_defaults(handler=_cmd_simulate)

    return parser


def _add_fit_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--model", required=True, help="model JSON file")
    sub.add_argument("--data", required=True,
                     help="counts file (.json with a 'counts' list, or "
                          "delimited text)")
    sub.add_argument("--scheme", required=True,
                     choices=("poisson", "multinomial"))
    sub.add_argument("--out", metavar="PATH", help="write JSON here instead "
                     "of standard output")
    _add_solver_args(sub)
    sub.add_argument("--verbose", action="store_true")


def _add_solver_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--tol", type=float, default=1e-10,
                     help="KKT residual tolerance (default 1e-10)")
    sub.add_argument("--max-iter", type=int, default=500,
                     help="iteration cap (default 500)")
    sub.add_argument("--existence-threshold", type=float, default=1e-12,
                     help="relative collapse threshold for nonexistence "
                          "detection (default 1e-12)")


def _solver_options(args) -> SolverOptions:
    return SolverOptions(
        tol=args.tol,
        max_iter=args.max_iter,
        existence_threshold=args.existence_threshold,
    )


def _load_counts(path: str) -> list[int]:
    text = Path(path).read_text(encoding="utf-8")
    if path.endswith(".json"):
        import json

        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON in data file: {exc}") from None
        if not isinstance(obj, dict) or "counts" not in obj:
            raise ParseError("data file must hold an object with a 'counts' list")
        counts = obj["counts"]
        if not isinstance(counts, list):
            raise ParseError("'counts' must be a list")
        return counts
    tokens = text.replace(",", " ").split()
    if not tokens:
        raise ParseError(f"data file {path} holds no counts")
    counts = []
    for token in tokens:
        try:
            counts.append(int(token))
        except ValueError:
            raise ParseError(f"non-integer count {token!r} in {path}") from None
    return counts


def _emit(text: str, out: str | None, verbose: bool, label: str) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    Path(out).write_text(text, encoding="utf-8")
    if verbose:
        print(f"wrote {label} to {out}")


def _kernel_text(model: RelationalModel) -> str:
    rows = ",".join(
        "[" + ",".join(str(x) for x in row) + "]" for row in model.kernel_basis
    )
    return f"[{rows}]"


def _cmd_describe(args) -> int:
    model = load_model(args.model)
    flag = "true" if model.overall_effect else "false"
    print(f"I={model.n_cells} J={model.n_effects} K={model.df} "
          f"overall_effect={flag} kernel={_kernel_text(model)}")
    print("cells: " + ", ".join(model.cell_labels))
    for name, row in zip(model.effect_names, model.design):
        cells = [i for i, x in enumerate(row) if x == 1]
        print(f"effect {name}: cells {cells}")
    return 0


def _fit_payload(fit: FitResult, summary: AsymptoticSummary | None) -> dict:
    payload = {
        "scheme": fit.scheme.value,
        "existed": fit.existed,
        "degenerate": fit.degenerate,
        "estimate": list(fit.estimate),
        "lagrange": list(fit.lagrange),
        "alpha0": fit.alpha0,
        "gamma": fit.gamma,
        "kkt_residual": fit.kkt_residual,
        "iterations": fit.iterations,
    }
    if summary is not None:
        payload["asymptotics"] = {
            "std_errors": [float(x) for x in summary.std_errors],
            "residuals": [float(x) for x in summary.residuals],
            "rank": summary.rank,
        }
    return payload


def _attach_asymptotics(model, table, scheme, fit) -> AsymptoticSummary | None:
    if not fit.existed:
        return None
    try:
        if scheme is SamplingScheme.POISSON:
            return poisson_cov(model, fit.estimate_array,
                               observed=table.counts_array)
        return multinomial_cov(model, fit.estimate_array, n=table.total,
                               observed=table.counts_array)
    except ValidationError as exc:
        print(f"note: asymptotics unavailable at this estimate: {exc}",
              file=sys.stderr)
        return None


def _write_cov_csv(path: str, model: RelationalModel,
                   summary: AsymptoticSummary) -> None:
    lines = [csv_row(["matrix"] + list(model.cell_labels))]
    for label, matrix in (("scaled", summary.scaled_cov),
                          ("estimate", summary.estimate_cov)):
        for row in matrix:
            lines.append(csv_row([label] + [float(x) for x in row]))
    Path(path).write_text("".join(lines), encoding="utf-8")


def _cmd_fit(args) -> int:
    model = load_model(args.model)
    scheme = SamplingScheme.parse(args.scheme)
    table = as_table(_load_counts(args.data), model)
    fit = fit_augmented(model, table, scheme, _solver_options(args))
    summary = None
    if args.with_asymptotics or args.full_cov:
        summary = _attach_asymptotics(model, table, scheme, fit)
        if args.full_cov:
            if summary is None:
                print("note: no covariance written; the genuine MLE did not "
                      "exist", file=sys.stderr)
            else:
                _write_cov_csv(args.full_cov, model, summary)
    payload = _fit_payload(fit, summary if args.with_asymptotics else None)
    _emit(dumps(payload), args.out, args.verbose, "fit result")
    return 0 if fit.existed else 3


def _gof_payload(report: GofReport) -> dict:
    return {
        "scheme": report.scheme.value,
        "existed": report.existed,
        "df": report.df,
        "pearson": report.pearson,
        "lr": report.lr,
        "bregman": report.bregman,
        "p_pearson": report.p_pearson,
        "p_lr": report.p_lr,
        "p_bregman": report.p_bregman,
        "observed_total": report.observed_total,
        "fitted_total": report.fitted_total,
        "lr_reference_supported": report.lr_reference_supported,
    }


def _gof_table(report: GofReport, which: tuple[str, ...]) -> str:
    values = {"pearson": (report.pearson, report.p_pearson),
              "lr": (report.lr, report.p_lr),
              "bregman": (report.bregman, report.p_bregman)}
    lines = [f"{'statistic':<10} {'value':>24} {'df':>4}  p"]
    flagged = False
    for name in which:
        value, p = values[name]
        mark = ""
        if name == "lr" and not report.lr_reference_supported:
            mark = " *"
            flagged = True
        lines.append(
            f"{name:<10} {format_float(value):>24} {report.df:>4}  "
            f"{format_float(p)}{mark}"
        )
    if flagged:
        lines.append("* chi-squared reference distribution unsupported for "
                     "lr under this model and scheme")
    return "\n".join(lines) + "\n"


def _statistics_choice(choice: str) -> tuple[str, ...]:
    return STATISTIC_NAMES if choice == "all" else (choice,)


def _cmd_test(args) -> int:
    model = load_model(args.model)
    scheme = SamplingScheme.parse(args.scheme)
    table = as_table(_load_counts(args.data), model)
    report = gof_test(model, table, scheme, _solver_options(args))
    if args.out is None:
        sys.stdout.write(_gof_table(report, _statistics_choice(args.statistic)))
    else:
        _emit(dumps(_gof_payload(report)), args.out, args.verbose, "test report")
    return 0


def _report_payload(report: SimulationReport) -> dict:
    return {
        "scheme": report.scheme.value,
        "truth": list(report.truth),
        "sample_size": report.sample_size,
        "replicates": report.replicates,
        "seed": report.seed,
        "df": report.df,
        "statistics": list(report.statistics),
        "existence_failures": report.existence_failures,
        "failure_indices": list(report.failure_indices),
        "negative_lr_fraction": report.negative_lr_fraction,
        "total_mismatch_fraction": report.total_mismatch_fraction,
        "ks": dict(report.ks),
        "quantiles": {k: dict(v) for k, v in report.quantiles.items()},
        "histograms": {
            k: {"bin_edges": list(v["bin_edges"]), "counts": list(v["counts"])}
            for k, v in report.histograms.items()
        },
        "samples": {k: list(v) for k, v in report.samples.items()},
    }


def _samples_csv(report: SimulationReport) -> str:
    lines = [csv_row(["replicate", "pearson", "lr", "bregman", "existed",
                      "fitted_total", "observed_total"])]
    for pos, index in enumerate(report.replicate_indices):
        lines.append(csv_row([
            index,
            report.samples["pearson"][pos],
            report.samples["lr"][pos],
            report.samples["bregman"][pos],
            report.existed[pos],
            report.fitted_totals[pos],
            report.observed_totals[pos],
        ]))
    return "".join(lines)


def _parse_truth(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise ParseError(f"could not parse --truth value {text!r}") from None


def _cmd_simulate(args) -> int:
    model = load_model(args.model)
    scheme = SamplingScheme.parse(args.scheme)
    config = ExperimentConfig(
        model=model,
        scheme=scheme,
        truth=_parse_truth(args.truth),
        replicates=args.reps,
        seed=args.seed,
        sample_size=args.n,
        statistics=_statistics_choice(args.statistic),
        solver=_solver_options(args),
    )
    report = run_experiment(config)
    status = []
    _emit(dumps(_report_payload(report)), args.out, False, "")
    if args.out:
        status.append(f"report {args.out}")
    if args.samples:
        Path(args.samples).write_text(_samples_csv(report), encoding="utf-8")
        status.append(f"samples {args.samples}")
    if args.figures:
        from .figures import render_figures

        written = render_figures(report, args.figures)
        status.append(f"{len(written)} figures in {args.figures}")
    if args.verbose and status:
        print(f"simulated {report.replicates} replicates in "
              f"{report.runtime_seconds:.1f}s; wrote " + ", ".join(status))
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.handler(args)
    except (ParseError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NonConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
