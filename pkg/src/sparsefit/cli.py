"""Command-line surface: fit, path, cv, threshold curves, and simulations.

CSV in, JSON/CSV out.  Exit codes: 0 success, 2 bad flags, 3 data errors,
4 solver non-convergence (a partial result is still written with
``"converged": false``).
"""

import configparser
import os
import sys

import click
import numpy as np

from . import glm, jsonio, lla, lqa, sim, subset, threshold, tuning
from .exceptions import DataError, NonConvergence, SparsefitError, TooManyPredictors
from .penalty import PenaltySpec, format_penalty, parse_penalty

_METHODS = ("one-step", "k-step", "full-lla", "lqa", "plqa", "subset")

EXIT_DATA = 3
EXIT_NONCONVERGENCE = 4


def _fail_data(msg):
    click.echo(f"error: {msg}", err=True)
    sys.exit(EXIT_DATA)


def _write(text, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


def _g17(x):
    return jsonio._format_float(float(x))


@click.group()
def main():
    """Sparse estimation with concave penalties: one-step LLA, LQA baselines,
    best-subset selection, thresholding curves, and simulation studies."""


def _load(data, response, family, intercept):
    try:
        return glm.load_csv(data, response, family, intercept)
    except DataError as exc:
        _fail_data(exc)


def _parse_penalty_flag(text):
    if text is None:
        raise click.UsageError("this method requires --penalty")
    try:
        return parse_penalty(text)
    except ValueError as exc:
        raise click.UsageError(str(exc))


def _fit_json(fit, family, names, pen=None):
    doc = {
        "schema": "sparsefit/1",
        "method": fit.method,
        "family": family,
        "penalty": format_penalty(pen) if pen is not None else None,
        "lambda": fit.lam,
        "coefficients": list(map(float, fit.coefficients)),
        "intercept": fit.intercept,
        "support": list(fit.support),
        "iterations": fit.iterations,
        "objective_trace": list(map(float, fit.objective_trace)),
        "converged": fit.converged,
        "feature_names": names,
    }
    return jsonio.dumps(doc, indent=2) + "\n"


def _cv_lambda(dataset, method, pen, folds, n_lambda, min_ratio, seed, k=1):
    b_init = glm.fit_mle(dataset)
    lam_max = lla.one_step_lambda_max(dataset, pen, b0=b_init)
    grid = tuning.default_lambda_grid(lam_max, n_lambda, min_ratio)
    if method == "one-step":
        def fitter(train, g):
            return lla.one_step_path(train, pen, g)
    else:
        def fit_one(train, spec, b0):
            if method == "k-step":
                return lla.k_step(train, spec, b0=b0, k=k)
            if method == "lqa":
                return lqa.lqa_fit(train, spec, b0=b0)
            return lqa.perturbed_lqa_fit(train, spec, b0=b0)

        def fitter(train, g):
            b0 = glm.fit_mle(train)
            out = []
            for lam in g:
                try:
                    out.append(fit_one(train, PenaltySpec(pen.family, float(lam), a=pen.a, q=pen.q), b0))
                except SparsefitError:
                    out.append(None)
            return out

    return tuning.cv_select(dataset, fitter, grid, folds, seed)


@main.command()
@click.option("--data", required=True, help="input CSV with a header row")
@click.option("--response", required=True, help="name of the response column")
@click.option("--family", type=click.Choice(glm.FAMILIES), default="gaussian")
@click.option("--method", type=click.Choice(_METHODS), default="one-step")
@click.option("--penalty", "penalty_str", default=None, help='e.g. "scad:lambda=2,a=3.7"')
@click.option("--lambda", "lam", type=float, default=None, help="override the penalty level")
@click.option("--cv", is_flag=True, help="pick lambda by k-fold cross-validation")
@click.option("--criterion", type=click.Choice(subset.CRITERIA), default="bic")
@click.option("--k", type=int, default=2, help="number of steps for k-step")
@click.option("--eps0", type=float, default=None, help="LQA deletion cutoff")
@click.option("--tau0", type=float, default=None, help="perturbed-LQA perturbation")
@click.option("--folds", type=int, default=tuning.DEFAULT_FOLDS)
@click.option("--intercept", is_flag=True)
@click.option("--seed", type=int, default=0)
@click.option("--out", default=None, help="write JSON here instead of stdout")
def fit(data, response, family, method, penalty_str, lam, cv, criterion, k,
        eps0, tau0, folds, intercept, seed, out):
    """Fit one model and emit the result as JSON."""
    dataset, names = _load(data, response, family, intercept)
    if method == "subset":
        try:
            res = subset.best_subset(dataset, criterion)
        except TooManyPredictors as exc:
            _fail_data(exc)
        _write(_fit_json(res, family, names), out)
        return
    pen = _parse_penalty_flag(penalty_str)
    if cv and lam is not None:
        raise click.UsageError("--lambda and --cv are mutually exclusive")
    if cv:
        lam, _ = _cv_lambda(dataset, method, pen, folds, tuning.DEFAULT_N_LAMBDA,
                            tuning.DEFAULT_MIN_RATIO, seed, k=k)
    if lam is not None:
        pen = PenaltySpec(pen.family, float(lam), a=pen.a, q=pen.q)
    try:
        if method == "one-step":
            res = lla.one_step(dataset, pen)
        elif method == "k-step":
            res = lla.k_step(dataset, pen, k=k)
        elif method == "full-lla":
            res = lla.full_lla(dataset, pen)
        elif method == "lqa":
            res = lqa.lqa_fit(dataset, pen, eps0=eps0)
        else:
            res = lqa.perturbed_lqa_fit(dataset, pen, tau0=tau0)
    except NonConvergence as exc:
        if exc.result is not None:
            _write(_fit_json(exc.result, family, names, pen), out)
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_NONCONVERGENCE)
    except SparsefitError as exc:
        _fail_data(exc)
    _write(_fit_json(res, family, names, pen), out)


@main.command()
@click.option("--data", required=True)
@click.option("--response", required=True)
@click.option("--family", type=click.Choice(glm.FAMILIES), default="gaussian")
@click.option("--penalty", "penalty_str", required=True,
              help="penalty family; its lambda= is ignored in favor of the grid")
@click.option("--n-lambda", type=int, default=tuning.DEFAULT_N_LAMBDA)
@click.option("--min-ratio", type=float, default=tuning.DEFAULT_MIN_RATIO)
@click.option("--intercept", is_flag=True)
@click.option("--out", default=None)
def path(data, response, family, penalty_str, n_lambda, min_ratio, intercept, out):
    """One-step coefficient profile over the default lambda grid (CSV)."""
    dataset, names = _load(data, response, family, intercept)
    pen = _parse_penalty_flag(penalty_str)
    try:
        b0 = glm.fit_mle(dataset)
        lam_max = lla.one_step_lambda_max(dataset, pen, b0=b0)
        grid = tuning.default_lambda_grid(lam_max, n_lambda, min_ratio)
        fits = lla.one_step_path(dataset, pen, grid, b0=b0)
    except SparsefitError as exc:
        _fail_data(exc)
    cols = ["lambda"] + (["intercept"] if intercept else []) + names
    lines = [",".join(cols)]
    for lam, fitres in zip(grid, fits):
        if fitres is None:
            vals = [float("nan")] * (len(cols) - 1)
        else:
            vals = ([fitres.intercept] if intercept else []) + list(fitres.coefficients)
        lines.append(",".join([_g17(lam)] + [_g17(v) for v in vals]))
    _write("\n".join(lines) + "\n", out)


@main.command()
@click.option("--data", required=True)
@click.option("--response", required=True)
@click.option("--family", type=click.Choice(glm.FAMILIES), default="gaussian")
@click.option("--method", type=click.Choice(("one-step", "lqa", "plqa")), default="one-step")
@click.option("--penalty", "penalty_str", required=True)
@click.option("--folds", type=int, default=tuning.DEFAULT_FOLDS)
@click.option("--n-lambda", type=int, default=tuning.DEFAULT_N_LAMBDA)
@click.option("--min-ratio", type=float, default=tuning.DEFAULT_MIN_RATIO)
@click.option("--intercept", is_flag=True)
@click.option("--seed", type=int, default=0)
@click.option("--out", default=None)
def cv(data, response, family, method, penalty_str, folds, n_lambda, min_ratio,
       intercept, seed, out):
    """Cross-validation curve as CSV; the chosen lambda is on the first line."""
    dataset, _ = _load(data, response, family, intercept)
    pen = _parse_penalty_flag(penalty_str)
    try:
        lam_star, curve = _cv_lambda(dataset, method, pen, folds, n_lambda, min_ratio, seed)
    except SparsefitError as exc:
        _fail_data(exc)
    lines = [f"# lambda_star = {_g17(lam_star)}", "lambda,loss"]
    lines += [f"{_g17(lam)},{_g17(loss)}" for lam, loss in curve]
    _write("\n".join(lines) + "\n", out)


@main.command("threshold")
@click.option("--penalty", "penalty_str", required=True)
@click.option("--mode", type=click.Choice(("exact", "one-step")), default="one-step")
@click.option("--zmin", type=float, default=-10.0)
@click.option("--zmax", type=float, default=10.0)
@click.option("--step", type=float, default=0.01)
@click.option("--out", default=None)
def threshold_cmd(penalty_str, mode, zmin, zmax, step, out):
    """Thresholding-rule curve theta(z) on a z grid, with a jump report."""
    pen = _parse_penalty_flag(penalty_str)
    if not step > 0 or not zmax > zmin:
        raise click.UsageError("need step > 0 and zmax > zmin")
    grid = np.arange(zmin, zmax + step / 2.0, step)
    table = threshold.emit_curve(pen, mode.replace("-", "_"), grid)
    if table.discontinuities:
        report = "# discontinuities: " + ";".join(_g17(z) for z in table.discontinuities)
    else:
        report = "# discontinuities: none"
    lines = [report, "z,theta"]
    lines += [f"{_g17(z)},{_g17(t)}" for z, t in zip(table.z, table.theta)]
    _write("\n".join(lines) + "\n", out)


def _scenario_from_section(section, reps, seed):
    def get(key, cast, default=None):
        if key not in section:
            return default
        return cast(section[key])

    methods = tuple(s.strip() for s in section.get("methods", "").split(",") if s.strip())
    if not methods:
        raise DataError("config section needs a methods = ... line")
    kwargs = dict(
        example=section.get("example", "linear").strip(),
        n=get("n", int, 50),
        replications=reps if reps is not None else get("replications", int, 100),
        methods=methods,
        p=get("p", int, 12),
        rho=get("rho", float, 0.5),
        seed=seed if seed is not None else get("seed", int, 0),
        test_points=get("test_points", int, 10_000),
        cv_folds=get("cv_folds", int, tuning.DEFAULT_FOLDS),
        n_lambda=get("n_lambda", int, tuning.DEFAULT_N_LAMBDA),
        lambda_min_ratio=get("lambda_min_ratio", float, tuning.DEFAULT_MIN_RATIO),
    )
    if "beta_true" in section:
        kwargs["beta_true"] = tuple(float(v) for v in section["beta_true"].split(","))
    return sim.ScenarioSpec(**kwargs)


@main.command()
@click.option("--config", "config_path", required=True, help="scenario config file")
@click.option("--scenario", default=None, help="run a single named section")
@click.option("--reps", type=int, default=None, help="override replications")
@click.option("--seed", type=int, default=None, help="override the seed")
@click.option("--threads", type=int, default=None,
              help="worker processes (default: SPARSEFIT_THREADS or 1)")
@click.option("--out", default=None, help="write the JSON report here")
def simulate(config_path, scenario, reps, seed, threads, out):
    """Run simulation scenarios from a config file and print metric tables."""
    if threads is None:
        threads = int(os.environ.get("SPARSEFIT_THREADS", "1"))
    parser = configparser.ConfigParser()
    try:
        with open(config_path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        _fail_data(f"cannot read config {config_path}: {exc}")
    names = [scenario] if scenario else parser.sections()
    if scenario and scenario not in parser.sections():
        _fail_data(f"no scenario section named {scenario!r}")
    if not names:
        _fail_data(f"{config_path}: no scenario sections")
    reports = {}
    for name in names:
        try:
            spec = _scenario_from_section(parser[name], reps, seed)
        except (DataError, ValueError) as exc:
            _fail_data(f"[{name}] {exc}")
        report = sim.run_scenario(spec, threads=threads)
        reports[name] = report
        click.echo(f"[{name}]")
        click.echo(sim.format_table(report))
    doc = {name: rep.to_dict() for name, rep in reports.items()}
    if out:
        with open(out, "w") as fh:
            fh.write(jsonio.dumps(doc, indent=2) + "\n")


if __name__ == "__main__":
    main()
