"""Command line entry point.

Exit status: 0 when every check passes, 1 when a numeric rule fails (the
failing rule ids go to stderr), 2 for configuration and usage errors.
"""
from __future__ import annotations

import csv
import io
import os
import sys
from pathlib import Path

import click

from . import suites
from .config import BackgroundConfig, ConfigError, load_config
from .report import NormReport, dumps_csv, dumps_json, read_json, to_jsonable

THREADS_ENV = "NULLCONE_THREADS"


def _threads() -> int | None:
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw == "":
        return None
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n < 1:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


def _config_error(exc: Exception) -> None:
    click.echo(f"config error: {exc}", err=True)
    sys.exit(2)


def _write(text: str, out: str | None) -> None:
    if out is None:
        click.echo(text, nl=False)
        return
    try:
        Path(out).write_text(text)
    except OSError as exc:
        click.echo(f"error: cannot write {out}: {exc.strerror}", err=True)
        sys.exit(2)


def _finish(rep: NormReport, out: str | None = None, fmt: str = "json") -> None:
    _write(dumps_json(rep) if fmt == "json" else dumps_csv(rep), out)
    for c in rep.checks:
        click.echo(f"{'PASS' if c.passed else 'FAIL'} {c.rule} measured={to_jsonable(c.measured)}"
                   f" threshold={to_jsonable(c.threshold)}", err=True)
    if not rep.passed:
        click.echo(f"failing rules: {', '.join(rep.failing_rules())}", err=True)
        sys.exit(1)


def _seed(ctx: click.Context, cfg=None) -> int:
    if ctx.obj["seed"] is not None:
        return ctx.obj["seed"]
    return cfg.seed if cfg is not None else 0


def _load(path: str, require: str = "grid"):
    try:
        return load_config(path, require)
    except ConfigError as exc:
        _config_error(exc)


out_option = click.option("--out", type=click.Path(dir_okay=False), default=None,
                          help="Write the report here instead of stdout.")
fmt_option = click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json",
                          show_default=True)


@click.group()
@click.option("--seed", type=int, default=None,
              help="Seed for every randomized check [default: 0, or the config seed].")
@click.pass_context
def main(ctx: click.Context, seed: int) -> None:
    """Verification harness for double null perturbation machinery."""
    try:
        n = _threads()
    except ConfigError as exc:
        _config_error(exc)
    if n is not None:
        from threadpoolctl import threadpool_limits
        ctx.with_resource(threadpool_limits(limits=n))
    ctx.obj = {"seed": seed}


# ---------------------------------------------------------------- background

@main.command()
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
              help="Read M, a, r_min, r_max, n_samples from a [background] section.")
@click.option("--M", "M", type=float, default=None, help="[default: 1.0]")
@click.option("--a", "a", type=float, default=None, help="[default: 0.0]")
@click.option("--r-min", type=float, default=None, help="[default: 10.0]")
@click.option("--r-max", type=float, default=None, help="[default: 1000.0]")
@click.option("--samples", type=int, default=None, help="[default: 200]")
@click.option("--table", type=click.Path(dir_okay=False), default=None,
              help="Also write the per-sample decay table as CSV.")
@out_option
@fmt_option
def background(config_path, M, a, r_min, r_max, samples, table, out, fmt):
    """Ricci coefficients against the finite-difference oracle and decay constants (AC1).

    Flags override values from the config file.
    """
    from .kerr_background import KerrParams, decay_table

    b = _load(config_path, "background").background if config_path else BackgroundConfig()
    M = b.M if M is None else M
    a = b.a if a is None else a
    r_min = b.r_min if r_min is None else r_min
    r_max = b.r_max if r_max is None else r_max
    samples = b.n_samples if samples is None else samples
    if a != 0:
        _config_error(ValueError("key 'a': only the a = 0 background is implemented"))
    if M <= 0 or not 0 < r_min < r_max or samples < 2:
        _config_error(ValueError("need M > 0, 0 < r-min < r-max and at least 2 samples"))
    try:
        rep = suites.background_suite(M, a, r_min, r_max, samples)
    except ValueError as exc:
        _config_error(exc)
    if table:
        _write(decay_csv(decay_table(KerrParams(M, a), r_min, r_max, samples)), table)
    _finish(rep, out, fmt)


DECAY_COLUMNS = ("r", "quantity", "value", "class_q", "class_p", "normalized_constant")


def decay_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(DECAY_COLUMNS)
    for row in rows:
        w.writerow([to_jsonable(row[k]) for k in DECAY_COLUMNS])
    return buf.getvalue()


# ---------------------------------------------------------------- hodge

@main.group()
def hodge():
    """Sphere Hodge identities, solver residuals and the Poincare ratio."""


@hodge.command("verify")
@click.option("--L", "L", type=click.IntRange(2, 64), default=16, show_default=True)
@click.option("--trials", type=click.IntRange(1), default=100, show_default=True)
@out_option
@fmt_option
@click.pass_context
def hodge_verify(ctx, L, trials, out, fmt):
    """Hodge identities and elliptic solver residuals (AC2)."""
    _finish(suites.hodge_suite(L, trials, _seed(ctx)), out, fmt)


@hodge.command("poincare")
@click.option("--eps", type=click.FloatRange(0.0, 0.2), default=0.01, show_default=True)
@click.option("--L", "L", type=click.IntRange(2, 32), default=12, show_default=True)
@click.option("--trials", type=click.IntRange(1), default=5, show_default=True)
@out_option
@fmt_option
@click.pass_context
def hodge_poincare(ctx, eps, L, trials, out, fmt):
    """Spin-2 Poincare minimum, round and conformally perturbed (AC3)."""
    _finish(suites.poincare_suite(L, eps, trials, _seed(ctx)), out, fmt)


# ---------------------------------------------------------------- decaycheck

@main.command()
@click.option("--all", "all_", is_flag=True, help="Check the full equation database and mutants.")
@click.option("--eq", "--equation", "equation", default=None, help="Check a single equation id.")
@out_option
@fmt_option
def decaycheck(all_, equation, out, fmt):
    """Decay-signature type check of the linearized equations (AC7)."""
    from . import decay_calculus as dc

    if equation is not None:
        try:
            v = dc.check_equation(equation)
        except KeyError:
            _config_error(ValueError(f"key 'equation': unknown equation id {equation!r}"))
        rep = NormReport(f"decaycheck-{equation}")
        rep.values["min_margin"] = v.min_margin
        rep.add_check(f"AC7.{equation}", v.passed, v.min_margin, 0)
        _finish(rep, out, fmt)
        return
    rep = suites.decay_suite()
    click.echo(f"{rep.values['equations_passed']}/{rep.values['equations']} equations pass; "
               f"{rep.values['mutants_failed']}/{rep.values['mutants']} mutants rejected", err=True)
    _finish(rep, out, fmt)


# ---------------------------------------------------------------- frames

@main.group()
def frames():
    """Null frame transformations."""


@frames.command("verify")
@click.option("--trials", type=click.IntRange(1), default=20, show_default=True)
@out_option
@fmt_option
@click.pass_context
def frames_verify(ctx, trials, out, fmt):
    """Round trips, exact laws and perturbative scaling (AC8)."""
    _finish(suites.frames_suite(_seed(ctx), trials), out, fmt)


# ---------------------------------------------------------------- energy

@main.group()
def energy():
    """Bianchi pair divergence identities and energy balances."""


@energy.command("run")
@click.option("--pair", required=True,
              type=click.Choice(["alpha-beta", "beta-rhosigma", "rhosigma-betab", "betab-alphab"]))
@click.option("--p", "p", required=True, help="Weight p (integer or fraction).")
@click.option("--grid", "grid_path", required=True, type=click.Path(dir_okay=False))
@out_option
@click.pass_context
def energy_run(ctx, pair, p, grid_path, out):
    """Energy balance of one pair on an evolved solution of the configured grid."""
    from fractions import Fraction

    try:
        p = Fraction(p)
    except ValueError:
        _config_error(ValueError(f"key 'p': not a number: {p!r}"))
    cfg = _load(grid_path)
    seed = _seed(ctx, cfg)
    try:
        res = suites.energy_run(pair, p, cfg.grid, seed, cfg.quadrature)
    except ValueError as exc:
        _config_error(exc)
    _write(dumps_json(res), out)


@energy.command("mms")
@click.option("--M", "M", type=click.FloatRange(0.0), default=0.0, show_default=True)
@click.option("--s", "s", default="5", show_default=True)
@out_option
@fmt_option
@click.pass_context
def energy_mms(ctx, M, s, out, fmt):
    """Manufactured-solution convergence of the divergence identity (AC4)."""
    _finish(suites.mms_suite(M, s, _seed(ctx)), out, fmt)


@energy.command("cases")
@out_option
@fmt_option
def energy_cases(out, fmt):
    """Pair weights and estimate cases per decay regime (AC5)."""
    _finish(suites.cases_suite(), out, fmt)


# ---------------------------------------------------------------- evolve

@main.group()
def evolve():
    """Linear characteristic evolution and transport integrators."""


def _axis(name: str) -> str:
    return "ub" if name.startswith("Rb") else "u"


def cone_csv(rep: NormReport) -> str:
    """Per-cone trace table: axis (u or ub), norm name, coordinate, value."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("axis", "norm", "coordinate", "value"))
    for name, tr in sorted(rep.traces.items()):
        for x, v in zip(tr["coordinate"], tr["value"]):
            w.writerow((_axis(name), name, to_jsonable(x), to_jsonable(v)))
    return buf.getvalue()


@evolve.command("run")
@click.option("--grid", "grid_path", required=True, type=click.Path(dir_okay=False))
@click.option("--out-dir", type=click.Path(file_okay=False), default=None,
              help="Directory for evolve_cones.csv and evolve_summary.json.")
@click.pass_context
def evolve_run(ctx, grid_path, out_dir):
    """Linear Bianchi evolution with oracle, norm and slope checks (AC9)."""
    from .characteristic_evolution import StabilityError

    cfg = _load(grid_path)
    seed = _seed(ctx, cfg)
    try:
        _, rep = suites.evolve_suite(cfg.grid, seed, cfg.quadrature)
    except StabilityError as exc:
        _config_error(ConfigError(str(exc), key="ub_max"))
    except ValueError as exc:
        _config_error(exc)
    summary = NormReport(rep.run_id, rep.values, {}, rep.slopes, rep.checks, rep.meta)
    if out_dir is None:
        _finish(summary)
        return
    d = Path(out_dir)
    try:
        d.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        click.echo(f"error: cannot create {d}: {exc.strerror}", err=True)
        sys.exit(2)
    _write(cone_csv(rep), str(d / "evolve_cones.csv"))
    _finish(summary, str(d / "evolve_summary.json"))


@evolve.command("transport")
@click.option("--nodes", type=click.IntRange(3), default=41, show_default=True)
@out_option
@fmt_option
@click.pass_context
def evolve_transport(ctx, nodes, out, fmt):
    """Transport conservation and 4th-order convergence on Minkowski (AC6)."""
    _finish(suites.transport_suite(nodes, seed=_seed(ctx)), out, fmt)


# ---------------------------------------------------------------- report

@main.group()
def report():
    """Peeling tables and conversion of saved reports."""


@report.command("peeling")
@click.option("--s", "s_values", multiple=True, default=("3.5", "5", "6.5", "7", "8"),
              show_default=True)
@out_option
@fmt_option
def report_peeling(s_values, out, fmt):
    """Peeling exponents against the frozen reference tables (AC10)."""
    try:
        rep = suites.peeling_suite(s_values)
    except ValueError as exc:
        _config_error(exc)
    _finish(rep, out, fmt)


@report.command("render")
@click.argument("source", type=click.Path(exists=True, dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="csv",
              show_default=True)
@click.option("--plot", type=click.Path(dir_okay=False), default=None,
              help="Also draw the traces on log-log axes (needs matplotlib).")
@out_option
def report_render(source, fmt, plot, out):
    """Convert a saved JSON report; optionally plot its traces."""
    try:
        d = read_json(source)
        rep = NormReport(d["run_id"], d.get("values", {}), d.get("traces", {}),
                         d.get("slopes", {}), [], d.get("meta", {}))
    except (ValueError, KeyError, TypeError, AttributeError) as exc:
        _config_error(ValueError(f"{source} is not a report: {exc}"))
    _write(dumps_json(rep) if fmt == "json" else dumps_csv(rep), out)
    if plot:
        from .plotting import plot_traces

        try:
            plot_traces(rep, plot)
        except ImportError:
            click.echo("error: --plot needs matplotlib (pip install .[plot])", err=True)
            sys.exit(2)


if __name__ == "__main__":  # pragma: no cover
    main()
