"""CLI entry point for gasflow using Click."""

from __future__ import annotations

import contextlib
import json
import os
import sys
from collections.abc import Iterator
from pathlib import Path

import click
import pandas as pd
import structlog
import yaml
from pydantic import ValidationError

from gasflow import __version__
from gasflow.config import (
    EosKind,
    InitMode,
    NominalConfig,
    PhysicsConfig,
    ResidualForm,
    SolverSettings,
    load_all_config,
)
from gasflow.errors import (
    ConfigurationError,
    EosDomainError,
    GasflowError,
    NetworkFileError,
    NonConvergence,
)
from gasflow.io.network_file import (
    MetaEntry,
    NetworkDocument,
    load_network_document,
    write_network,
)
from gasflow.io.solution_file import (
    FLOAT_FORMAT,
    OutputFormat,
    node_table,
    read_solution,
    write_solution,
)
from gasflow.log import configure_logging
from gasflow.network.model import errors_only, flow_diagnostics, global_balance, validate
from gasflow.network.synthetic import SyntheticSpec, generate_network
from gasflow.physics.eos import EosModel
from gasflow.physics.nondim import default_scales, groups
from gasflow.solver import solve_network
from gasflow.studies import (
    DEFAULT_ANGLES,
    PipeCase,
    gravity_effect,
    groups_table,
    pipe_profile,
    sweep_incline,
    validate_residuals,
)
from gasflow.ui.terminal import TerminalUI

logger = structlog.get_logger()

EXIT_FAILURE = 1
EXIT_NONCONVERGENCE = 2
EXIT_INPUT = 3


@contextlib.contextmanager
def _exit_on_error(ui: TerminalUI) -> Iterator[None]:
    """Map gasflow errors to the CLI exit codes."""
    try:
        yield
    except NonConvergence as e:
        ui.display_report(e.report)
        ui.display_error(str(e))
        sys.exit(EXIT_NONCONVERGENCE)
    except (
        ConfigurationError, EosDomainError, NetworkFileError, ValidationError, FileNotFoundError,
    ) as e:
        ui.display_error(str(e))
        sys.exit(EXIT_INPUT)
    except GasflowError as e:
        ui.display_error(str(e))
        logger.error("command_failed", error=str(e), kind=type(e).__name__)
        sys.exit(EXIT_FAILURE)


def _load_config(config_dir: str | None) -> tuple[SolverSettings, PhysicsConfig]:
    """Explicit or environment config dirs must exist; ./config falls back to defaults."""
    explicit = config_dir or os.environ.get("GASFLOW_CONFIG")
    if explicit:
        return load_all_config(explicit)
    if Path("./config").is_dir():
        return load_all_config("./config")
    return SolverSettings(), PhysicsConfig()


def _apply_flags(
    settings: SolverSettings,
    tol: float | None = None,
    max_iter: int | None = None,
    init: str | None = None,
    no_gravity: bool = False,
    no_inertia: bool = False,
    residual_form: str | None = None,
) -> SolverSettings:
    update: dict[str, object] = {}
    if tol is not None:
        update["tol_newton"] = tol
    if max_iter is not None:
        update["max_iter"] = max_iter
    if init is not None:
        update["init"] = InitMode(init)
    if no_gravity:
        update["include_gravity"] = False
    if no_inertia:
        update["include_inertia"] = False
    if residual_form is not None:
        update["residual_form"] = ResidualForm(residual_form)
    return settings.model_copy(update=update)


def _eos_model(
    physics: PhysicsConfig, flag: str | None, doc: NetworkDocument | None = None,
) -> EosModel:
    """EoS from the CLI flag, else the network file, else physics.yaml."""
    kind = physics.eos.kind
    if doc is not None and doc.meta.eos is not None:
        kind = doc.meta.eos
    if flag is not None:
        kind = EosKind(flag)
    return EosModel.from_config(physics.eos.model_copy(update={"kind": kind}))


def _nominal(physics: PhysicsConfig, doc: NetworkDocument | None) -> NominalConfig:
    if doc is None or doc.meta.nominal is None:
        return physics.nominal
    return physics.nominal.model_copy(update=doc.meta.nominal.model_dump(exclude_none=True))


def _emit_table(df: pd.DataFrame, output: str | None, fmt: str) -> None:
    """Write one table to a file, or to stdout when no output is given."""
    if fmt == OutputFormat.JSON.value:
        text = json.dumps(df.to_dict(orient="records"), indent=2)
    else:
        text = df.to_csv(index=False, float_format=FLOAT_FORMAT)
    if output is None:
        click.echo(text, nl=False)
    else:
        Path(output).parent.mkdir(parents=True, exist_ok=True)
        Path(output).write_text(text)


def common_options(func):
    func = click.option(
        "--log-level",
        type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
        default=None,
        help="Logging level. Defaults to GASFLOW_LOG_LEVEL env or WARNING.",
    )(func)
    func = click.option(
        "--config-dir",
        type=click.Path(file_okay=False),
        default=None,
        help="Path to configuration directory. Defaults to GASFLOW_CONFIG env or ./config/",
    )(func)
    return func


def physics_options(func):
    for decorator in reversed([
        click.option("--eos", type=click.Choice([k.value for k in EosKind]), default=None,
                     help="Equation of state; overrides the network file and physics.yaml."),
        click.option("--no-gravity", is_flag=True, help="Drop the gravity term."),
        click.option("--no-inertia", is_flag=True, help="Drop the inertia term."),
    ]):
        func = decorator(func)
    return func


def pipe_case_options(func):
    yamal = PipeCase.yamal()
    for decorator in reversed([
        click.option("--length", type=float, default=yamal.length, show_default=True,
                     help="Pipe length [m]."),
        click.option("--diameter", type=float, default=yamal.diameter, show_default=True,
                     help="Diameter [m]."),
        click.option("--friction", type=float, default=yamal.friction, show_default=True,
                     help="Friction factor."),
        click.option("--p-in", type=float, default=yamal.p_in, show_default=True,
                     help="Inlet pressure [Pa]."),
        click.option("--flow", type=float, default=yamal.flow, show_default=True,
                     help="Mass flow [kg/s]."),
    ]):
        func = decorator(func)
    return func


def _setup(
    config_dir: str | None, log_level: str | None,
) -> tuple[TerminalUI, SolverSettings, PhysicsConfig]:
    configure_logging(log_level or os.environ.get("GASFLOW_LOG_LEVEL", "WARNING"))
    ui = TerminalUI()
    with _exit_on_error(ui):
        settings, physics = _load_config(config_dir)
    return ui, settings, physics


def _load_network(ui: TerminalUI, path: str, lenient: bool):
    doc = load_network_document(path)
    network = doc.to_network()
    diagnostics = validate(network)
    if diagnostics:
        ui.display_diagnostics(diagnostics)
    if errors_only(diagnostics) and not lenient:
        count = len(errors_only(diagnostics))
        ui.display_error(f"{count} structural error(s); use --lenient to continue")
        sys.exit(EXIT_INPUT)
    return doc, network


@click.group()
@click.version_option(version=__version__, prog_name="gasflow")
def cli() -> None:
    """gasflow - steady-state gas pipeline network solver."""


@cli.command()
@click.argument("network_file", type=click.Path(exists=True, dir_okay=False))
@physics_options
@click.option("--tol", type=float, default=None, help="Newton tolerance on the max-norm.")
@click.option("--max-iter", type=int, default=None, help="Newton iteration limit per stage.")
@click.option("--init", type=click.Choice([m.value for m in InitMode]), default=None,
              help="Start from the collocation solve, a flat guess, or --initial-solution.")
@click.option("--initial-solution", type=click.Path(exists=True), default=None,
              help="Solution to start from with --init file.")
@click.option("--residual-form", type=click.Choice([r.value for r in ResidualForm]), default=None)
@click.option("--profiles", is_flag=True, help="Also write per-pipe pressure profiles.")
@click.option("--print-groups", is_flag=True,
              help="Show nominal scales; emit per-pipe groups as CSV on stdout.")
@click.option("--lenient", is_flag=True, help="Continue despite structural errors.")
@click.option("--output", "-o", type=click.Path(), default=None,
              help="Output directory (csv) or file (json). Node table to stdout when omitted.")
@click.option("--format", "fmt", type=click.Choice([f.value for f in OutputFormat]), default="csv")
@common_options
def solve(
    network_file: str, eos: str | None, no_gravity: bool, no_inertia: bool, tol: float | None,
    max_iter: int | None, init: str | None, initial_solution: str | None, residual_form: str | None,
    profiles: bool, print_groups: bool, lenient: bool, output: str | None, fmt: str,
    config_dir: str | None, log_level: str | None,
) -> None:
    """Solve a network for nodal pressures and edge flows."""
    ui, settings, physics = _setup(config_dir, log_level)
    with _exit_on_error(ui):
        doc, network = _load_network(ui, network_file, lenient)
        settings = _apply_flags(
            settings, tol, max_iter, init, no_gravity, no_inertia, residual_form,
        )
        model = _eos_model(physics, eos, doc)
        nominal = _nominal(physics, doc)
        if print_groups:
            scales = default_scales(network, model, nominal)
            ui.display_groups(scales, groups(scales))
            _emit_table(groups_table(network, scales), None, OutputFormat.CSV.value)

        initial = None
        if settings.init is InitMode.FILE:
            if initial_solution is None:
                raise ConfigurationError("init", "file", "--initial-solution is required")
            initial, _ = read_solution(initial_solution)

        solution, report = solve_network(
            network, model, settings, nominal, profiles=profiles, initial=initial,
        )
        ui.display_report(report)
        for diag in flow_diagnostics(network, solution):
            ui.display_info(diag.format())
        ui.display_info(f"global balance: {global_balance(network, solution):.3e} kg/s")

        if output is None:
            _emit_table(node_table(solution), None, fmt)
        else:
            meta = {"network": network.name, "eos": model.kind.value,
                    "gravity": settings.include_gravity, "inertia": settings.include_inertia}
            summary = {"meta": meta, **report.to_dict()}
            write_solution(solution, network, output, summary, OutputFormat(fmt))


@cli.command(name="validate")
@click.argument("network_file", type=click.Path(exists=True, dir_okay=False))
@click.argument("solution_path", type=click.Path(exists=True), required=False)
@click.option("--eos", type=click.Choice([k.value for k in EosKind]), default=None)
@click.option("--lenient", is_flag=True, help="Continue despite structural errors.")
@click.option("--output", "-o", type=click.Path(), default=None)
@click.option("--format", "fmt", type=click.Choice([f.value for f in OutputFormat]), default="csv")
@common_options
def validate_cmd(
    network_file: str, solution_path: str | None, eos: str | None, lenient: bool,
    output: str | None, fmt: str, config_dir: str | None, log_level: str | None,
) -> None:
    """Check a network, and a solution of it against the first integrals."""
    ui, _, physics = _setup(config_dir, log_level)
    with _exit_on_error(ui):
        doc, network = _load_network(ui, network_file, lenient)
        if solution_path is None:
            if not validate(network):
                ui.display_diagnostics([])
            return
        solution, _ = read_solution(solution_path)
        model = _eos_model(physics, eos, doc)
        report = validate_residuals(network, solution, model, _nominal(physics, doc))
        ui.display_text(report.format(), title="First-integral residuals")
        _emit_table(report.table.rename_axis("stage").reset_index(), output, fmt)


@cli.command(name="sweep-incline")
@pipe_case_options
@click.option("--angles", type=str, default=None,
              help="Comma-separated angles in degrees. Defaults to -4..4 in 0.5 steps.")
@click.option("--output", "-o", type=click.Path(), default=None)
@click.option("--format", "fmt", type=click.Choice([f.value for f in OutputFormat]), default="csv")
@common_options
def sweep_incline_cmd(
    length: float, diameter: float, friction: float, p_in: float, flow: float, angles: str | None,
    output: str | None, fmt: str, config_dir: str | None, log_level: str | None,
) -> None:
    """Outlet pressure of one pipe against inclination, both EoS, inertia on and off."""
    ui, settings, physics = _setup(config_dir, log_level)
    with _exit_on_error(ui):
        try:
            grid = [float(a) for a in angles.split(",")] if angles else list(DEFAULT_ANGLES)
        except ValueError:
            raise ConfigurationError("angles", angles, "expected comma-separated numbers") from None
        case = PipeCase(length, diameter, friction, p_in, flow)
        report = sweep_incline(case, grid, physics.eos, settings, physics.nominal)
        ui.display_text(report.format(), title="Incline sweep")
        _emit_table(report.table, output, fmt)


@cli.command(name="gravity-effect")
@click.argument("network_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--eos", type=click.Choice([k.value for k in EosKind]), default=None)
@click.option("--no-inertia", is_flag=True, help="Drop the inertia term.")
@click.option("--bins", type=click.IntRange(min=1), default=20, show_default=True)
@click.option("--lenient", is_flag=True, help="Continue despite structural errors.")
@click.option("--output", "-o", type=click.Path(), default=None,
              help="Directory for nodes and histogram tables. Both go to stdout when omitted.")
@click.option("--format", "fmt", type=click.Choice([f.value for f in OutputFormat]), default="csv")
@common_options
def gravity_effect_cmd(
    network_file: str, eos: str | None, no_inertia: bool, bins: int, lenient: bool,
    output: str | None, fmt: str, config_dir: str | None, log_level: str | None,
) -> None:
    """Relative nodal pressure change from including gravity."""
    ui, settings, physics = _setup(config_dir, log_level)
    with _exit_on_error(ui):
        doc, network = _load_network(ui, network_file, lenient)
        settings = _apply_flags(settings, no_inertia=no_inertia)
        model = _eos_model(physics, eos, doc)
        report = gravity_effect(network, model, settings, _nominal(physics, doc), bins)
        ui.display_text(report.format(), title="Gravity effect")
        ext = "json" if fmt == OutputFormat.JSON.value else "csv"
        if output is None:
            _emit_table(report.nodes, None, fmt)
            click.echo()
            _emit_table(report.histogram, None, fmt)
        else:
            _emit_table(report.nodes, str(Path(output) / f"nodes.{ext}"), fmt)
            _emit_table(report.histogram, str(Path(output) / f"histogram.{ext}"), fmt)


@cli.command(name="pipe-profile")
@pipe_case_options
@click.option("--angle", type=float, default=0.0, show_default=True, help="Inclination [deg].")
@physics_options
@click.option("--output", "-o", type=click.Path(), default=None)
@click.option("--format", "fmt", type=click.Choice([f.value for f in OutputFormat]), default="csv")
@common_options
def pipe_profile_cmd(
    length: float, diameter: float, friction: float, p_in: float, flow: float, angle: float,
    eos: str | None, no_gravity: bool, no_inertia: bool, output: str | None, fmt: str,
    config_dir: str | None, log_level: str | None,
) -> None:
    """(x, p, s_p, s_f) along a single pipe."""
    ui, settings, physics = _setup(config_dir, log_level)
    with _exit_on_error(ui):
        settings = _apply_flags(settings, no_gravity=no_gravity, no_inertia=no_inertia)
        case = PipeCase(length, diameter, friction, p_in, flow)
        table = pipe_profile(case, angle, _eos_model(physics, eos), settings, physics.nominal)
        _emit_table(table, output, fmt)


@cli.command()
@click.argument("network_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--eos", type=click.Choice([k.value for k in EosKind]), default=None)
@click.option("--print-groups", is_flag=True,
              help="Show nominal scales and emit the per-pipe dimensionless groups.")
@click.option("--output", "-o", type=click.Path(dir_okay=False), default=None,
              help="File for the groups table. Stdout when omitted.")
@click.option("--format", "fmt", type=click.Choice([f.value for f in OutputFormat]), default="csv")
@common_options
def info(network_file: str, eos: str | None, print_groups: bool, output: str | None, fmt: str,
         config_dir: str | None, log_level: str | None) -> None:
    """Network statistics and structural diagnostics."""
    ui, _, physics = _setup(config_dir, log_level)
    with _exit_on_error(ui):
        doc = load_network_document(network_file)
        network = doc.to_network()
        ui.display_stats(network.name, network.stats())
        ui.display_diagnostics(validate(network))
        if print_groups:
            scales = default_scales(network, _eos_model(physics, eos, doc), _nominal(physics, doc))
            ui.display_groups(scales, groups(scales))
            _emit_table(groups_table(network, scales), output, fmt)


@cli.command()
@click.argument("output", type=click.Path(dir_okay=False))
@click.option("--nodes", "n_nodes", type=click.IntRange(min=2), default=100, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--chords", type=click.FloatRange(0, 1), default=0.1, show_default=True,
              help="Loop-closing pipes as a fraction of the tree edges.")
@click.option("--compressors", type=click.IntRange(min=0), default=None,
              help="Number of compressors. Defaults to 4% of the nodes.")
@click.option("--horizontal", is_flag=True, help="No elevations; every pipe is horizontal.")
@click.option(
    "--log-level",
    type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
    default=None,
)
def generate(output: str, n_nodes: int, seed: int, chords: float, compressors: int | None,
             horizontal: bool, log_level: str | None) -> None:
    """Write a seeded synthetic network file."""
    configure_logging(log_level or os.environ.get("GASFLOW_LOG_LEVEL", "WARNING"))
    spec = SyntheticSpec(n_nodes=n_nodes, seed=seed, chord_fraction=chords,
                         n_compressors=compressors, horizontal=horizontal)
    network = generate_network(spec)
    write_network(network, output, MetaEntry(name=network.name))
    stats = network.stats()
    click.echo(
        f"Wrote {output}: {stats.nodes} nodes, {stats.pipes} pipes, {stats.compressors} compressors"
    )


@cli.command(name="check-config")
@click.option(
    "--config-dir",
    type=click.Path(exists=True, file_okay=False, resolve_path=True),
    default=None,
    help="Path to configuration directory.",
)
def check_config(config_dir: str | None) -> None:
    """Validate configuration files without solving anything."""
    config_path = config_dir or os.environ.get("GASFLOW_CONFIG", "./config")

    try:
        settings, physics = load_all_config(config_path)
        model = EosModel.from_config(physics.eos)
    except (FileNotFoundError, ValidationError, GasflowError) as e:
        click.echo(f"FAIL: {e}", err=True)
        sys.exit(EXIT_INPUT)

    click.echo("Configuration OK")
    click.echo(f"  EoS: {model.kind.value} (b1={model.b1:.6g}, b2={model.b2:.6g} 1/Pa)")
    click.echo(
        f"  Newton: tol={settings.tol_newton:g}, max_iter={settings.max_iter}, "
        f"init={settings.init.value}"
    )
    click.echo(f"  Terms: gravity={settings.include_gravity}, inertia={settings.include_inertia}")
    integ = settings.integrator
    click.echo(f"  Integrator: rtol={integ.rtol:g}, atol={integ.atol:g}")
    overrides = physics.nominal.model_dump(exclude_none=True)
    click.echo("  Nominal overrides: " + yaml.safe_dump(overrides, default_flow_style=True).strip())


if __name__ == "__main__":
    cli()
