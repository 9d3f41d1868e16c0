"""Rich-based summaries for the gasflow CLI.

Everything here prints to stderr; stdout is reserved for data tables.
"""

from __future__ import annotations

from rich.console import Console
from rich.panel import Panel
from rich.table import Table
from rich.text import Text

from gasflow.network.model import Diagnostic, NetworkStats, Severity
from gasflow.physics.nondim import DimensionlessGroups, NominalScales
from gasflow.solver import SolveReport


class TerminalUI:
    """Human-facing output of the CLI commands."""

    def __init__(self, console: Console | None = None) -> None:
        self._console = console or Console(stderr=True)

    def display_stats(self, name: str, stats: NetworkStats) -> None:
        table = Table(show_header=False, box=None, padding=(0, 2))
        table.add_column(style="dim")
        table.add_column(justify="right")
        table.add_row("Nodes", f"{stats.nodes}")
        table.add_row("  slack", f"{stats.slack_nodes}")
        table.add_row("  with injection", f"{stats.injection_nodes}")
        table.add_row("Pipes", f"{stats.pipes}")
        table.add_row("Compressors", f"{stats.compressors}")
        table.add_row("Total pipe length", f"{stats.total_length / 1000:,.1f} km")
        table.add_row("Unknowns / equations", f"{stats.unknowns} / {stats.equations}")
        self._console.print(Panel(table, title=f"[bold cyan]{name}[/]", border_style="cyan"))

    def display_groups(self, scales: NominalScales, groups: DimensionlessGroups) -> None:
        """Nominal scales and the network-wide dimensionless groups."""
        table = Table(title="Nondimensionalization", border_style="cyan")
        table.add_column("Quantity")
        table.add_column("Value", justify="right")
        for label, value in (
            ("L0 [m]", scales.L0), ("p0 [Pa]", scales.p0), ("rho0 [kg/m^3]", scales.rho0),
            ("v0 [m/s]", scales.v0), ("c0 [m/s]", scales.c0), ("f0 [kg/s]", scales.f0),
            ("Mach", groups.mach), ("Euler", groups.euler), ("Froude", groups.froude),
            ("R1 (unit area)", groups.R1), ("R2", groups.R2),
        ):
            table.add_row(label, f"{value:.6g}")
        self._console.print(table)

    def display_diagnostics(self, diagnostics: list[Diagnostic]) -> None:
        if not diagnostics:
            self._console.print(Text("✓ network is well-posed", style="green"))
            return
        for diag in diagnostics:
            style = "red" if diag.severity is Severity.ERROR else "yellow"
            self._console.print(Text(diag.format(), style=style))

    def display_report(self, report: SolveReport) -> None:
        """Convergence summary of a solve, collocation stage first."""
        table = Table(border_style="green" if report.converged else "red")
        table.add_column("Stage")
        table.add_column("Converged")
        table.add_column("Iterations", justify="right")
        table.add_column("max |r|", justify="right")
        table.add_column("max |p(L) - p_j|", justify="right")
        for stage in (report.collocation, report):
            if stage is None:
                continue
            table.add_row(
                stage.stage,
                "yes" if stage.converged else "no",
                str(stage.iterations),
                f"{stage.residual_norm:.3e}",
                "" if stage.pressure_residual is None else f"{stage.pressure_residual:.3e}",
            )
        self._console.print(table)
        if not report.converged:
            worst = Table(title="Largest residual rows", border_style="red")
            worst.add_column("Row")
            worst.add_column("Residual", justify="right")
            for label, value in report.worst_rows():
                worst.add_row(label, f"{value:.3e}")
            self._console.print(worst)

    def display_text(self, text: str, title: str | None = None) -> None:
        self._console.print(Panel(Text(text), title=title, border_style="cyan", padding=(0, 1)))

    def display_error(self, message: str) -> None:
        text = Text("Error: ", style="bold red")
        text.append(message)
        self._console.print(text)

    def display_info(self, message: str) -> None:
        self._console.print(Text(message, style="dim"))
