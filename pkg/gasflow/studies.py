"""Studies built on the solver: incline sweep, gravity effect, first-integral check.

Each study returns a report dataclass with its tables as pandas frames
and a ``format()`` summary for the terminal.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
import structlog

from gasflow.config import EosConfig, EosKind, NominalConfig, SolverSettings
from gasflow.errors import ConfigurationError, GasflowError
from gasflow.network.model import Network, NetworkSolution, Node, NodeKind, PipeEdge, Units
from gasflow.physics.eos import EosModel
from gasflow.physics.integrals import IdealCaseParams, friction_residual, inertia_residual
from gasflow.physics.nondim import (
    NominalScales,
    ScaledEos,
    default_scales,
    groups,
    nondimensionalize,
)
from gasflow.physics.pipe import (
    PipeGeometry,
    PipeModel,
    integrate_pressure,
    integrate_with_sensitivities,
)
from gasflow.solver import solve_network

logger = structlog.get_logger()

DEFAULT_ANGLES = tuple(np.round(np.arange(-4.0, 4.0 + 1e-9, 0.5), 10).tolist())


@dataclass(frozen=True)
class PipeCase:
    """A single pipe fed at a known pressure and flow, in SI units."""

    length: float
    diameter: float
    friction: float
    p_in: float
    flow: float

    @classmethod
    def yamal(cls) -> PipeCase:
        return cls(length=122_000.0, diameter=1.422, friction=0.03, p_in=8.8e6, flow=400.0)

    def network(self, angle_deg: float = 0.0) -> Network:
        """Two-node network: slack inlet, outlet withdrawing ``flow``."""
        nodes = (
            Node("inlet", NodeKind.SLACK, pressure=self.p_in),
            Node("outlet", NodeKind.NON_SLACK, injection=-self.flow),
        )
        pipe = PipeEdge(
            "pipe", "inlet", "outlet", self.length, self.diameter, self.friction,
            math.sin(math.radians(angle_deg)),
        )
        return Network("single-pipe", nodes, (pipe,))


def _pipe_setup(case: PipeCase, angle_deg: float, eos: EosModel, inertia: bool, gravity: bool,
                nominal: NominalConfig | None, choke_eps: float):
    network = case.network(angle_deg)
    scales = default_scales(network, eos, nominal)
    nd = nondimensionalize(network, scales)
    geom = PipeGeometry.from_edge(nd.pipes[0], scales)
    model = PipeModel(ScaledEos.from_model(eos, scales), inertia, gravity, choke_eps)
    return scales, geom, model


def pipe_profile(
    case: PipeCase, angle_deg: float, eos: EosModel, settings: SolverSettings,
    nominal: NominalConfig | None = None,
) -> pd.DataFrame:
    """(x, p, s_p, s_f) along one pipe in SI units; s_f is in Pa per kg/s."""
    scales, geom, model = _pipe_setup(
        case, angle_deg, eos, settings.include_inertia, settings.include_gravity, nominal,
        settings.integrator.choke_eps,
    )
    sol = integrate_with_sensitivities(
        case.p_in / scales.p0, case.flow / scales.f0, geom, model, settings.integrator,
        pipe_id="pipe",
    )
    return pd.DataFrame({
        "x_m": sol.x * scales.L0,
        "p_Pa": sol.p * scales.p0,
        "s_p": sol.s_p,
        "s_f_Pa_per_kg_s": sol.s_f * scales.p0 / scales.f0,
    })


def outlet_pressure(
    case: PipeCase, angle_deg: float, eos: EosModel, inertia: bool, settings: SolverSettings,
    nominal: NominalConfig | None = None, gravity: bool = True,
) -> float:
    """Outlet pressure (Pa) of one pipe by direct integration from the inlet."""
    scales, geom, model = _pipe_setup(
        case, angle_deg, eos, inertia, gravity, nominal, settings.integrator.choke_eps,
    )
    sol = integrate_pressure(
        case.p_in / scales.p0, case.flow / scales.f0, geom, model, settings.integrator,
        pipe_id="pipe",
    )
    return sol.outlet * scales.p0


@dataclass
class SweepReport:
    """Outlet pressure against incline, per EoS and inertia switch."""

    case: PipeCase
    table: pd.DataFrame

    def max_inertia_effect(self) -> float:
        """Largest relative outlet change from toggling inertia, over all angles and EoS."""
        ok = self.table.dropna(subset=["p_out_Pa"])
        if ok.empty:
            return float("nan")
        wide = ok.pivot_table(index=["angle_deg", "eos"], columns="inertia", values="p_out_Pa")
        if True not in wide or False not in wide:
            return float("nan")
        return float(((wide[True] - wide[False]).abs() / wide[False]).max())

    def format(self) -> str:
        failed = int(self.table["error"].astype(bool).sum())
        lines = [
            f"Incline sweep: {self.table['angle_deg'].nunique()} angles, "
            f"{len(self.table)} rows, {failed} failed",
            f"  max inertia effect: {self.max_inertia_effect():.3e} (relative)",
        ]
        return "\n".join(lines)


def sweep_incline(
    case: PipeCase,
    angles: Sequence[float] = DEFAULT_ANGLES,
    eos_config: EosConfig | None = None,
    settings: SolverSettings | None = None,
    nominal: NominalConfig | None = None,
    eos_kinds: Sequence[EosKind] = (EosKind.IDEAL, EosKind.CNGA),
) -> SweepReport:
    """Outlet pressure of one pipe over a grid of inclines.

    One row per (angle, EoS, inertia). ``rel_change`` is relative to the
    horizontal run of the same EoS and inertia setting, and ``eos_rel_diff``
    compares CNGA against the ideal gas at the same angle and inertia.
    Rows whose integration fails keep the error text and NaN values.
    """
    settings = settings or SolverSettings()
    eos_config = eos_config or EosConfig()
    models = {
        kind: EosModel.from_config(eos_config.model_copy(update={"kind": kind}))
        for kind in eos_kinds
    }
    grid = sorted(set(float(a) for a in angles) | {0.0})

    rows = []
    for angle in grid:
        for kind, model in models.items():
            for inertia in (True, False):
                try:
                    p_out = outlet_pressure(case, angle, model, inertia, settings, nominal)
                    error = ""
                except GasflowError as exc:
                    p_out, error = float("nan"), str(exc)
                    logger.warning(
                        "sweep_row_failed", angle=angle, eos=kind.value, inertia=inertia,
                        error=error,
                    )
                rows.append({"angle_deg": angle, "eos": kind.value, "inertia": inertia,
                             "p_out_Pa": p_out, "error": error})

    table = pd.DataFrame(rows)
    base = table[table["angle_deg"] == 0.0].set_index(["eos", "inertia"])["p_out_Pa"]
    keys = list(zip(table["eos"], table["inertia"]))
    reference = base.loc[keys].to_numpy()
    table["rel_change"] = (table["p_out_Pa"].to_numpy() - reference) / reference
    table.loc[(table["angle_deg"] == 0.0) & table["p_out_Pa"].notna(), "rel_change"] = 0.0

    if EosKind.IDEAL in models and EosKind.CNGA in models:
        by_angle = table.set_index(["angle_deg", "inertia"])
        ideal = by_angle[by_angle["eos"] == EosKind.IDEAL.value]["p_out_Pa"]
        cnga = by_angle[by_angle["eos"] == EosKind.CNGA.value]["p_out_Pa"]
        diff = ((cnga - ideal) / ideal).rename("eos_rel_diff")
        table = table.join(diff, on=["angle_deg", "inertia"])
    else:
        table["eos_rel_diff"] = np.nan

    keep = set(float(a) for a in angles)
    table = table[table["angle_deg"].isin(keep)].reset_index(drop=True)
    columns = ["angle_deg", "eos", "inertia", "p_out_Pa", "rel_change", "eos_rel_diff", "error"]
    table = table[columns]
    logger.info("sweep_finished", rows=len(table))
    return SweepReport(case, table)


@dataclass
class GravityEffectReport:
    """Per-node pressure change from including gravity, with its distribution."""

    nodes: pd.DataFrame
    histogram: pd.DataFrame
    reports: dict[str, object] = field(default_factory=dict)
    solutions: dict[str, NetworkSolution] = field(default_factory=dict)

    def format(self) -> str:
        rel = self.nodes["rel_diff"]
        return (
            f"Gravity effect over {len(rel)} nodes: "
            f"mean |rel diff| {rel.abs().mean():.3e}, max {rel.abs().max():.3e}"
        )


GROUP_COLUMNS = ["id", "mach", "euler", "froude", "R1", "R2", "beta"]


def groups_table(network: Network, scales: NominalScales) -> pd.DataFrame:
    """Mach, Euler and Froude numbers with (R1, R2, beta) of every pipe."""
    g = groups(scales)
    nd = network if network.units is Units.NONDIMENSIONAL else nondimensionalize(network, scales)
    rows = []
    for pipe in sorted(nd.pipes, key=lambda p: p.id):
        geom = PipeGeometry.from_edge(pipe, scales)
        rows.append([pipe.id, g.mach, g.euler, g.froude, geom.R1, geom.R2, geom.beta])
    return pd.DataFrame(rows, columns=GROUP_COLUMNS)


def distribution_table(values: np.ndarray, bins: int) -> pd.DataFrame:
    """Density-normalized histogram and empirical CDF at the bin edges."""
    density, edges = np.histogram(values, bins=bins, density=True)
    ordered = np.sort(values)
    cdf = np.searchsorted(ordered, edges[1:], side="right") / max(len(ordered), 1)
    cdf[-1] = 1.0 if len(ordered) else 0.0
    return pd.DataFrame({
        "bin_left": edges[:-1],
        "bin_right": edges[1:],
        "density": density,
        "cdf": cdf,
    })


def gravity_effect(
    network: Network,
    eos: EosModel,
    settings: SolverSettings | None = None,
    nominal: NominalConfig | None = None,
    bins: int = 20,
) -> GravityEffectReport:
    """Solve with and without gravity and compare nodal pressures.

    Raises:
        NonConvergence: If either solve fails.
    """
    settings = settings or SolverSettings()
    on = settings.model_copy(update={"include_gravity": True})
    off = settings.model_copy(update={"include_gravity": False})
    with_g, rep_g = solve_network(network, eos, on, nominal)
    without, rep_n = solve_network(network, eos, off, nominal)

    ids = sorted(with_g.pressures)
    p_g = np.array([with_g.pressures[i] for i in ids])
    p_n = np.array([without.pressures[i] for i in ids])
    rel = (p_g - p_n) / p_n
    nodes = pd.DataFrame({"id": ids, "p_gravity_Pa": p_g, "p_no_gravity_Pa": p_n, "rel_diff": rel})
    logger.info("gravity_effect_finished", nodes=len(ids), max_rel=float(np.max(np.abs(rel))))
    reports = {"gravity": rep_g, "no_gravity": rep_n}
    solutions = {"gravity": with_g, "no_gravity": without}
    return GravityEffectReport(nodes, distribution_table(rel, bins), reports, solutions)


@dataclass
class ResidualReport:
    """Largest first-integral residuals over all pipes, per stage."""

    table: pd.DataFrame

    def value(self, stage: str, form: str) -> float:
        return float(self.table.loc[stage, form])

    def format(self) -> str:
        lines = [
            "Max first-integral residual among all pipes",
            f"{'':<14}{'friction':>14}{'inertia':>14}",
        ]
        for stage, row in self.table.iterrows():
            lines.append(f"{stage:<14}{row['friction']:>14.3e}{row['inertia']:>14.3e}")
        return "\n".join(lines)


def validate_residuals(
    network: Network,
    solution: NetworkSolution,
    eos: EosModel,
    nominal: NominalConfig | None = None,
) -> ResidualReport:
    """Substitute a solved state into the ideal-gas first integrals.

    Reports, for the ODE stage and (when present) the collocation stage,
    the largest |residual| over all pipes of the friction-only and the
    inertia form, in nondimensional units.

    Raises:
        ConfigurationError: For a non-ideal gas or any inclined pipe.
    """
    if eos.kind is not EosKind.IDEAL:
        raise ConfigurationError(
            "eos", eos.kind.value, "first integrals are checked for the ideal gas only",
        )
    inclined = [p.id for p in network.pipes if p.sin_theta != 0.0]
    if inclined:
        raise ConfigurationError(
            "pipes", inclined[:5], "first integrals are checked for horizontal networks only",
        )
    if solution.units is not Units.SI:
        raise ConfigurationError("solution", solution.units.value, "expected an SI solution")

    scales = default_scales(network, eos, nominal)
    nd = nondimensionalize(network, scales)
    scaled = ScaledEos.from_model(eos, scales)
    params = {}
    for pipe in nd.pipes:
        geom = PipeGeometry.from_edge(pipe, scales)
        params[pipe.id] = (pipe, IdealCaseParams.from_pipe(
            geom.length, geom.R1, geom.R2, geom.beta, 0.0, scaled, include_gravity=False,
        ))

    stages = {"ode": solution}
    if solution.collocation is not None:
        stages["collocation"] = solution.collocation
    rows = {}
    for stage, state in stages.items():
        worst = {"friction": 0.0, "inertia": 0.0}
        for pipe, prm in params.values():
            p0 = state.pressures[pipe.from_node] / scales.p0
            pL = state.pressures[pipe.to_node] / scales.p0
            f = state.flows[pipe.id] / scales.f0
            worst["friction"] = max(worst["friction"], abs(friction_residual(prm, p0, pL, f)))
            worst["inertia"] = max(worst["inertia"], abs(inertia_residual(prm, p0, pL, f)))
        rows[stage] = worst
    order = [s for s in ("collocation", "ode") if s in rows]
    return ResidualReport(pd.DataFrame.from_dict(rows, orient="index").loc[order])
