"""Newton-Raphson solution of the steady network equations.

Unknowns are the transformed nodal pressures pi = p**3 followed by the
edge flows (see :class:`UnknownVector`). Equation rows come in a fixed
order:

    compressor rows   alpha^3 pi_i - pi_j
    pipe rows         integrated pipe residual (ode) or two-point collocation
    balance rows      sum(f_out) - sum(f_in) - q*   at every non-slack node
    slack rows        pi_j - (p*)^3

The solve runs in two stages: the collocation system first, then the
integrated system started from its solution. Everything here works on the
nondimensional network; :func:`solve_network` handles the conversion.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np
import structlog
from scipy.sparse import coo_matrix, csc_matrix
from scipy.sparse.linalg import spsolve

from gasflow.config import InitMode, NominalConfig, SolverSettings
from gasflow.errors import (
    ChokedFlow,
    ConfigurationError,
    NonConvergence,
    NonPhysicalPressure,
    PipeIntegrationError,
)
from gasflow.network.model import (
    CompressorEdge,
    Network,
    NetworkSolution,
    PipeProfile,
    Units,
    net_outflow,
    tree_flows,
)
from gasflow.physics.eos import EosModel
from gasflow.physics.nondim import (
    NominalScales,
    ScaledEos,
    default_scales,
    nondimensionalize,
    redimensionalize,
)
from gasflow.physics.pipe import (
    PipeBatch,
    PipeGeometry,
    PipeModel,
    h_terms,
    integrate_batch_endpoints,
    integrate_pressure,
    residual_from_endpoints,
)

logger = structlog.get_logger()


class Mode(str, Enum):
    """Which pipe model the pipe rows use."""

    COLLOCATION = "collocation"
    ODE = "ode"


@dataclass
class UnknownVector:
    """Newton unknowns of one network: pi at nodes, then flows on edges."""

    network: Network
    values: np.ndarray

    @property
    def pi(self) -> np.ndarray:
        return self.values[: len(self.network.nodes)]

    @property
    def flows(self) -> np.ndarray:
        return self.values[len(self.network.nodes):]

    def pressure(self, node_id: str) -> float:
        return float(np.cbrt(self.values[self.network.node_slot[node_id]]))

    def flow(self, edge_id: str) -> float:
        return float(self.values[self.network.edge_slot[edge_id]])

    @classmethod
    def from_state(
        cls, network: Network, pressures: dict[str, float], flows: dict[str, float],
    ) -> UnknownVector:
        values = np.empty(network.size)
        for nid, slot in network.node_slot.items():
            values[slot] = pressures[nid] ** 3
        for eid, slot in network.edge_slot.items():
            values[slot] = flows[eid]
        return cls(network, values)

    def to_state(self) -> tuple[dict[str, float], dict[str, float]]:
        """(pressures, flows) keyed by id."""
        pressures = {nid: self.pressure(nid) for nid in self.network.node_ids}
        flows = {eid: self.flow(eid) for eid in self.network.edge_ids}
        return pressures, flows


@dataclass
class SolveReport:
    """Outcome of one Newton stage."""

    stage: str
    converged: bool
    iterations: int
    residual_norm: float
    residuals: dict[str, float] = field(default_factory=dict)
    history: list[float] = field(default_factory=list)
    damping: list[float] = field(default_factory=list)
    pressure_residual: float | None = None
    elapsed: float = 0.0
    collocation: SolveReport | None = None

    def worst_rows(self, count: int = 5) -> list[tuple[str, float]]:
        return sorted(self.residuals.items(), key=lambda kv: -abs(kv[1]))[:count]

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {
            "stage": self.stage,
            "converged": self.converged,
            "iterations": self.iterations,
            "residual_norm": self.residual_norm,
            "pressure_residual": self.pressure_residual,
            "history": list(self.history),
            "damping": list(self.damping),
            "residuals": dict(self.residuals),
        }
        if self.collocation is not None:
            data["collocation"] = self.collocation.to_dict()
        return data

    def format(self) -> str:
        state = "converged" if self.converged else "NOT converged"
        lines = [
            f"{self.stage}: {state} in {self.iterations} iterations, "
            f"max |r| = {self.residual_norm:.3e}"
        ]
        if self.pressure_residual is not None:
            lines.append(f"  max |p(L) - p_j| = {self.pressure_residual:.3e}")
        if self.collocation is not None:
            lines.insert(0, self.collocation.format())
        return "\n".join(lines)


class NetworkSystem:
    """Index tables and physics of one nondimensional network.

    Built once per solve; :meth:`evaluate` is the only hot path.
    """

    def __init__(self, network: Network, model: PipeModel, settings: SolverSettings,
                 scales: NominalScales) -> None:
        if network.units is not Units.NONDIMENSIONAL:
            raise ConfigurationError(
                "units", network.units.value, "the solver needs a nondimensional network",
            )
        self.network = network
        self.model = model
        self.settings = settings
        self.n_nodes = len(network.nodes)
        self.size = network.size
        slot = network.node_slot

        edges = [network.edge_map[eid] for eid in network.edge_ids]
        comps = [e for e in edges if isinstance(e, CompressorEdge)]
        pipes = [e for e in edges if not isinstance(e, CompressorEdge)]
        self.comp_ids = [c.id for c in comps]
        self.comp_from = np.array([slot[c.from_node] for c in comps], dtype=int)
        self.comp_to = np.array([slot[c.to_node] for c in comps], dtype=int)
        self.comp_boost = np.array([c.ratio**3 for c in comps], dtype=float)

        self.geometries = {p.id: PipeGeometry.from_edge(p, scales) for p in pipes}
        self.pipe_ids = [p.id for p in pipes]
        self.pipe_from = np.array([slot[p.from_node] for p in pipes], dtype=int)
        self.pipe_to = np.array([slot[p.to_node] for p in pipes], dtype=int)
        self.pipe_edge = np.array([network.edge_slot[p.id] for p in pipes], dtype=int)
        self.batch = PipeBatch.from_geometries(
            [self.geometries[i] for i in self.pipe_ids], self.pipe_ids,
        )

        nonslack = [nid for nid in network.node_ids if not network.node_map[nid].is_slack]
        slack = [nid for nid in network.node_ids if network.node_map[nid].is_slack]
        self.balance_ids = nonslack
        self.balance_q = np.array([network.node_map[nid].injection for nid in nonslack])
        rows, cols, signs = [], [], []
        for k, nid in enumerate(nonslack):
            incoming, outgoing = network.incidence(nid)
            for edge in outgoing:
                rows.append(k)
                cols.append(network.edge_slot[edge.id])
                signs.append(1.0)
            for edge in incoming:
                rows.append(k)
                cols.append(network.edge_slot[edge.id])
                signs.append(-1.0)
        self.bal_row = np.array(rows, dtype=int)
        self.bal_col = np.array(cols, dtype=int)
        self.bal_sign = np.array(signs, dtype=float)

        self.slack_ids = slack
        self.slack_slot = np.array([slot[nid] for nid in slack], dtype=int)
        self.slack_pi = np.array([network.node_map[nid].pressure ** 3 for nid in slack])

        n_c, n_p, n_b = len(comps), len(pipes), len(nonslack)
        self.comp_rows = np.arange(n_c)
        self.pipe_rows = n_c + np.arange(n_p)
        self.bal_rows = n_c + n_p + np.arange(n_b)
        self.slack_rows = n_c + n_p + n_b + np.arange(len(slack))
        self.row_labels = (
            [f"compressor:{i}" for i in self.comp_ids]
            + [f"pipe:{i}" for i in self.pipe_ids]
            + [f"balance:{i}" for i in nonslack]
            + [f"slack:{i}" for i in slack]
        )

    def _pipe_rows(self, u: np.ndarray, pi: np.ndarray, mode: Mode, jacobian: bool):
        f = u[self.pipe_edge]
        pi_i, pi_j = pi[self.pipe_from], pi[self.pipe_to]
        if mode is Mode.COLLOCATION:
            H_i, Hpi_i, Hf_i, ch_i = h_terms(pi_i, f, self.batch, self.model)
            H_j, Hpi_j, Hf_j, ch_j = h_terms(pi_j, f, self.batch, self.model)
            choked = ch_i | ch_j
            if np.any(choked):
                k = int(np.flatnonzero(choked)[0])
                raise ChokedFlow("Collocation point is choked", pipe_id=self.pipe_ids[k])
            L = self.batch.length
            F = (pi_i - pi_j) / L + 0.5 * (H_i + H_j)
            if not jacobian:
                return F, None
            return F, (1.0 / L + 0.5 * Hpi_i, -1.0 / L + 0.5 * Hpi_j, 0.5 * (Hf_i + Hf_j))

        p_i, p_j = np.cbrt(pi_i), np.cbrt(pi_j)
        ends = integrate_batch_endpoints(
            p_i, f, self.batch, self.model, self.settings.integrator, sensitivities=jacobian,
        )
        F, dpi, dpj, df = residual_from_endpoints(p_i, p_j, ends, self.settings.residual_form)
        if not jacobian:
            return F, None
        # dp/dpi = 1 / (3 p^2)
        return F, (dpi / (3.0 * p_i * p_i), dpj / (3.0 * p_j * p_j), df)

    def evaluate(
        self, u: np.ndarray, mode: Mode, jacobian: bool = True,
    ) -> tuple[np.ndarray, csc_matrix | None]:
        """Residual vector and, optionally, the sparse Jacobian at u.

        Raises:
            NonPhysicalPressure: If a pi slot is not positive.
            PipeIntegrationError: For the first failing pipe, tagged with its id.
        """
        pi = u[: self.n_nodes]
        if not np.all(pi > 0):
            k = int(np.flatnonzero(~(pi > 0))[0])
            raise NonPhysicalPressure(f"pi at node {self.network.node_ids[k]!r} is not positive")

        r = np.empty(self.size)
        r[self.comp_rows] = self.comp_boost * pi[self.comp_from] - pi[self.comp_to]
        F, dF = self._pipe_rows(u, pi, mode, jacobian)
        r[self.pipe_rows] = F
        r[self.bal_rows] = (
            np.bincount(
                self.bal_row, weights=self.bal_sign * u[self.bal_col],
                minlength=len(self.balance_ids),
            )
            - self.balance_q
        )
        r[self.slack_rows] = pi[self.slack_slot] - self.slack_pi
        if not jacobian:
            return r, None

        dF_dpi, dF_dpj, dF_df = dF
        rows = np.concatenate([
            self.comp_rows, self.comp_rows,
            self.pipe_rows, self.pipe_rows, self.pipe_rows,
            self.bal_rows[self.bal_row],
            self.slack_rows,
        ])
        cols = np.concatenate([
            self.comp_from, self.comp_to,
            self.pipe_from, self.pipe_to, self.pipe_edge,
            self.bal_col,
            self.slack_slot,
        ])
        vals = np.concatenate([
            self.comp_boost, -np.ones(len(self.comp_ids)),
            dF_dpi, dF_dpj, dF_df,
            self.bal_sign,
            np.ones(len(self.slack_ids)),
        ])
        J = coo_matrix((vals, (rows, cols)), shape=(self.size, self.size)).tocsc()
        return r, J

    def pressure_residual(self, u: np.ndarray) -> float:
        """max |p(L) - p_j| over pipes, in nondimensional pressure."""
        if not self.pipe_ids:
            return 0.0
        pi = u[: self.n_nodes]
        p_i, p_j = np.cbrt(pi[self.pipe_from]), np.cbrt(pi[self.pipe_to])
        ends = integrate_batch_endpoints(
            p_i, u[self.pipe_edge], self.batch, self.model, self.settings.integrator,
            sensitivities=False,
        )
        return float(np.max(np.abs(ends.p_out - p_j)))

    def initial_guess(self) -> np.ndarray:
        """Flat pi from the first slack pressure and spanning-tree flows.

        Loops get a small circulation on top of the tree flows. With zero
        flow on every edge of a loop the flow derivatives of its pipe rows
        vanish and the Jacobian is singular.
        """
        u = np.empty(self.size)
        first = self.network.slack_nodes[0].pressure if self.network.slack_nodes else 1.0
        u[: self.n_nodes] = first**3
        u[self.slack_slot] = self.slack_pi
        base = tree_flows(self.network)
        largest = max((abs(v) for v in base.values()), default=0.0) or 1.0
        circulation = self.settings.loop_circulation * largest
        for eid, flow in tree_flows(self.network, circulation).items():
            u[self.network.edge_slot[eid]] = flow
        return u


def assemble_residual(u: np.ndarray, system: NetworkSystem, mode: Mode = Mode.ODE) -> np.ndarray:
    """Residual of every equation row at u."""
    return system.evaluate(np.asarray(u, dtype=float), mode, jacobian=False)[0]


def assemble_jacobian(u: np.ndarray, system: NetworkSystem, mode: Mode = Mode.ODE) -> csc_matrix:
    """Sparse Jacobian of :func:`assemble_residual` with respect to (pi, f)."""
    return system.evaluate(np.asarray(u, dtype=float), mode, jacobian=True)[1]


def _max_norm(r: np.ndarray) -> float:
    return float(np.max(np.abs(r))) if r.size else 0.0


def newton(system: NetworkSystem, u0: np.ndarray, mode: Mode) -> tuple[np.ndarray, SolveReport]:
    """Damped Newton iteration on one stage.

    The step is halved until every pi slot stays above a fraction of its
    current value and the max-norm satisfies the Armijo condition. Trial
    points where a pipe cannot be integrated count as failed trials.

    Raises:
        NonConvergence: After max_iter iterations or a stalled line search.
    """
    cfg = system.settings
    start = time.monotonic()
    u = np.array(u0, dtype=float)
    r, J = system.evaluate(u, mode, jacobian=True)
    norm = _max_norm(r)
    report = SolveReport(
        stage=mode.value, converged=False, iterations=0, residual_norm=norm, history=[norm],
    )

    def finish(converged: bool) -> SolveReport:
        report.converged = converged
        report.residual_norm = norm
        report.residuals = dict(zip(system.row_labels, r.tolist()))
        report.elapsed = time.monotonic() - start
        return report

    for iteration in range(1, cfg.max_iter + 1):
        if norm <= cfg.tol_newton:
            break
        du = spsolve(J, -r)
        if not np.all(np.isfinite(du)):
            logger.warning("singular_jacobian", stage=mode.value, iteration=iteration)
            raise NonConvergence(mode.value, finish(False), best=u)

        pi, dpi = u[: system.n_nodes], du[: system.n_nodes]
        t = 1.0
        while np.any(pi + t * dpi <= cfg.positivity_fraction * pi) and t >= cfg.min_step:
            t *= cfg.armijo_factor

        accepted = False
        while t >= cfg.min_step:
            trial = u + t * du
            try:
                r_trial, _ = system.evaluate(trial, mode, jacobian=False)
            except PipeIntegrationError as exc:
                logger.debug("trial_step_failed", stage=mode.value, step=t, error=str(exc))
                t *= cfg.armijo_factor
                continue
            trial_norm = _max_norm(r_trial)
            if np.isfinite(trial_norm) and trial_norm <= (1.0 - cfg.armijo_c * t) * norm:
                accepted = True
                break
            t *= cfg.armijo_factor

        if not accepted:
            logger.warning(
                "line_search_stalled", stage=mode.value, iteration=iteration, residual=norm,
            )
            report.iterations = iteration
            raise NonConvergence(mode.value, finish(False), best=u)

        u = trial
        r, J = system.evaluate(u, mode, jacobian=True)
        norm = _max_norm(r)
        report.iterations = iteration
        report.history.append(norm)
        report.damping.append(t)
        logger.debug(
            "newton_iteration", stage=mode.value, iteration=iteration, residual=norm, step=t,
        )

    if norm > cfg.tol_newton:
        raise NonConvergence(mode.value, finish(False), best=u)
    logger.info("stage_converged", stage=mode.value, iterations=report.iterations, residual=norm)
    return u, finish(True)


def solve_collocation(
    system: NetworkSystem, u0: np.ndarray | None = None,
) -> tuple[np.ndarray, SolveReport]:
    """Solve the coarse system whose pipe rows use two-point collocation."""
    start = system.initial_guess() if u0 is None else np.asarray(u0, dtype=float)
    return newton(system, start, Mode.COLLOCATION)


def _solution_from(system: NetworkSystem, u: np.ndarray, profiles: bool) -> NetworkSolution:
    network = system.network
    pressures, flows = UnknownVector(network, u).to_state()
    injections = {n.id: n.injection for n in network.nodes}
    for node in network.slack_nodes:
        injections[node.id] = net_outflow(network, flows, node.id)

    traces: dict[str, PipeProfile] = {}
    if profiles:
        for pid in system.pipe_ids:
            edge = network.edge_map[pid]
            sol = integrate_pressure(
                pressures[edge.from_node], flows[pid], system.geometries[pid], system.model,
                system.settings.integrator, pipe_id=pid,
            )
            traces[pid] = PipeProfile(x=sol.x, p=sol.p)
    return NetworkSolution(pressures, flows, injections, Units.NONDIMENSIONAL, traces)


def build_system(
    network: Network, eos: EosModel, settings: SolverSettings, nominal: NominalConfig | None = None,
) -> tuple[NetworkSystem, NominalScales]:
    """Nondimensionalize a dimensional network and bind it to the solver options."""
    scales = default_scales(network, eos, nominal)
    model = PipeModel(
        eos=ScaledEos.from_model(eos, scales),
        include_inertia=settings.include_inertia,
        include_gravity=settings.include_gravity,
        choke_eps=settings.integrator.choke_eps,
    )
    return NetworkSystem(nondimensionalize(network, scales), model, settings, scales), scales


def solve_network(
    network: Network,
    eos: EosModel,
    settings: SolverSettings | None = None,
    nominal: NominalConfig | None = None,
    profiles: bool = False,
    initial: NetworkSolution | None = None,
) -> tuple[NetworkSolution, SolveReport]:
    """Solve a dimensional network and return the SI solution.

    Args:
        network: Network in SI units.
        eos: Equation of state.
        settings: Newton, damping and integrator options.
        nominal: Optional overrides of the nominal scales.
        profiles: Also return the pressure profile of every pipe.
        initial: SI solution to start from when ``settings.init`` is ``file``.

    Raises:
        NonConvergence: If a stage does not reach ``tol_newton``.
        ChokedFlow, NonPhysicalPressure: If the converged state cannot be integrated.
    """
    settings = settings or SolverSettings()
    system, scales = build_system(network, eos, settings, nominal)
    nd = system.network
    log = logger.bind(network=network.name, unknowns=system.size)
    log.info("solve_started", init=settings.init.value, eos=eos.kind.value)

    collocation_u: np.ndarray | None = None
    collocation_report: SolveReport | None = None
    if settings.init is InitMode.COLLOCATION:
        collocation_u, collocation_report = solve_collocation(system)
        u0 = collocation_u
    elif settings.init is InitMode.FILE:
        if initial is None:
            raise ConfigurationError("init", settings.init.value, "an initial solution is required")
        if initial.units is not Units.SI:
            raise ConfigurationError("initial", initial.units.value, "expected an SI solution")
        pressures = {k: v / scales.p0 for k, v in initial.pressures.items()}
        flows = {k: v / scales.f0 for k, v in initial.flows.items()}
        try:
            u0 = UnknownVector.from_state(nd, pressures, flows).values
        except KeyError as exc:
            raise ConfigurationError(
                "initial", str(exc), "solution does not match the network",
            ) from None
    else:
        u0 = system.initial_guess()

    u, report = newton(system, u0, Mode.ODE)
    report.collocation = collocation_report
    report.pressure_residual = system.pressure_residual(u)

    solution = _solution_from(system, u, profiles)
    if collocation_u is not None:
        solution.collocation = _solution_from(system, collocation_u, False)
    log.info("solve_finished", iterations=report.iterations, residual=report.residual_norm)
    return redimensionalize(solution, scales), report
