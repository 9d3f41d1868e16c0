"""Single-pipe physics in nondimensional form.

The steady momentum balance along a pipe reduces to

    p' = G(p, f) = rho (R2 rho^2 sin(theta) - R1 beta f|f|) / (rho^2 - R1 f^2 rho'(p))

which is integrated in the transformed variable pi = p**3,

    pi' = H(pi, f) = 3 p^2 G(p, f).

Forward sensitivities s_p = dp/dp_in and s_f = dp/df are integrated
alongside pi and always refer to the physical pressure. Positive
sin(theta) makes gravity raise the pressure along the flow direction.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import structlog

from gasflow.config import IntegratorConfig, ResidualForm
from gasflow.errors import ChokedFlow, ConfigurationError, NonPhysicalPressure, PipeIntegrationError
from gasflow.network.model import PipeEdge
from gasflow.physics.integrator import StageStatus, integrate_batch
from gasflow.physics.nondim import NominalScales, ScaledEos, groups_for_pipe, pipe_area_nondim

logger = structlog.get_logger()


@dataclass(frozen=True)
class PipeGeometry:
    """Nondimensional pipe data together with its dimensionless groups."""

    length: float
    diameter: float
    area: float
    friction: float
    sin_theta: float
    R1: float
    R2: float
    beta: float

    def __post_init__(self) -> None:
        if not self.length > 0:
            raise ConfigurationError("length", self.length, "must be positive")
        if not (self.diameter > 0 and self.area > 0):
            raise ConfigurationError(
                "diameter/area", (self.diameter, self.area), "must be positive",
            )
        if self.friction < 0:
            raise ConfigurationError("friction", self.friction, "must be non-negative")
        if abs(self.sin_theta) > 1:
            raise ConfigurationError("sin_theta", self.sin_theta, "must lie in [-1, 1]")

    @classmethod
    def from_edge(cls, edge: PipeEdge, scales: NominalScales) -> PipeGeometry:
        """Geometry of a pipe taken from a nondimensionalized network."""
        area = pipe_area_nondim(edge.diameter, scales)
        r1, r2, beta = groups_for_pipe(scales, area, edge.diameter, edge.friction)
        return cls(edge.length, edge.diameter, area, edge.friction, edge.sin_theta, r1, r2, beta)


@dataclass(frozen=True)
class PipeModel:
    """Physics switches shared by every pipe of one run."""

    eos: ScaledEos
    include_inertia: bool = True
    include_gravity: bool = True
    choke_eps: float = 1e-12


@dataclass
class PipeSolution:
    """Pressure along a pipe with optional sensitivities, on accepted steps."""

    x: np.ndarray
    p: np.ndarray
    f: float
    s_p: np.ndarray | None = None
    s_f: np.ndarray | None = None

    @property
    def outlet(self) -> float:
        return float(self.p[-1])


@dataclass(frozen=True)
class PipeResidual:
    """Pipe residual F and its partial derivatives in p_i, p_j and f."""

    F: float
    dF_dpi: float
    dF_dpj: float
    dF_df: float


@dataclass(frozen=True)
class PipeBatch:
    """Column arrays of many pipes, for vectorized evaluation."""

    ids: tuple[str, ...]
    length: np.ndarray
    R1: np.ndarray
    R2: np.ndarray
    beta: np.ndarray
    sin_theta: np.ndarray

    @classmethod
    def from_geometries(
        cls, geoms: Sequence[PipeGeometry], ids: Sequence[str] | None = None,
    ) -> PipeBatch:
        ids = tuple(ids) if ids is not None else tuple(str(i) for i in range(len(geoms)))
        col = lambda name: np.array([getattr(g, name) for g in geoms], dtype=float)  # noqa: E731
        return cls(ids, col("length"), col("R1"), col("R2"), col("beta"), col("sin_theta"))

    def __len__(self) -> int:
        return len(self.ids)


def g_terms(
    p: np.ndarray, f: np.ndarray, R1: np.ndarray, R2: np.ndarray, beta: np.ndarray,
    sin_theta: np.ndarray, model: PipeModel,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized G, G_p, G_f and a choke mask.

    The choke mask flags rows whose denominator is not safely positive.
    """
    inertia = 1.0 if model.include_inertia else 0.0
    s = sin_theta if model.include_gravity else np.zeros_like(sin_theta)
    eos = model.eos
    rho = eos.density(p)
    rp = eos.drho_dp(p)
    rpp = eos.d2rho_dp2

    num = R2 * rho * rho * s - R1 * beta * f * np.abs(f)
    den = rho * rho - inertia * R1 * f * f * rp
    choked = den <= model.choke_eps * rho * rho

    num_p = 2.0 * R2 * rho * rp * s
    den_p = 2.0 * rho * rp - inertia * R1 * f * f * rpp
    num_f = -2.0 * R1 * beta * np.abs(f)
    den_f = -2.0 * inertia * R1 * f * rp

    G = rho * num / den
    G_p = (rp * num + rho * num_p) / den - rho * num * den_p / (den * den)
    G_f = rho * num_f / den - rho * num * den_f / (den * den)
    return G, G_p, G_f, choked


def _scalar_terms(
    p: float, f: float, geom: PipeGeometry, model: PipeModel,
) -> tuple[float, float, float]:
    if not p > 0:
        raise NonPhysicalPressure(f"Pressure {p!r} is not positive")
    G, G_p, G_f, choked = g_terms(
        np.array([p]), np.array([f]), np.array([geom.R1]), np.array([geom.R2]),
        np.array([geom.beta]), np.array([geom.sin_theta]), model,
    )
    if choked[0]:
        raise ChokedFlow("Momentum denominator vanished (choked flow)")
    return float(G[0]), float(G_p[0]), float(G_f[0])


def rhs_G(p: float, f: float, geom: PipeGeometry, model: PipeModel) -> float:
    """dp/dx of the nondimensional pipe ODE."""
    return _scalar_terms(p, f, geom, model)[0]


def rhs_G_partials(p: float, f: float, geom: PipeGeometry, model: PipeModel) -> tuple[float, float]:
    """Analytic (dG/dp, dG/df)."""
    _, G_p, G_f = _scalar_terms(p, f, geom, model)
    return G_p, G_f


def rhs_H(pi: float, f: float, geom: PipeGeometry, model: PipeModel) -> float:
    """dpi/dx of the transformed ODE, H = 3 p^2 G with p = pi**(1/3)."""
    if not pi > 0:
        raise NonPhysicalPressure(f"Transformed pressure {pi!r} is not positive")
    p = float(np.cbrt(pi))
    return 3.0 * p * p * rhs_G(p, f, geom, model)


def h_terms(
    pi: np.ndarray, f: np.ndarray, batch: PipeBatch, model: PipeModel,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized H, dH/dpi, dH/df and a choke mask for collocation rows."""
    p = np.cbrt(pi)
    G, G_p, G_f, choked = g_terms(p, f, batch.R1, batch.R2, batch.beta, batch.sin_theta, model)
    H = 3.0 * p * p * G
    H_pi = 2.0 * G / p + G_p
    H_f = 3.0 * p * p * G_f
    return H, H_pi, H_f, choked


def _make_rhs(batch: PipeBatch, f: np.ndarray, model: PipeModel, sensitivities: bool):
    def rhs(x: np.ndarray, y: np.ndarray, rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        pi = y[:, 0]
        positive = pi > 0
        p = np.cbrt(np.where(positive, pi, 1.0))
        G, G_p, G_f, choked = g_terms(
            p, f[rows], batch.R1[rows], batch.R2[rows], batch.beta[rows], batch.sin_theta[rows],
            model,
        )
        dy = np.empty_like(y)
        dy[:, 0] = 3.0 * p * p * G
        if sensitivities:
            dy[:, 1] = G_p * y[:, 1]
            dy[:, 2] = G_p * y[:, 2] + G_f
        status = np.where(choked, int(StageStatus.CHOKED), int(StageStatus.OK))
        status = np.where(positive & np.isfinite(pi), status, int(StageStatus.NONPHYSICAL))
        return dy, status

    return rhs


@dataclass
class BatchEndpoints:
    """Outlet values of a batch of pipe integrations."""

    pi_out: np.ndarray
    p_out: np.ndarray
    s_p: np.ndarray | None
    s_f: np.ndarray | None


def integrate_batch_endpoints(
    p_in: np.ndarray, f: np.ndarray, batch: PipeBatch, model: PipeModel,
    cfg: IntegratorConfig, sensitivities: bool = True,
) -> BatchEndpoints:
    """Integrate every pipe of a batch and return outlet values.

    Raises:
        PipeIntegrationError: For the first pipe that fails, tagged with its id.
    """
    p_in = np.asarray(p_in, dtype=float)
    f = np.asarray(f, dtype=float)
    bad = ~(p_in > 0)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise NonPhysicalPressure(
            f"Inlet pressure {p_in[i]!r} is not positive", pipe_id=batch.ids[i], x=0.0,
        )

    cols = [p_in**3]
    if sensitivities:
        cols += [np.ones_like(p_in), np.zeros_like(p_in)]
    y0 = np.column_stack(cols)
    rhs = _make_rhs(batch, f, model, sensitivities)
    res = integrate_batch(rhs, y0, batch.length, cfg, labels=batch.ids)
    pi_out = res.y[:, 0]
    return BatchEndpoints(
        pi_out=pi_out,
        p_out=np.cbrt(pi_out),
        s_p=res.y[:, 1] if sensitivities else None,
        s_f=res.y[:, 2] if sensitivities else None,
    )


def _integrate_single(
    p_in: float, f: float, geom: PipeGeometry, model: PipeModel, cfg: IntegratorConfig,
    sensitivities: bool, pipe_id: str,
) -> PipeSolution:
    if not p_in > 0:
        raise NonPhysicalPressure(
            f"Inlet pressure {p_in!r} is not positive", pipe_id=pipe_id, x=0.0,
        )
    batch = PipeBatch.from_geometries([geom], [pipe_id])
    farr = np.array([float(f)])
    y0 = np.array([[p_in**3, 1.0, 0.0]]) if sensitivities else np.array([[p_in**3]])
    res = integrate_batch(
        _make_rhs(batch, farr, model, sensitivities), y0, batch.length, cfg,
        labels=batch.ids, record=True,
    )
    xs, ys = res.trajectory(0)
    p = np.cbrt(ys[:, 0])
    p[0] = p_in
    return PipeSolution(
        x=xs, p=p, f=float(f),
        s_p=ys[:, 1] if sensitivities else None,
        s_f=ys[:, 2] if sensitivities else None,
    )


def integrate_pressure(
    p_in: float, f: float, geom: PipeGeometry, model: PipeModel,
    cfg: IntegratorConfig | None = None, pipe_id: str = "pipe",
) -> PipeSolution:
    """Pressure profile from the inlet pressure and flow (no sensitivities)."""
    return _integrate_single(p_in, f, geom, model, cfg or IntegratorConfig(), False, pipe_id)


def integrate_with_sensitivities(
    p_in: float, f: float, geom: PipeGeometry, model: PipeModel,
    cfg: IntegratorConfig | None = None, pipe_id: str = "pipe",
) -> PipeSolution:
    """Pressure profile together with s_p = dp/dp_in and s_f = dp/df."""
    return _integrate_single(p_in, f, geom, model, cfg or IntegratorConfig(), True, pipe_id)


def residual_from_endpoints(
    p_i: np.ndarray, p_j: np.ndarray, ends: BatchEndpoints, form: ResidualForm = ResidualForm.CUBIC,
) -> tuple[np.ndarray, np.ndarray | None, np.ndarray, np.ndarray | None]:
    """Pipe residuals and their derivatives in (p_i, p_j, f), vectorized.

    The p_i and f derivatives are None when the endpoints carry no
    sensitivities.
    """
    if form is ResidualForm.CUBIC:
        dR = 3.0 * ends.p_out**2
        F = ends.pi_out - p_j**3
        dF_dpj = -3.0 * p_j**2
    else:
        dR = np.ones_like(ends.p_out)
        F = ends.p_out - p_j
        dF_dpj = -np.ones_like(p_j)
    if ends.s_p is None or ends.s_f is None:
        return F, None, dF_dpj, None
    return F, dR * ends.s_p, dF_dpj, dR * ends.s_f


def residual_F(
    p_i: float, p_j: float, f: float, geom: PipeGeometry, model: PipeModel,
    cfg: IntegratorConfig | None = None, form: ResidualForm = ResidualForm.CUBIC,
    pipe_id: str = "pipe",
) -> PipeResidual:
    """Mismatch between the integrated outlet pressure and p_j.

    With the cubic form, F = pi(L) - p_j**3 and its derivatives follow
    from the outlet sensitivities.
    """
    if not p_j > 0:
        raise NonPhysicalPressure(f"Outlet pressure {p_j!r} is not positive", pipe_id=pipe_id)
    batch = PipeBatch.from_geometries([geom], [pipe_id])
    try:
        ends = integrate_batch_endpoints(
            np.array([p_i]), np.array([f]), batch, model, cfg or IntegratorConfig(),
        )
    except PipeIntegrationError as exc:
        logger.debug("pipe_integration_failed", pipe=pipe_id, error=str(exc))
        raise
    F, dpi, dpj, df = residual_from_endpoints(np.array([p_i]), np.array([p_j]), ends, form)
    return PipeResidual(float(F[0]), float(dpi[0]), float(dpj[0]), float(df[0]))
