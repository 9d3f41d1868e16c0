"""Nominal scales, dimensionless groups and unit conversion.

With x = L0 x', p = p0 p', rho = rho0 rho', f = f0 f' and A0 = 1 m^2,
the steady momentum balance depends on the groups

    M  = v0 / c0            Eu = p0 / (rho0 c0^2)      Fr = v0 / sqrt(g L0)
    R1 = M^2 / (Eu A'^2)    R2 = M^2 / (Eu Fr^2)       beta = lambda / (2 D')

and, for the ideal gas, R1_hat = R1 / Eu and R2_hat = R2 Eu.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import singledispatch

import numpy as np
import structlog

from gasflow.config import NominalConfig
from gasflow.errors import ConfigurationError
from gasflow.network.model import Network, NetworkSolution, PipeProfile, Units
from gasflow.physics.eos import EosModel

logger = structlog.get_logger()

GRAVITY = 9.80665  # m/s^2
AREA_SCALE = 1.0  # m^2


@dataclass(frozen=True)
class NominalScales:
    """Reference values used to render the equations dimensionless."""

    L0: float
    v0: float
    p0: float
    rho0: float
    c0: float
    A0: float = AREA_SCALE

    def __post_init__(self) -> None:
        for name in ("L0", "v0", "p0", "rho0", "c0", "A0"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ConfigurationError(name, value, "nominal scale must be positive and finite")

    @property
    def f0(self) -> float:
        """Nominal mass flow rho0 v0 A0 (kg/s)."""
        return self.rho0 * self.v0 * self.A0


@dataclass(frozen=True)
class DimensionlessGroups:
    """Network-wide groups; R1 depends on each pipe's area through :meth:`r1`."""

    mach: float
    euler: float
    froude: float

    @property
    def R2(self) -> float:
        return self.mach**2 / (self.euler * self.froude**2)

    def r1(self, area: float = 1.0) -> float:
        return self.mach**2 / (self.euler * area * area)

    @property
    def R1(self) -> float:
        """R1 of a pipe with unit nondimensional area."""
        return self.r1(1.0)

    def r1_hat(self, area: float = 1.0) -> float:
        return self.r1(area) / self.euler

    @property
    def R1_hat(self) -> float:
        return self.r1_hat(1.0)

    @property
    def R2_hat(self) -> float:
        return self.R2 * self.euler


def build_scales(L0: float, v0: float, p0: float, rho0: float, model: EosModel) -> NominalScales:
    """Build nominal scales, taking c0 from the equation of state at rho0.

    Raises:
        ConfigurationError: If any input is not strictly positive.
    """
    for name, value in (("L0", L0), ("v0", v0), ("p0", p0), ("rho0", rho0)):
        if not value > 0:
            raise ConfigurationError(name, value, "nominal scale must be positive")
    return NominalScales(L0=L0, v0=v0, p0=p0, rho0=rho0, c0=model.sound_speed(rho0))


def default_scales(
    network: Network, model: EosModel, overrides: NominalConfig | None = None,
) -> NominalScales:
    """Nominal scales for a dimensional network.

    Defaults: L0 is the longest pipe, p0 the first slack pressure, rho0 the
    density at atmospheric pressure and v0 = 1 m/s.
    """
    overrides = overrides or NominalConfig()
    if network.units is not Units.SI:
        raise ConfigurationError("units", network.units.value, "default scales need an SI network")

    L0 = overrides.L0 or max((p.length for p in network.pipes), default=1.0)
    if overrides.p0 is not None:
        p0 = overrides.p0
    elif network.slack_nodes and network.slack_nodes[0].pressure:
        p0 = network.slack_nodes[0].pressure
    else:
        raise ConfigurationError("p0", None, "no slack pressure to take the nominal pressure from")
    rho0 = overrides.rho0 or model.density(model.p_atm)
    v0 = overrides.v0 or 1.0
    scales = build_scales(L0, v0, p0, rho0, model)
    logger.debug("nominal_scales", L0=L0, v0=v0, p0=p0, rho0=rho0, c0=scales.c0)
    return scales


def groups(scales: NominalScales) -> DimensionlessGroups:
    """Mach, Euler and Froude numbers of a set of scales."""
    return DimensionlessGroups(
        mach=scales.v0 / scales.c0,
        euler=scales.p0 / (scales.rho0 * scales.c0**2),
        froude=scales.v0 / math.sqrt(GRAVITY * scales.L0),
    )


def groups_for_pipe(
    scales: NominalScales, area: float, diameter: float, friction: float,
) -> tuple[float, float, float]:
    """(R1, R2, beta) of a pipe given nondimensional area and diameter.

    A zero friction factor is allowed and gives beta = 0.
    """
    if not area > 0:
        raise ConfigurationError("area", area, "pipe area must be positive")
    if not diameter > 0:
        raise ConfigurationError("diameter", diameter, "pipe diameter must be positive")
    if friction < 0:
        raise ConfigurationError("friction", friction, "friction factor must be non-negative")
    g = groups(scales)
    return g.r1(area), g.R2, friction / (2.0 * diameter)


@dataclass(frozen=True)
class ScaledEos:
    """Nondimensional EoS rho'(p') = k1 p' + k2 p'^2, vectorized over arrays.

    For the ideal gas k1 equals the Euler number and k2 = 0.
    """

    k1: float
    k2: float

    @classmethod
    def from_model(cls, model: EosModel, scales: NominalScales) -> ScaledEos:
        denom = model.rgt * scales.rho0
        return cls(k1=model.b1 * scales.p0 / denom, k2=model.b2 * scales.p0**2 / denom)

    def density(self, p: np.ndarray | float) -> np.ndarray | float:
        return (self.k1 + self.k2 * p) * p

    def drho_dp(self, p: np.ndarray | float) -> np.ndarray | float:
        return self.k1 + 2.0 * self.k2 * p

    @property
    def d2rho_dp2(self) -> float:
        return 2.0 * self.k2


@singledispatch
def nondimensionalize(obj: object, scales: NominalScales) -> object:
    """Convert a dimensional object to nondimensional form."""
    raise TypeError(f"Cannot nondimensionalize {type(obj).__name__}")


@singledispatch
def redimensionalize(obj: object, scales: NominalScales) -> object:
    """Convert a nondimensional object back to SI units."""
    raise TypeError(f"Cannot redimensionalize {type(obj).__name__}")


def _scale_network(network: Network, length: float, pressure: float, flow: float,
                   target: Units) -> Network:
    nodes = tuple(
        replace(
            n,
            pressure=None if n.pressure is None else n.pressure * pressure,
            injection=n.injection * flow,
            elevation=None if n.elevation is None else n.elevation * length,
        )
        for n in network.nodes
    )
    # the nondimensional area is not pi D^2/4 of the scaled diameter; see pipe_area_nondim
    pipes = tuple(
        replace(p, length=p.length * length, diameter=p.diameter * length) for p in network.pipes
    )
    return Network(network.name, nodes, pipes, network.compressors, target)


@nondimensionalize.register
def _(network: Network, scales: NominalScales) -> Network:
    if network.units is not Units.SI:
        raise ConfigurationError("units", network.units.value, "expected an SI network")
    return _scale_network(network, 1.0 / scales.L0, 1.0 / scales.p0, 1.0 / scales.f0,
                          Units.NONDIMENSIONAL)


@redimensionalize.register
def _(network: Network, scales: NominalScales) -> Network:
    if network.units is not Units.NONDIMENSIONAL:
        raise ConfigurationError("units", network.units.value, "expected a nondimensional network")
    return _scale_network(network, scales.L0, scales.p0, scales.f0, Units.SI)


@redimensionalize.register
def _(solution: NetworkSolution, scales: NominalScales) -> NetworkSolution:
    if solution.units is not Units.NONDIMENSIONAL:
        raise ConfigurationError(
            "units", solution.units.value, "expected a nondimensional solution",
        )
    return NetworkSolution(
        pressures={k: v * scales.p0 for k, v in solution.pressures.items()},
        flows={k: v * scales.f0 for k, v in solution.flows.items()},
        injections={k: v * scales.f0 for k, v in solution.injections.items()},
        units=Units.SI,
        profiles={
            k: PipeProfile(x=prof.x * scales.L0, p=prof.p * scales.p0)
            for k, prof in solution.profiles.items()
        },
        collocation=(
            None if solution.collocation is None
            else redimensionalize(solution.collocation, scales)
        ),
    )


def pipe_area_nondim(diameter_nd: float, scales: NominalScales) -> float:
    """Nondimensional area of a pipe whose diameter is already divided by L0."""
    diameter = diameter_nd * scales.L0
    return math.pi * diameter * diameter / 4.0 / scales.A0
