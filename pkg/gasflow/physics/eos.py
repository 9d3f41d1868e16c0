"""Isothermal equation of state for natural gas.

Two families are supported: the ideal gas, rho = p / (Rg T), and the
CNGA form, rho = (b1 p + b2 p**2) / (Rg T). All evaluations are in SI
units; nondimensional callers go through :class:`gasflow.physics.nondim.ScaledEos`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import structlog

from gasflow.config import EosConfig, EosKind
from gasflow.errors import EosDomainError

logger = structlog.get_logger()

# CNGA correlation constants.
CNGA_A1 = 344400.0
CNGA_A2 = 1.785
CNGA_A3 = 3.825
PSI_IN_PA = 6894.75729


def cnga_coefficients(
    temperature: float, specific_gravity: float, p_atm: float,
) -> tuple[float, float]:
    """Return the CNGA coefficients (b1, b2) for the given gas and temperature.

    b2 is in 1/Pa. Both share the factor a1 10**(a2 G) / (1.8 T)**a3, so
    b1 - 1 == p_atm * b2 holds by construction.

    Raises:
        EosDomainError: If an input is non-positive or the correlation
            overflows (e.g. an implausibly large specific gravity).
    """
    for name, value in (("temperature", temperature), ("specific_gravity", specific_gravity),
                        ("p_atm", p_atm)):
        if not value > 0:
            raise EosDomainError(name, value, "must be positive")

    try:
        exponent = 10.0 ** (CNGA_A2 * specific_gravity)
    except OverflowError:
        raise EosDomainError(
            "specific_gravity", specific_gravity, "10**(a2*G) overflows"
        ) from None
    factor = CNGA_A1 * exponent / (1.8 * temperature) ** CNGA_A3
    if not math.isfinite(factor):
        raise EosDomainError("specific_gravity", specific_gravity, "CNGA factor is not finite")

    b2 = factor / PSI_IN_PA
    b1 = 1.0 + p_atm * b2
    return b1, b2


@dataclass(frozen=True)
class EosModel:
    """Immutable equation of state rho(p) = (b1 p + b2 p**2) / (Rg T)."""

    kind: EosKind
    b1: float
    b2: float
    gas_constant: float
    temperature: float
    specific_gravity: float = 0.6
    p_atm: float = 101350.0

    def __post_init__(self) -> None:
        if not self.b1 > 0:
            raise EosDomainError("b1", self.b1, "must be positive")
        if self.b2 < 0:
            raise EosDomainError("b2", self.b2, "must be non-negative")
        if not self.gas_constant > 0:
            raise EosDomainError("gas_constant", self.gas_constant, "must be positive")
        if not self.temperature > 0:
            raise EosDomainError("temperature", self.temperature, "must be positive")
        if self.kind is EosKind.IDEAL and (self.b1 != 1.0 or self.b2 != 0.0):
            raise EosDomainError("b1/b2", (self.b1, self.b2), "ideal gas requires b1=1, b2=0")

    @classmethod
    def ideal(cls, gas_constant: float = 518.3, temperature: float = 288.706) -> EosModel:
        return cls(EosKind.IDEAL, 1.0, 0.0, gas_constant, temperature)

    @classmethod
    def cnga(
        cls,
        gas_constant: float = 518.3,
        temperature: float = 288.706,
        specific_gravity: float = 0.6,
        p_atm: float = 101350.0,
    ) -> EosModel:
        b1, b2 = cnga_coefficients(temperature, specific_gravity, p_atm)
        return cls(EosKind.CNGA, b1, b2, gas_constant, temperature, specific_gravity, p_atm)

    @classmethod
    def from_config(cls, cfg: EosConfig) -> EosModel:
        """Build the model described by an :class:`EosConfig`."""
        if cfg.kind is EosKind.IDEAL:
            model = cls.ideal(cfg.gas_constant, cfg.temperature)
        else:
            model = cls.cnga(cfg.gas_constant, cfg.temperature, cfg.specific_gravity, cfg.p_atm)
        logger.debug("eos_built", kind=model.kind.value, b1=model.b1, b2=model.b2)
        return model

    @property
    def rgt(self) -> float:
        return self.gas_constant * self.temperature

    def density(self, p: float) -> float:
        """Density in kg/m^3 at pressure p (Pa)."""
        _check_pressure(p)
        return (self.b1 * p + self.b2 * p * p) / self.rgt

    def drho_dp(self, p: float) -> float:
        """d rho / dp, strictly positive on p > 0."""
        _check_pressure(p)
        return (self.b1 + 2.0 * self.b2 * p) / self.rgt

    def d2rho_dp2(self) -> float:
        """Second derivative of density, constant for this family."""
        return 2.0 * self.b2 / self.rgt

    def pressure(self, rho: float) -> float:
        """Invert the EoS: the positive root of b2 p**2 + b1 p - rho Rg T = 0."""
        if not rho > 0:
            raise EosDomainError("rho", rho, "density must be positive")
        c = rho * self.rgt
        if self.b2 == 0.0:
            return c / self.b1
        # 2c / (b1 + sqrt(b1**2 + 4 b2 c)) avoids cancellation for small b2
        return 2.0 * c / (self.b1 + math.sqrt(self.b1 * self.b1 + 4.0 * self.b2 * c))

    def sound_speed(self, rho: float) -> float:
        """Isothermal sound speed c = sqrt(dp/drho) in m/s."""
        if not rho > 0:
            raise EosDomainError("rho", rho, "density must be positive")
        if self.kind is EosKind.IDEAL:
            return math.sqrt(self.rgt)
        return 1.0 / math.sqrt(self.drho_dp(self.pressure(rho)))


def _check_pressure(p: float) -> None:
    if not p > 0:
        raise EosDomainError("p", p, "pressure must be positive")
