"""Closed-form first integrals of the ideal-gas pipe equation.

With rho = Eu p, the pipe ODE integrates to an algebraic relation between
inlet pressure p0, outlet pressure pL and flow f. Four variants exist,
one per combination of the inertia and gravity terms:

    friction   p0^2 - pL^2 - 2 L R1h beta f|f|
    inertia    p0^2 - pL^2 - R1h f^2 ln(p0^2/pL^2) - 2 L R1h beta f|f|
    gravity    e^g p0^2 - pL^2 - 2 L R1h beta f|f| (e^g - 1)/g,       g = 2 L R2h sin
    full       (R1h f^2 - d) ln((p0^2 - d)/(pL^2 - d))
                 - R1h f^2 ln(p0^2/pL^2) - 2 L R1h beta f|f|,        d = beta R1h f|f| / (R2h sin)

These serve as an independent check of the integrated ODE and as the
measure of how well a solved network satisfies the pipe physics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
import structlog
from scipy.optimize import brentq

from gasflow.errors import BranchViolation, ConfigurationError, NoBracket
from gasflow.physics.nondim import ScaledEos

logger = structlog.get_logger()

# |gamma| below this uses the gravity-free formulas
GAMMA_EPS = 1e-8
OUTLET_LOWER = 1e-6
OUTLET_UPPER_FACTOR = 10.0
_BRANCH_MARGIN = 1e-9


class IntegralCase(str, Enum):
    FRICTION = "friction"
    INERTIA = "inertia"
    GRAVITY = "gravity"
    FULL = "full"


@dataclass(frozen=True)
class IdealCaseParams:
    """Parameters of one ideal-gas pipe in the reduced groups R1_hat, R2_hat."""

    L: float
    beta: float
    R1_hat: float
    R2_hat: float
    sin_theta: float = 0.0
    include_inertia: bool = True
    include_gravity: bool = True

    def __post_init__(self) -> None:
        if not self.L > 0:
            raise ConfigurationError("L", self.L, "must be positive")
        if self.beta < 0:
            raise ConfigurationError("beta", self.beta, "must be non-negative")
        if not self.R1_hat > 0:
            raise ConfigurationError("R1_hat", self.R1_hat, "must be positive")
        if self.include_gravity and not self.R2_hat > 0:
            raise ConfigurationError("R2_hat", self.R2_hat, "must be positive when gravity is on")

    @classmethod
    def from_pipe(
        cls, L: float, R1: float, R2: float, beta: float, sin_theta: float, eos: ScaledEos,
        include_inertia: bool = True, include_gravity: bool = True,
    ) -> IdealCaseParams:
        """Reduce nondimensional pipe groups with the Euler number k1 of an ideal gas.

        Raises:
            ConfigurationError: If the equation of state is not ideal.
        """
        if eos.k2 != 0.0:
            raise ConfigurationError("eos", eos, "closed forms exist only for the ideal gas")
        euler = eos.k1
        return cls(L, beta, R1 / euler, R2 * euler, sin_theta, include_inertia, include_gravity)

    @property
    def gamma(self) -> float:
        if not self.include_gravity:
            return 0.0
        return 2.0 * self.L * self.R2_hat * self.sin_theta

    def case_for(self, f: float) -> IntegralCase:
        """Variant that applies at flow f, after the small-gamma and zero-flow guards."""
        gravity = abs(self.gamma) >= GAMMA_EPS
        if gravity:
            # the full form degenerates at f = 0, where inertia has no effect anyway
            return IntegralCase.FULL if self.include_inertia and f != 0.0 else IntegralCase.GRAVITY
        return IntegralCase.INERTIA if self.include_inertia else IntegralCase.FRICTION

    def friction_term(self, f: float) -> float:
        return 2.0 * self.L * self.R1_hat * self.beta * f * abs(f)

    def delta(self, f: float) -> float:
        return self.beta * self.R1_hat * f * abs(f) / (self.R2_hat * self.sin_theta)


def _log(case: IntegralCase, argument: float) -> float:
    if not argument > 0:
        raise BranchViolation(case.value, argument)
    return math.log(argument)


def friction_residual(params: IdealCaseParams, p0: float, pL: float, f: float) -> float:
    return p0 * p0 - pL * pL - params.friction_term(f)


def inertia_residual(params: IdealCaseParams, p0: float, pL: float, f: float) -> float:
    a = params.R1_hat * f * f
    log_ratio = _log(IntegralCase.INERTIA, p0 * p0 / (pL * pL))
    return p0 * p0 - pL * pL - a * log_ratio - params.friction_term(f)


def gravity_residual(params: IdealCaseParams, p0: float, pL: float, f: float) -> float:
    g = params.gamma
    growth = math.expm1(g) / g if g != 0.0 else 1.0
    return math.exp(g) * p0 * p0 - pL * pL - params.friction_term(f) * growth


def full_residual(params: IdealCaseParams, p0: float, pL: float, f: float) -> float:
    a = params.R1_hat * f * f
    d = params.delta(f)
    u0, uL = p0 * p0, pL * pL
    if (u0 - d) * (uL - d) <= 0:
        raise BranchViolation(IntegralCase.FULL.value, (u0 - d) / (uL - d) if uL != d else 0.0)
    return (
        (a - d) * _log(IntegralCase.FULL, (u0 - d) / (uL - d))
        - a * _log(IntegralCase.FULL, u0 / uL)
        - params.friction_term(f)
    )


_RESIDUALS = {
    IntegralCase.FRICTION: friction_residual,
    IntegralCase.INERTIA: inertia_residual,
    IntegralCase.GRAVITY: gravity_residual,
    IntegralCase.FULL: full_residual,
}


def residual_case(params: IdealCaseParams, p0: float, pL: float, f: float) -> float:
    """Closed-form residual of the variant selected by the parameter switches.

    Raises:
        BranchViolation: If a pressure is non-positive or a logarithm
            argument is off the physical branch.
    """
    case = params.case_for(f)
    if not (p0 > 0 and pL > 0):
        raise BranchViolation(case.value, min(p0, pL))
    return _RESIDUALS[case](params, p0, pL, f)


def _outlet_bracket(params: IdealCaseParams, p0: float, f: float) -> tuple[float, float]:
    lower, upper = OUTLET_LOWER, OUTLET_UPPER_FACTOR * p0
    case = params.case_for(f)
    if case in (IntegralCase.INERTIA, IntegralCase.FULL):
        # subsonic branch: pL^2 > R1h f^2
        lower = max(lower, math.sqrt(params.R1_hat) * abs(f) * (1.0 + _BRANCH_MARGIN))
    if case is IntegralCase.FULL:
        d = params.delta(f)
        if d > 0 and p0 * p0 > d:
            lower = max(lower, math.sqrt(d) * (1.0 + _BRANCH_MARGIN))
        elif d > 0:
            upper = min(upper, math.sqrt(d) * (1.0 - _BRANCH_MARGIN))
    return lower, upper


def solve_outlet(params: IdealCaseParams, p0: float, f: float, xtol: float = 1e-15) -> float:
    """Outlet pressure pL with residual_case(params, p0, pL, f) = 0.

    The search stays on the subsonic branch.

    Raises:
        NoBracket: If the residual does not change sign on the search interval.
    """
    if not p0 > 0:
        raise ConfigurationError("p0", p0, "inlet pressure must be positive")
    lower, upper = _outlet_bracket(params, p0, f)
    if not lower < upper:
        raise NoBracket("pL", lower, upper)
    try:
        r_lo = residual_case(params, p0, lower, f)
        r_hi = residual_case(params, p0, upper, f)
    except BranchViolation:
        raise NoBracket("pL", lower, upper) from None
    if r_lo == 0.0:
        return lower
    if np.sign(r_lo) == np.sign(r_hi):
        raise NoBracket("pL", lower, upper)
    root = brentq(
        lambda pL: residual_case(params, p0, pL, f), lower, upper,
        xtol=xtol, rtol=4 * np.finfo(float).eps,
    )
    return float(root)


def default_flow_limit(params: IdealCaseParams, p0: float, pL: float) -> float:
    """Symmetric search limit for :func:`solve_flow`.

    With inertia the limit sits just below choking at the lower end
    pressure; otherwise it is well past the flow that drains the pipe.
    """
    if params.include_inertia:
        return min(p0, pL) / math.sqrt(params.R1_hat) * (1.0 - 1e-6)
    if params.beta == 0.0:
        return 1e6
    g = params.gamma
    growth = math.expm1(g) / g if g != 0.0 else 1.0
    scale = max(math.exp(g), 1.0) * p0 * p0 + pL * pL
    drain = 2.0 * params.L * params.R1_hat * params.beta * min(growth, 1.0)
    return 10.0 * math.sqrt(scale / drain)


def solve_flow(
    params: IdealCaseParams, p0: float, pL: float, f_max: float | None = None, xtol: float = 1e-14,
) -> float:
    """Flow f that carries the pipe from p0 to pL.

    Solved as the root of solve_outlet(f) - pL, which is continuous in f
    across f = 0 unlike the full closed form itself.

    Raises:
        NoBracket: If no sign change exists on [-f_max, f_max].
    """
    f_max = f_max if f_max is not None else default_flow_limit(params, p0, pL)

    def mismatch(f: float) -> float:
        try:
            return solve_outlet(params, p0, f) - pL
        except NoBracket:
            # no subsonic outlet: drained for forward flow, unbounded for reverse
            return -pL if f > 0 else OUTLET_UPPER_FACTOR * p0

    lo, hi = mismatch(-f_max), mismatch(f_max)
    if np.sign(lo) == np.sign(hi):
        raise NoBracket("f", -f_max, f_max)
    root = float(brentq(mismatch, -f_max, f_max, xtol=xtol, rtol=4 * np.finfo(float).eps))
    logger.debug("closed_form_flow", case=params.case_for(root).value, f=root)
    return root
