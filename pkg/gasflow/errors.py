"""Exception types raised by the physics, solver and file layers.

Each exception keeps its structured context as attributes so the CLI
can map it to an exit code and log it without parsing the message.
"""

from __future__ import annotations

from typing import Any


class GasflowError(Exception):
    """Base class for all gasflow errors."""


class ConfigurationError(GasflowError):
    """Raised when nominal scales, geometry or options are not usable."""

    def __init__(self, field: str, value: Any, reason: str) -> None:
        self.field = field
        self.value = value
        self.reason = reason
        super().__init__(f"Invalid {field}={value!r}: {reason}")


class EosDomainError(GasflowError):
    """Raised when an equation-of-state evaluation leaves its domain."""

    def __init__(self, quantity: str, value: float, reason: str) -> None:
        self.quantity = quantity
        self.value = value
        self.reason = reason
        super().__init__(f"EoS domain error for {quantity}={value!r}: {reason}")


class PipeIntegrationError(GasflowError):
    """Base class for failures of the per-pipe ODE integration."""

    def __init__(self, message: str, pipe_id: str | None = None, x: float | None = None) -> None:
        self.pipe_id = pipe_id
        self.x = x
        self.detail = message
        super().__init__(self._format())

    def _format(self) -> str:
        where = f" in pipe {self.pipe_id!r}" if self.pipe_id is not None else ""
        at = f" at x={self.x:.6g}" if self.x is not None else ""
        return f"{self.detail}{where}{at}"


class ChokedFlow(PipeIntegrationError):
    """The momentum denominator vanished: the flow is no longer subsonic."""


class NonPhysicalPressure(PipeIntegrationError):
    """The transformed pressure became non-positive during integration."""


class StiffnessBudgetExceeded(PipeIntegrationError):
    """The adaptive integrator used more steps than allowed."""


class BranchViolation(GasflowError):
    """A closed-form first integral was evaluated off its logarithm branch."""

    def __init__(self, case: str, argument: float) -> None:
        self.case = case
        self.argument = argument
        super().__init__(f"Non-positive logarithm argument {argument!r} in {case} first integral")


class NoBracket(GasflowError):
    """No sign change was found for a scalar root search."""

    def __init__(self, unknown: str, lower: float, upper: float) -> None:
        self.unknown = unknown
        self.lower = lower
        self.upper = upper
        super().__init__(f"No sign change for {unknown} in [{lower:.6g}, {upper:.6g}]")


class NonConvergence(GasflowError):
    """Newton iterations stopped before reaching the tolerance."""

    def __init__(self, stage: str, report: Any, best: Any = None) -> None:
        self.stage = stage
        self.report = report
        self.best = best
        super().__init__(
            f"{stage} stage did not converge after {report.iterations} iterations "
            f"(residual {report.residual_norm:.3e})"
        )


class NetworkFileError(GasflowError):
    """Raised for malformed or inconsistent network/solution documents."""

    def __init__(self, path: str, location: str, reason: str, line: int | None = None) -> None:
        self.path = path
        self.location = location
        self.reason = reason
        self.line = line
        where = f"{path}:{line}" if line is not None else path
        super().__init__(f"{where}: {location}: {reason}")
