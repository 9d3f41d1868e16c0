"""Configuration loading and validation using Pydantic models.

Loads solver and physics configuration from YAML files in a config
directory. Solver options may also come from ``GASFLOW_*`` environment
variables for anything the file does not set.
"""

from __future__ import annotations

from enum import Enum
from pathlib import Path
from typing import Any

import yaml
from pydantic import BaseModel, Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class EosKind(str, Enum):
    """Equation of state family."""

    IDEAL = "ideal"
    CNGA = "cnga"


class InitMode(str, Enum):
    """How the Newton solve is started."""

    COLLOCATION = "collocation"
    FLAT = "flat"
    FILE = "file"


class ResidualForm(str, Enum):
    """Residual function R(x1, x2) used on pipe rows."""

    CUBIC = "cubic"  # x1**3 - x2**3, difference in pi
    LINEAR = "linear"  # x1 - x2, difference in p


class EosConfig(BaseModel):
    """Equation-of-state parameters.

    The gas constant default is the usual natural-gas value; it is a
    repository choice rather than a measured property of any dataset.
    """

    kind: EosKind = EosKind.IDEAL
    temperature: float = Field(default=288.706, gt=0, description="K")
    specific_gravity: float = Field(default=0.6, gt=0)
    p_atm: float = Field(default=101350.0, gt=0, description="Pa")
    gas_constant: float = Field(default=518.3, gt=0, description="J/(kg K)")


class NominalConfig(BaseModel):
    """Optional nominal-scale overrides; unset values use network defaults."""

    L0: float | None = Field(default=None, gt=0, description="m")
    p0: float | None = Field(default=None, gt=0, description="Pa")
    rho0: float | None = Field(default=None, gt=0, description="kg/m^3")
    v0: float | None = Field(default=None, gt=0, description="m/s")


class IntegratorConfig(BaseModel):
    """Adaptive Runge-Kutta controls for the per-pipe ODEs."""

    rtol: float = Field(default=1e-8, gt=0, lt=1)
    atol: float = Field(default=1e-10, gt=0)
    max_steps: int = Field(default=100_000, ge=1)
    choke_eps: float = Field(default=1e-12, gt=0)
    first_step: float = Field(
        default=1e-2, gt=0, le=1,
        description="Initial step as a fraction of the pipe length.",
    )


class PhysicsConfig(BaseModel):
    """Physics defaults loaded from physics.yaml."""

    eos: EosConfig = Field(default_factory=EosConfig)
    nominal: NominalConfig = Field(default_factory=NominalConfig)


class SolverSettings(BaseSettings):
    """Newton solver options loaded from solver.yaml and the environment."""

    model_config = SettingsConfigDict(env_prefix="GASFLOW_", env_nested_delimiter="__")

    tol_newton: float = Field(default=1e-8, gt=0)
    max_iter: int = Field(default=50, ge=1, le=1000)
    armijo_factor: float = Field(default=0.5, gt=0, lt=1)
    armijo_c: float = Field(default=1e-4, ge=0, lt=1)
    min_step: float = Field(default=2.0**-20, gt=0, le=1)
    positivity_fraction: float = Field(
        default=0.1, gt=0, lt=1,
        description="Every pi slot must stay above this fraction of its current value.",
    )
    loop_circulation: float = Field(
        default=1e-2, ge=0, lt=1,
        description="Start flow around each loop, as a fraction of the largest tree flow.",
    )
    init: InitMode = InitMode.COLLOCATION
    include_gravity: bool = True
    include_inertia: bool = True
    residual_form: ResidualForm = ResidualForm.CUBIC
    integrator: IntegratorConfig = Field(default_factory=IntegratorConfig)

    @field_validator("min_step")
    @classmethod
    def power_of_two_floor(cls, v: float) -> float:
        """Keep the backtracking floor reachable from 1 by halving."""
        if v < 2.0**-60:
            raise ValueError("min_step below 2**-60 is never reached")
        return v


def _load_yaml(path: Path) -> dict[str, Any]:
    """Load and parse a YAML file, returning an empty dict if missing."""
    if not path.exists():
        return {}
    with open(path) as f:
        data = yaml.safe_load(f)
    return data if isinstance(data, dict) else {}


def load_solver_config(config_dir: Path) -> SolverSettings:
    """Load solver options from config_dir/solver.yaml."""
    data = _load_yaml(config_dir / "solver.yaml")
    return SolverSettings(**data)


def load_physics_config(config_dir: Path) -> PhysicsConfig:
    """Load physics defaults from config_dir/physics.yaml."""
    data = _load_yaml(config_dir / "physics.yaml")
    return PhysicsConfig(**data)


def load_all_config(config_dir: str | Path) -> tuple[SolverSettings, PhysicsConfig]:
    """Load all configuration files from the given directory.

    Args:
        config_dir: Path to the configuration directory.

    Returns:
        Tuple of (SolverSettings, PhysicsConfig).

    Raises:
        FileNotFoundError: If config_dir does not exist.
        pydantic.ValidationError: If any config file has invalid content.
    """
    config_path = Path(config_dir)
    if not config_path.is_dir():
        raise FileNotFoundError(f"Configuration directory not found: {config_path}")

    return load_solver_config(config_path), load_physics_config(config_path)
