"""Pipe-level physics: equations of state, scaling, ODE integration and first integrals."""

from __future__ import annotations

from gasflow.physics.eos import EosModel
from gasflow.physics.nondim import NominalScales, ScaledEos, default_scales, groups
from gasflow.physics.pipe import PipeGeometry, PipeModel, integrate_with_sensitivities, residual_F

__all__ = [
    "EosModel",
    "NominalScales",
    "PipeGeometry",
    "PipeModel",
    "ScaledEos",
    "default_scales",
    "groups",
    "integrate_with_sensitivities",
    "residual_F",
]
