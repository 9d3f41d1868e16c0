"""gasflow - steady-state isothermal gas flow in pipeline networks."""

from __future__ import annotations

__version__ = "0.1.0"
