"""Network topology, diagnostics and synthetic network generation."""

from __future__ import annotations
