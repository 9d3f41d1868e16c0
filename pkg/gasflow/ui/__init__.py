"""Terminal UI for the gasflow CLI."""

from __future__ import annotations
