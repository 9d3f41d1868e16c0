"""Network and solution file formats."""

from __future__ import annotations
