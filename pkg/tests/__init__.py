"""Shared test fixtures for gasflow tests."""

from __future__ import annotations
