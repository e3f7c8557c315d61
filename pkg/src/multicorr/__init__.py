"""Desk-scale workbench for multicorrelation sequences of explicit systems."""

from __future__ import annotations

__version__ = "0.1.0"
