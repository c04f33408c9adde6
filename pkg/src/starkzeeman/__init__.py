"""Planar Stark-Zeeman systems, periodic-orbit families and plane-curve invariants."""

__version__ = "0.1.0"
