"""Deterministic sensor-network and cooling-plant simulator."""

__version__ = "0.1.0"
