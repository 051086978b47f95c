"""Driving-hazard prediction benchmark toolkit."""

__version__ = "0.1.0"
