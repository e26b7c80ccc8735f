"""Ethical black box toolkit: durable robot telemetry recording,
extraction, deterministic accident simulation, and why-because analysis.
"""

__version__ = "0.1.0"
