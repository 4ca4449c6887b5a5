"""Automated toll management playground: plaza engine, plate vision, metrics, service, simulator."""

__version__ = "0.1.0"
