"""Certified stability of parametrically driven coupled oscillators via bounds on long-time averages."""

__version__ = "0.1.0"
