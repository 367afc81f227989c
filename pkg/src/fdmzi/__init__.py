"""Frequency-domain Mach-Zehnder interferometer built from frequency-conversion beamsplitters."""

__version__ = "0.1.0"
