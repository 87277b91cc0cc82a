"""Hybrid quantum-classical FFT homogenization on a statevector simulator."""

__version__ = "0.1.0"
