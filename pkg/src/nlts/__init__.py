"""Pseudo-spectral simulation of transport by the nonlocal velocity grad Lambda^{-2+2alpha} theta."""

__version__ = "0.1.0"
