"""Pseudo-spectral solver for the spatially homogeneous fractional
Kramers-Fokker-Planck equation, with numerical checks of its smoothing and
decay estimates."""

__version__ = "0.1.0"
