"""Spectral Galerkin Navier-Stokes vorticity systems on the 2- and 3-torus
with generalized dissipation, trapping-region diagnostics and certified
decay-envelope constants."""

__version__ = "0.1.0"
