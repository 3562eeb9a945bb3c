"""Spectral synthesis laboratory: eigenfunction expansions of thinly supported
measures on flat tori and the 2-sphere, low-pass multipliers, Fourier-ratio
sparse approximation and uncertainty certificates."""

__version__ = "0.1.0"
