"""Superluminal-looking advancement as a weighted sum of delayed copies.

Modules
-------
numerics    grids, log-domain amplitudes, Fourier pair, quadrature
spin_model  delay combs and their transmitted envelopes
barrier     rectangular-barrier transmission, delay distribution, propagation
larmor      traversal-time amplitude from barrier-height perturbations
pointer     pre- and post-selected pointer readings
analysis    peaks, advancement, transmission band, shape distance
scenarios   configured reproductions written to CSV
"""
__version__ = "0.1.0"
