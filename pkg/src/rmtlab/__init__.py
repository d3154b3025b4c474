"""Spectral laboratory for deformed random matrices.

Samplers for the deformed GOE and the spiked population model, the
deterministic outlier limits and explicit tail bounds, epsilon-nets for the
hemispheric metric, approximate eigenvector constructions, a spike estimator
and a seeded Monte Carlo harness.
"""

__version__ = "0.1.0"
