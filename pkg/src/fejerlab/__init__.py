"""Fejér-integral limit theorems.

Modules
-------
graph_core
    incidence-like matrices, ranks and the power-counting polytope.
kernels
    Dirichlet and Fejér kernels, their L_p norms and the kernel property.
fejer
    Fejér integrals of spectral symbols and their Szegő-type limits.
wick
    moment/cumulant conversion, Appell polynomials and diagram enumeration.
processes
    linear processes, FRBM fields and Monte Carlo CLT experiments.
estimation
    Whittle and Ibragimov contrasts with sandwich covariances.
cli
    the ``fejerlab`` command.
"""

__version__ = "0.1.0"

__all__ = ["graph_core", "kernels", "fejer", "wick", "processes", "estimation", "__version__"]
