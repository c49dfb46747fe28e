"""Zeros of random polynomials orthonormal on plane domains.

Modules
-------
numerics   polynomial evaluation, batch root finding, boundary quadrature
domain     Laurent-data domains, exterior maps, outer functions
orthopoly  orthonormal bases by Arnoldi recurrence and their kernels
ensemble   Gaussian random polynomials, exact densities, Monte Carlo
scaling    universal scaling limits near the boundary
cli        batch command line interface
"""

__version__ = "0.1.0"
