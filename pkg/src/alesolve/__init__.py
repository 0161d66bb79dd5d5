"""Entropy-stable moving-mesh solvers with summation-by-parts operators.

The package provides Legendre-Gauss-Lobatto collocation operators, a
prescribed-motion hexahedral box mesh with curl-form metric terms, two-point
entropy-conservative flux kits for the compressible Euler and shallow water
equations, a 1D moving-mesh finite-volume scheme, the split-form moving-mesh
DGSEM for 3D Euler, and diagnostics for entropy accounting and convergence
studies.
"""

from alesolve.errors import (
    ConfigurationError,
    GeometryError,
    StateError,
    TimeStepError,
    UsageError,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "GeometryError",
    "StateError",
    "TimeStepError",
    "UsageError",
    "__version__",
]
