"""Numerics for a tagged particle absorbing heavy-tailed scatterers.

Submodules: ``specfun`` (Gamma, Beta and quadrature), ``lambda_series``
(the rescaled fundamental solution as a fractional power series),
``mellin`` (symbol zeros and contour inversion), ``kernel`` (Green and
Dirichlet kernels, boundary value problems), ``resolvent`` (grid generator,
resolvent and adjoint evolution), ``simulator`` (jump process Monte Carlo)
and ``cli``.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BracketError,
    ConfigError,
    DomainError,
    EventCapError,
    NumericError,
    PoleError,
    QuadratureError,
    SmolkinError,
    TailError,
)

__all__ = [
    "__version__",
    "SmolkinError",
    "DomainError",
    "PoleError",
    "NumericError",
    "QuadratureError",
    "TailError",
    "BracketError",
    "EventCapError",
    "ConfigError",
]
