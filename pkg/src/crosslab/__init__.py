"""Kernel algebras of Z^d actions on compact abelian groups: fibers, traces,
integrated density of states, Bloch bands and Aubry duality."""
from .algebra import Kernel, convolve, inner, involve, random_kernel
from .dynsys import GOLDEN, Box, DynamicalSystem, FiniteCyclic, GroupSpec, Point, Torus
from .errors import (
    ConfigError, CrossLabError, NotHermitianError, NumericalError, SystemMismatch, TruncationError,
    UnsupportedSpace,
)
from .fibers import fiber_dual, fiber_x
from .presets import almost_mathieu, laplacian, periodic, unit

__version__ = "0.1.0"

__all__ = [
    "Kernel", "convolve", "inner", "involve", "random_kernel",
    "GOLDEN", "Box", "DynamicalSystem", "FiniteCyclic", "GroupSpec", "Point", "Torus",
    "ConfigError", "CrossLabError", "NotHermitianError", "NumericalError", "SystemMismatch",
    "TruncationError", "UnsupportedSpace",
    "fiber_dual", "fiber_x", "almost_mathieu", "laplacian", "periodic", "unit",
]
