"""Bifurcation currents of the cubic family f(z) = (z - c)^2 (z + 2c) + v."""

__version__ = "0.1.0"

from .cubic import CubicParam  # noqa: E402

__all__ = ["CubicParam", "__version__"]
