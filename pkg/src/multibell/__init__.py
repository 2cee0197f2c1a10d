"""Multiplicative Bell inequalities: Tsirelson bound n!, classical bounds, walker game."""

__version__ = "0.1.0"

from multibell.bellcore import (
    CorrelatorMatrix,
    OrthogonalBasis,
    bell_additive,
    bell_multiplicative,
    build_basis,
    norm_product_squared,
)

__all__ = [
    "CorrelatorMatrix",
    "OrthogonalBasis",
    "bell_additive",
    "bell_multiplicative",
    "build_basis",
    "norm_product_squared",
]
