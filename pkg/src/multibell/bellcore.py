"""Orthogonal basis and the multiplicative / additive Bell parameters.

The basis vectors are the integer eigenvectors of the constant-off-diagonal
matrix ``[[1, r, ...], [r, 1, ...], ...]``.  Everything here is exact in
integer arithmetic where possible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

CORRELATOR_TOL = 1e-9


@dataclass(frozen=True)
class OrthogonalBasis:
    n: int
    vectors: tuple[tuple[int, ...], ...]

    @cached_property
    def matrix(self) -> np.ndarray:
        """Basis as an (n, n) float array, row j = u_{j+1}."""
        return np.array(self.vectors, dtype=float)

    def norms_squared(self) -> list[int]:
        return [sum(x * x for x in u) for u in self.vectors]

    @cached_property
    def normalized(self) -> np.ndarray:
        return self.matrix / np.sqrt(np.array(self.norms_squared(), dtype=float))[:, None]


def build_basis(n: int) -> OrthogonalBasis:
    """Return u_1..u_n with u_j = (1,...,1, -j, 0,...,0) for j < n and u_n = all ones."""
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"basis dimension must be a positive integer, got {n!r}")
    n = int(n)
    vectors = []
    for j in range(1, n):
        vectors.append(tuple([1] * j + [-j] + [0] * (n - j - 1)))
    vectors.append(tuple([1] * n))
    return OrthogonalBasis(n, tuple(vectors))


def norm_product_squared(basis: OrthogonalBasis) -> int:
    return math.prod(basis.norms_squared())


@dataclass(frozen=True)
class CorrelatorMatrix:
    """Two-point correlators; row i is Alice's setting, column j is Bob's."""

    entries: np.ndarray

    def __post_init__(self):
        c = np.array(self.entries, dtype=float)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ValueError(f"correlator matrix must be square, got shape {c.shape}")
        if np.any(np.abs(c) > 1 + CORRELATOR_TOL):
            raise ValueError("correlators must lie in [-1, 1]")
        c.setflags(write=False)
        object.__setattr__(self, "entries", c)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def column(self, j: int) -> np.ndarray:
        return self.entries[:, j]


def _entries(C) -> np.ndarray:
    if isinstance(C, CorrelatorMatrix):
        return C.entries
    return CorrelatorMatrix(C).entries


def projections(C, basis: OrthogonalBasis) -> np.ndarray:
    """The n factors u_j . c_j."""
    c = _entries(C)
    if c.shape[0] != basis.n:
        raise ValueError(f"dimension mismatch: correlators are {c.shape[0]}x{c.shape[0]}, basis has n={basis.n}")
    return np.einsum("jl,lj->j", basis.matrix, c)


def bell_multiplicative(C, basis: OrthogonalBasis) -> float:
    """B_n = prod_j u_j . c_j with c_j the j-th column of C."""
    return float(np.prod(projections(C, basis)))


def bell_additive(C, basis: OrthogonalBasis) -> float:
    """B'_n = sum_j u_j . c_j; equals the CHSH expression for n = 2."""
    return float(np.sum(projections(C, basis)))
