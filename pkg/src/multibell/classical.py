"""Local-hidden-variable side: the harmonic payoff P_n and its maximization.

With Bob deterministic, B_n reduces to a polynomial in Alice's one-point
correlators mu_i = E[a | i]:

    P_n(mu) = (sum_i mu_i) * prod_{j<n} (mu_1 + ... + mu_j - j mu_{j+1})

which is harmonic, so its extremes over [-1, 1]^n sit on the boundary.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from numpy.polynomial import polynomial as npoly

from multibell.bellcore import build_basis

DEFAULT_FACE_CAP = 6
EXACT_LIMIT = 300
LOCAL_ASCENT_TOL = 1e-12
TIE_TOL = 1e-12


@dataclass(frozen=True)
class LocalStrategy:
    mu: tuple[float, ...]
    bob_signs: tuple[int, ...]

    def __post_init__(self):
        mu = tuple(float(m) for m in self.mu)
        signs = tuple(int(b) for b in self.bob_signs)
        if len(mu) != len(signs):
            raise ValueError(f"mu has {len(mu)} entries but bob_signs has {len(signs)}")
        if any(abs(m) > 1 for m in mu):
            raise ValueError("one-point correlators must satisfy |mu_i| <= 1")
        if any(b not in (-1, 1) for b in signs):
            raise ValueError("Bob's signs must be +1 or -1")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "bob_signs", signs)

    @property
    def n(self) -> int:
        return len(self.mu)

    def correlators(self) -> np.ndarray:
        """c_ij = mu_i * b_j (independent local choices)."""
        return np.outer(self.mu, self.bob_signs)


@dataclass(frozen=True)
class FDParameters:
    n: int
    cutoff: int

    def __post_init__(self):
        if self.cutoff < 0 or self.cutoff % 2:
            raise ValueError(f"cutoff must be a nonnegative even integer, got {self.cutoff}")
        # cutoff <= n - sqrt(n) < cutoff + 2, checked in integers
        gap = self.n - self.cutoff
        if gap < 0 or gap * gap < self.n or (gap >= 2 and (gap - 2) ** 2 >= self.n):
            raise ValueError(f"cutoff {self.cutoff} is not the largest even integer <= n - sqrt(n) for n={self.n}")


def eval_P(mu) -> float | np.ndarray:
    """P_n at mu; accepts a single point of shape (n,) or a batch (..., n)."""
    mu = np.asarray(mu, dtype=float)
    if mu.ndim == 0 or mu.shape[-1] == 0:
        raise ValueError("eval_P needs at least one coordinate")
    basis = build_basis(mu.shape[-1])
    value = np.prod(mu @ basis.matrix.T, axis=-1)
    return float(value) if value.ndim == 0 else value


def _eval_P_exact(mu: list[Fraction]) -> Fraction:
    value = sum(mu, Fraction(0))
    partial = Fraction(0)
    for j in range(1, len(mu)):
        partial += mu[j - 1]
        value *= partial - j * mu[j]
    return value


def laplacian_numeric(mu, h: float = 1e-3) -> float:
    """Central-difference Laplacian of P_n.

    The stencil is evaluated in exact rational arithmetic, so the only error
    left is the O(h^2) truncation term.
    """
    mu = [float(m) for m in np.asarray(mu, dtype=float).ravel()]
    if not mu:
        raise ValueError("laplacian_numeric needs at least one coordinate")
    if h <= 0:
        raise ValueError(f"step must be positive, got {h}")
    if any(abs(m) >= 1 - h for m in mu):
        raise ValueError(f"step h={h} too large: every |mu_i| must be < 1 - h")
    x = [Fraction(m) for m in mu]
    hh = Fraction(h)
    center = _eval_P_exact(x)
    total = Fraction(0)
    for k in range(len(x)):
        up = list(x)
        up[k] += hh
        down = list(x)
        down[k] -= hh
        total += _eval_P_exact(up) - 2 * center + _eval_P_exact(down)
    return float(total / (hh * hh))


def fd_cutoff(n: int) -> FDParameters:
    """Largest even integer no greater than n - sqrt(n)."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    root = math.isqrt(n)
    if root * root < n:
        root += 1
    floor = n - root
    return FDParameters(n, floor - floor % 2)


def fd_strategy(n: int) -> LocalStrategy:
    """Alice alternates -1, +1, ... up to the cutoff, then plays +1; Bob always +1."""
    ic = fd_cutoff(n).cutoff
    mu = [(-1.0) ** i if i <= ic else 1.0 for i in range(1, n + 1)]
    return LocalStrategy(tuple(mu), (1,) * n)


def fd_value(n: int) -> int:
    """FD_n = 2^ic [(ic/2)!]^2 ic^(n-ic-1) (n-ic), exact.  0**0 is taken as 1."""
    ic = fd_cutoff(n).cutoff
    return 2**ic * math.factorial(ic // 2) ** 2 * ic ** (n - ic - 1) * (n - ic)


def fd_value_by_product(n: int) -> int:
    """FD_n as (2*2*4*4*...*ic*ic) * ic^(n-ic-1) * (n-ic); cross-check for fd_value."""
    ic = fd_cutoff(n).cutoff
    evens = math.prod(k * k for k in range(2, ic + 1, 2))
    return evens * ic ** (n - ic - 1) * (n - ic)


def log_factorial(n: int) -> float:
    return math.lgamma(n + 1)


def fd_log(n: int) -> float:
    """Natural log of FD_n without forming the integer."""
    ic = fd_cutoff(n).cutoff
    if ic == 0 and n - 1 > 0:
        raise ValueError(f"FD_{n} = 0 has no logarithm")
    out = ic * math.log(2) + 2 * math.lgamma(ic // 2 + 1) + math.log(n - ic)
    if n - ic - 1 > 0:
        out += (n - ic - 1) * math.log(ic)
    return out


def ratio_fd_to_factorial(n: int) -> float:
    """FD_n / n!, evaluated in the log domain."""
    if fd_cutoff(n).cutoff == 0 and n > 1:
        raise ValueError(f"ratio undefined for n={n}: FD_{n} = 0")
    return math.exp(fd_log(n) - log_factorial(n))


RATIO_LIMIT = math.sqrt(math.pi / (2 * math.e))


def _maximize_along(mu: np.ndarray, k: int, basis_matrix: np.ndarray) -> tuple[float, float]:
    """Exact maximizer of |P| over mu_k in [-1, 1] with the other coordinates fixed."""
    fixed = mu.copy()
    fixed[k] = 0.0
    offsets = basis_matrix @ fixed
    slopes = basis_matrix[:, k]
    poly = np.array([1.0])
    for a, b in zip(offsets, slopes):
        poly = npoly.polymul(poly, [a, b])
    candidates = [-1.0, 1.0]
    deriv = npoly.polyder(poly)
    if deriv.size and np.any(deriv != 0):
        for r in npoly.polyroots(deriv) if deriv.size > 1 else []:
            if abs(r.imag) < 1e-9 and -1.0 <= r.real <= 1.0:
                candidates.append(float(r.real))
    values = np.abs(npoly.polyval(np.array(candidates), poly))
    best = int(np.argmax(values))
    return candidates[best], float(values[best])


def _better(value: float, point: np.ndarray, best_value: float, best_point: np.ndarray | None) -> bool:
    if best_point is None or value > best_value + TIE_TOL:
        return True
    if value < best_value - TIE_TOL:
        return False
    return tuple(point) < tuple(best_point)


def _local_ascent(mu: np.ndarray, basis_matrix: np.ndarray, refinements: int) -> tuple[np.ndarray, float]:
    mu = mu.copy()
    value = abs(float(np.prod(basis_matrix @ mu)))
    for _ in range(refinements):
        start = value
        for k in range(len(mu)):
            t, v = _maximize_along(mu, k, basis_matrix)
            if v > value:
                mu[k] = t
                value = v
        if value - start < LOCAL_ASCENT_TOL:
            break
    return mu, value


def _best_on_face(n: int, k: int, sign: float, grid: np.ndarray, basis_matrix: np.ndarray) -> np.ndarray:
    free = n - 1
    best_point, best_value = None, -np.inf
    # sweep the first free coordinate in Python, vectorize the rest
    heads = grid if free >= 1 else [None]
    for head in heads:
        rest = free - 1 if free >= 1 else 0
        tail = np.array(list(itertools.product(grid, repeat=rest))) if rest else np.zeros((1, 0))
        pts = np.empty((len(tail), n))
        cols = [c for c in range(n) if c != k]
        pts[:, k] = sign
        if free >= 1:
            pts[:, cols[0]] = head
            pts[:, cols[1:]] = tail
        vals = np.abs(np.prod(pts @ basis_matrix.T, axis=1))
        i = int(np.argmax(vals))
        if _better(float(vals[i]), pts[i], best_value, best_point):
            best_point, best_value = pts[i].copy(), float(vals[i])
    return best_point


def maximize_P(n: int, resolution: int = 11, refinements: int = 200, cap: int = DEFAULT_FACE_CAP) -> tuple[np.ndarray, float]:
    """Search the hypercube faces for the largest |P_n|.

    Each of the 2n faces (one coordinate pinned to +-1) is grid-searched at
    ``resolution`` points per free axis; the best grid point of each face is
    then polished by exact coordinate-wise ascent.  The returned value is a
    lower bound on max |P_n|.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if n > cap:
        raise ValueError(
            f"exhaustive face search is capped at n={cap} (got n={n}); "
            f"use fd_value({n}) as a cheaper lower bound"
        )
    if resolution < 2:
        raise ValueError("resolution must be at least 2 so the grid reaches the face edges")
    grid = np.linspace(-1.0, 1.0, resolution)
    basis_matrix = build_basis(n).matrix
    best_point, best_value = None, -np.inf
    for k in range(n):
        for sign in (-1.0, 1.0):
            start = _best_on_face(n, k, sign, grid, basis_matrix)
            point, value = _local_ascent(start, basis_matrix, refinements)
            point = point + 0.0  # normalize -0.0
            if _better(value, point, best_value, best_point):
                best_point, best_value = point, value
    return best_point, best_value
