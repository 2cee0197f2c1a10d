"""Quantum strategy that saturates |B_n| <= n!, plus moment-matrix checks.

Alice and Bob each hold one qubit of the Bell state (|00> + |11>)/sqrt(2) and
measure spin along unit directions.  For that state the correlator is
``c_ij = a_i . (R_y b_j)`` where ``R_y`` reflects through the x-z plane.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from multibell.bellcore import CorrelatorMatrix, OrthogonalBasis, build_basis

UNIT_TOL = 1e-12
HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-9

_FALLBACK_AXES = (np.array([0.0, 0.0, 1.0]), np.array([0.0, 1.0, 0.0]), np.array([1.0, 0.0, 0.0]))

PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)


def _as_direction(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise ValueError(f"direction must be a 3-vector, got shape {v.shape}")
    if abs(np.linalg.norm(v) - 1.0) > UNIT_TOL:
        raise ValueError(f"direction must be unit norm, got |v| = {np.linalg.norm(v)!r}")
    return v


def _as_directions(vs) -> np.ndarray:
    arr = np.asarray(vs, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError(f"expected an (n, 3) array of directions, got shape {arr.shape}")
    norms = np.linalg.norm(arr, axis=1)
    if np.any(np.abs(norms - 1.0) > UNIT_TOL):
        raise ValueError("all measurement directions must be unit norm")
    return arr


def bloch_state(r) -> np.ndarray:
    """Validate a Bloch vector for Alice's reduced state."""
    r = np.asarray(r, dtype=float)
    if r.shape != (3,):
        raise ValueError(f"Bloch vector must have 3 components, got shape {r.shape}")
    if np.linalg.norm(r) > 1 + UNIT_TOL:
        raise ValueError("Bloch vector must satisfy |r| <= 1")
    return r


@dataclass(frozen=True)
class MeasurementSetup:
    """Measurement axes; row i of ``alice`` is Alice's i-th direction."""

    alice: np.ndarray
    bob: np.ndarray

    def __post_init__(self):
        alice = _as_directions(self.alice)
        bob = _as_directions(self.bob)
        if alice.shape != bob.shape:
            raise ValueError(f"Alice has {len(alice)} settings but Bob has {len(bob)}")
        object.__setattr__(self, "alice", alice)
        object.__setattr__(self, "bob", bob)

    @property
    def n(self) -> int:
        return self.alice.shape[0]


@dataclass(frozen=True)
class MomentMatrix:
    """Alice's second-moment matrix R_A = V_A^T V_A + i T_A."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        _check_hermitian(m)
        object.__setattr__(self, "matrix", m)

    @property
    def gram(self) -> np.ndarray:
        return self.matrix.real

    @property
    def antisymmetric(self) -> np.ndarray:
        return self.matrix.imag


def _check_hermitian(m: np.ndarray) -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"matrix must be square, got shape {m.shape}")
    if not np.allclose(m, m.conj().T, rtol=0.0, atol=HERMITIAN_TOL):
        raise ValueError("matrix is not Hermitian")


def reflect_y(v) -> np.ndarray:
    """Flip the y component (reflection through the x-z plane)."""
    v = np.asarray(v, dtype=float)
    return v * np.array([1.0, -1.0, 1.0])


def construct_alice_directions(n: int) -> np.ndarray:
    """Canonical Alice axes: each new axis is orthogonal to the sum of the previous ones.

    a_1 = x.  For i >= 2 the first of z, y, x with a nonzero component
    orthogonal to the running sum is projected and normalized.  The result
    satisfies |V_A u_j| = |u_j| for the whole basis.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    first = np.array([1.0, 0.0, 0.0])
    dirs = [first]
    running = first.copy()
    for _ in range(1, n):
        norm = np.linalg.norm(running)
        if norm < 1e-12:
            nxt = np.array([1.0, 0.0, 0.0])
        else:
            s = running / norm
            for axis in _FALLBACK_AXES:
                p = axis - (axis @ s) * s
                if np.linalg.norm(p) > 1e-12:
                    nxt = p / np.linalg.norm(p)
                    break
        dirs.append(nxt)
        running = running + nxt
    return np.array(dirs)


def bob_directions(alice, basis: OrthogonalBasis) -> np.ndarray:
    """Bob's optimal axes b_j = R_y V_A u_j / |R_y V_A u_j|."""
    alice = _as_directions(alice)
    if alice.shape[0] != basis.n:
        raise ValueError(f"Alice has {alice.shape[0]} settings but basis has n={basis.n}")
    # row j of (basis @ alice) is V_A u_j
    combos = basis.matrix @ alice
    out = np.empty_like(combos)
    for j, w in enumerate(combos):
        w = reflect_y(w)
        norm = np.linalg.norm(w)
        if norm < 1e-12:
            raise ValueError(f"degenerate setup: V_A u_{j + 1} is the zero vector")
        out[j] = w / norm + 0.0  # no signed zeros in output
    return out


def saturating_setup(n: int, basis: OrthogonalBasis | None = None) -> MeasurementSetup:
    basis = basis or build_basis(n)
    alice = construct_alice_directions(n)
    return MeasurementSetup(alice, bob_directions(alice, basis))


def correlators_epr(setup: MeasurementSetup) -> CorrelatorMatrix:
    """c_ij = a_i . (R_y b_j) for the |beta_0> Bell state."""
    reflected = np.array([reflect_y(b) for b in setup.bob])
    c = setup.alice @ reflected.T
    return CorrelatorMatrix(np.clip(c, -1.0, 1.0))


def moment_matrix(alice, state) -> MomentMatrix:
    """(R_A)_ik = a_i . a_k + i (a_i x a_k) . r."""
    alice = _as_directions(alice)
    r = bloch_state(state)
    gram = alice @ alice.T
    cross = np.cross(alice[:, None, :], alice[None, :, :])
    return MomentMatrix(gram + 1j * (cross @ r))


def schur_gap(R, c_j) -> float:
    """Smallest eigenvalue of R - c_j c_j^T; nonnegative for physical data."""
    m = R.matrix if isinstance(R, MomentMatrix) else np.asarray(R, dtype=complex)
    _check_hermitian(m)
    c = np.asarray(c_j, dtype=float)
    if c.shape != (m.shape[0],):
        raise ValueError(f"column has shape {c.shape}, expected ({m.shape[0]},)")
    return float(np.linalg.eigvalsh(m - np.outer(c, c))[0])


def is_psd_gap(gap: float) -> bool:
    return gap >= -PSD_TOL


def quadratic_sum(R, basis: OrthogonalBasis) -> float:
    """sum_j uhat_j^T R uhat_j over the normalized basis."""
    m = R.matrix if isinstance(R, MomentMatrix) else np.asarray(R, dtype=complex)
    _check_hermitian(m)
    if m.shape[0] != basis.n:
        raise ValueError(f"matrix is {m.shape[0]}x{m.shape[0]}, basis has n={basis.n}")
    if not np.allclose(np.diag(m), 1.0, rtol=0.0, atol=1e-12):
        raise ValueError("matrix must have unit diagonal")
    uh = basis.normalized
    return float(np.einsum("jl,lk,jk->", uh, m, uh).real)


# Density-matrix route.  Used as an independent check on correlators_epr and
# to generate physical (state, directions) pairs with a nonzero Bloch vector.


def bell_state_density() -> np.ndarray:
    psi = np.array([1.0, 0.0, 0.0, 1.0], dtype=complex) / np.sqrt(2.0)
    return np.outer(psi, psi.conj())


def spin_operator(direction) -> np.ndarray:
    return np.einsum("k,kab->ab", np.asarray(direction, dtype=float), PAULI)


def state_correlators(rho: np.ndarray, setup: MeasurementSetup) -> np.ndarray:
    """tr[rho (a_i.sigma) x (b_j.sigma)] for an arbitrary two-qubit state."""
    rho = np.asarray(rho, dtype=complex)
    n = setup.n
    c = np.empty((n, n))
    for i, a in enumerate(setup.alice):
        A = spin_operator(a)
        for j, b in enumerate(setup.bob):
            c[i, j] = np.trace(rho @ np.kron(A, spin_operator(b))).real
    return c


def reduced_bloch(rho: np.ndarray) -> np.ndarray:
    """Bloch vector of Alice's (first qubit's) reduced state."""
    rho_a = np.einsum("ajbj->ab", np.asarray(rho, dtype=complex).reshape(2, 2, 2, 2))
    return np.array([np.trace(rho_a @ s).real for s in PAULI])


def random_directions(n: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def random_two_qubit_state(rng: np.random.Generator, rank: int = 1) -> np.ndarray:
    """Random density matrix of the given rank (rank 1: Haar-random pure state)."""
    g = rng.normal(size=(4, rank)) + 1j * rng.normal(size=(4, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real
