"""Independent reference computations used only by the tests."""

import itertools
import math

import numpy as np


def bell_expanded(c):
    """Literal (c_1n + ... + c_nn) * prod_j (c_1j + ... + c_jj - j c_{j+1,j})."""
    n = len(c)
    value = sum(c[i][n - 1] for i in range(n))
    for j in range(1, n):
        value *= sum(c[i][j - 1] for i in range(j)) - j * c[j][j - 1]
    return value


def P_literal(mu):
    n = len(mu)
    value = sum(mu)
    for j in range(1, n):
        value *= sum(mu[:j]) - j * mu[j]
    return value


def raw_basis(n):
    """u_j(l) = 1 for l <= j, -j for l = j+1, 0 beyond; u_n = ones (1-based)."""
    vecs = []
    for j in range(1, n + 1):
        if j == n:
            vecs.append([1] * n)
        else:
            vecs.append([1 if l <= j else (-j if l == j + 1 else 0) for l in range(1, n + 1)])
    return vecs


def brute_force_face_max(n, resolution):
    """Largest |P_n| over all vertices and a dense grid on every face."""
    best = 0.0
    for v in itertools.product((-1.0, 1.0), repeat=n):
        best = max(best, abs(P_literal(list(v))))
    grid = np.linspace(-1, 1, resolution)
    for k in range(n):
        for s in (-1.0, 1.0):
            for rest in itertools.product(grid, repeat=n - 1):
                mu = list(rest[:k]) + [s] + list(rest[k:])
                best = max(best, abs(P_literal(mu)))
    return best


def eig2_min(m):
    """Smaller eigenvalue of a real symmetric 2x2 matrix in closed form."""
    a, b, d = m[0][0], m[0][1], m[1][1]
    return (a + d) / 2 - math.sqrt(((a - d) / 2) ** 2 + b * b)


def outcome_law(rho, a_dir, b_dir):
    """P(a, b) = tr[rho (I + a A)/2 x (I + b B)/2] for spin measurements."""
    pauli = [np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.array([[1, 0], [0, -1]])]
    A = sum(x * p for x, p in zip(a_dir, pauli))
    B = sum(x * p for x, p in zip(b_dir, pauli))
    eye = np.eye(2)
    law = {}
    for a in (1, -1):
        for b in (1, -1):
            proj = np.kron((eye + a * A) / 2, (eye + b * B) / 2)
            law[(a, b)] = float(np.trace(rho @ proj).real)
    return law
