"""Numerical property suite backing ``multibell verify``."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from multibell import quantum
from multibell.bellcore import bell_multiplicative, build_basis, norm_product_squared
from multibell.classical import (
    RATIO_LIMIT,
    _eval_P_exact,
    fd_log,
    fd_strategy,
    fd_value,
    fd_value_by_product,
    laplacian_numeric,
    ratio_fd_to_factorial,
)
from multibell.robustness import critical_efficiency, delta_additive, delta_multiplicative


@dataclass
class CheckResult:
    name: str
    tolerance: str
    observed: str
    passed: bool

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: observed {self.observed} (tolerance {self.tolerance})"


def check_basis(n_max: int = 12) -> CheckResult:
    bad = []
    for n in range(1, n_max + 1):
        basis = build_basis(n)
        for a in range(n):
            for b in range(a + 1, n):
                if sum(x * y for x, y in zip(basis.vectors[a], basis.vectors[b])) != 0:
                    bad.append(n)
        if norm_product_squared(basis) != math.factorial(n) ** 2:
            bad.append(n)
    return CheckResult(
        f"basis orthogonality and norm product = (n!)^2, n=1..{n_max}",
        "exact",
        f"{len(set(bad))} failing n",
        not bad,
    )


def check_saturation(n_max: int = 8, rtol: float = 1e-9) -> CheckResult:
    """B_n = n! for the constructed strategy, with correlators from two routes."""
    worst = 0.0
    rho = quantum.bell_state_density()
    for n in range(2, n_max + 1):
        basis = build_basis(n)
        setup = quantum.saturating_setup(n, basis)
        target = math.factorial(n)
        via_epr = bell_multiplicative(quantum.correlators_epr(setup), basis)
        via_state = bell_multiplicative(quantum.state_correlators(rho, setup), basis)
        worst = max(worst, abs(via_epr - target) / target, abs(via_state - target) / target)
    return CheckResult(f"Tsirelson saturation B_n = n!, n=2..{n_max}", f"rel {rtol:g}", f"max rel err {worst:.3e}", worst <= rtol)


def random_unit_diagonal_hermitian(n: int, rng: np.random.Generator) -> np.ndarray:
    m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    m = (m + m.conj().T) / 2
    np.fill_diagonal(m, 1.0)
    return m


def check_quadratic_sum(trials: int, rng: np.random.Generator, n_max: int = 16, atol: float = 1e-9) -> CheckResult:
    worst = 0.0
    for t in range(trials):
        n = 1 + t % n_max
        value = quantum.quadratic_sum(random_unit_diagonal_hermitian(n, rng), build_basis(n))
        worst = max(worst, abs(value - n))
    return CheckResult(f"sum_j uhat_j^T R uhat_j = n on {trials} Hermitian matrices, n<={n_max}", f"abs {atol:g}", f"max dev {worst:.3e}", worst <= atol)


def random_physical_setup(n: int, rng: np.random.Generator):
    """Random two-qubit state and directions; returns (R_A, correlators)."""
    rank = int(rng.integers(1, 5))
    rho = quantum.random_two_qubit_state(rng, rank)
    setup = quantum.MeasurementSetup(quantum.random_directions(n, rng), quantum.random_directions(n, rng))
    R = quantum.moment_matrix(setup.alice, np.clip(quantum.reduced_bloch(rho), -1, 1))
    return R, quantum.state_correlators(rho, setup)


def check_schur(trials: int, rng: np.random.Generator, n_max: int = 8) -> CheckResult:
    worst = math.inf
    for t in range(trials):
        n = 1 + t % n_max
        R, c = random_physical_setup(n, rng)
        for j in range(n):
            worst = min(worst, quantum.schur_gap(R, c[:, j]))
    return CheckResult(
        f"R_A - c_j c_j^T PSD on {trials} random setups, n<={n_max}",
        f">= {-quantum.PSD_TOL:g}",
        f"min eigenvalue {worst:.3e}",
        quantum.is_psd_gap(worst),
    )


def check_harmonic(points: int, rng: np.random.Generator, n_max: int = 6, h: float = 1e-3) -> list[CheckResult]:
    worst = 0.0
    worst_n2 = 0.0
    for n in range(2, n_max + 1):
        for _ in range(points):
            mu = rng.uniform(-0.99, 0.99, size=n)
            lap = abs(laplacian_numeric(mu, h))
            worst = max(worst, lap)
            if n == 2:
                worst_n2 = max(worst_n2, lap)
    return [
        CheckResult(f"Laplacian of P_n, n=2..{n_max}, h={h:g}", "abs 1e-4", f"max |lap| {worst:.3e}", worst <= 1e-4),
        CheckResult("Laplacian of P_2 is exactly zero", "abs 1e-10", f"max |lap| {worst_n2:.3e}", worst_n2 <= 1e-10),
    ]


def check_fd(n_max: int = 300) -> list[CheckResult]:
    mismatches = 0
    for n in range(1, 41):
        exact = fd_value(n)
        strategy_value = abs(_eval_P_exact([Fraction(m) for m in fd_strategy(n).mu]))
        if not (exact == fd_value_by_product(n) == strategy_value):
            mismatches += 1
    worst_log = 0.0
    for n in range(4, n_max + 1):
        worst_log = max(worst_log, abs(fd_log(n) - math.log(fd_value(n))))
    worst_ratio = 0.0
    for n in range(4, 21):
        exact = Fraction(fd_value(n), math.factorial(n))
        worst_ratio = max(worst_ratio, abs(ratio_fd_to_factorial(n) / float(exact) - 1))
    far = abs(ratio_fd_to_factorial(10**4) - RATIO_LIMIT)
    return [
        CheckResult("FD_n closed form = product form = |P_n(FD strategy)|, n=1..40", "exact", f"{mismatches} mismatches", mismatches == 0),
        CheckResult(f"log FD_n agrees with exact integer, n=4..{n_max}", "abs 1e-9", f"max dev {worst_log:.3e}", worst_log <= 1e-9),
        CheckResult("FD_n/n! log-domain vs exact rational, n=4..20", "rel 1e-9", f"max rel err {worst_ratio:.3e}", worst_ratio <= 1e-9),
        CheckResult("FD_n/n! at n=10^4 near sqrt(pi/2e)", "abs 0.02", f"|diff| {far:.4f}", far <= 0.02),
    ]


def check_robustness() -> list[CheckResult]:
    root = abs(float(delta_additive(critical_efficiency())))
    eta = np.arange(830, 1001) / 1000.0
    margin = float(np.min(delta_multiplicative(eta) - delta_additive(eta)))
    return [
        CheckResult("CHSH margin vanishes at eta = 4/(2 sqrt2 + 2)", "abs 1e-12", f"{root:.3e}", root <= 1e-12),
        CheckResult("B_2 margin exceeds CHSH margin on (0.829, 1]", "> 0", f"min difference {margin:.3e}", margin > 0),
    ]


def run_verification(n_max: int = 8, trials: int = 1000, seed: int = 0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    results = [check_basis(), check_saturation(n_max)]
    results.append(check_quadratic_sum(trials, rng))
    results.append(check_schur(trials, rng, n_max))
    results.extend(check_harmonic(max(1, trials // 10), rng))
    results.extend(check_fd())
    results.extend(check_robustness())
    return results
