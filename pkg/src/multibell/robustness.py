"""Detection-efficiency robustness of the CHSH and multiplicative n=2 parameters."""

import math

import numpy as np

TSIRELSON_CHSH = 2 * math.sqrt(2)
TSIRELSON_B2 = 2.0


def _check_eta(eta):
    eta = np.asarray(eta, dtype=float)
    if np.any((eta <= 0) | (eta > 1)):
        raise ValueError("detector efficiency must lie in (0, 1]")
    return eta


def delta_additive(eta):
    """2*sqrt(2) - (4/eta - 2): room left for CHSH violations at efficiency eta."""
    eta = _check_eta(eta)
    return TSIRELSON_CHSH - (4.0 / eta - 2.0)


def delta_multiplicative(eta):
    """2 - (2/eta - 1)^2: the same margin for B_2."""
    eta = _check_eta(eta)
    return TSIRELSON_B2 - (2.0 / eta - 1.0) ** 2


def critical_efficiency() -> float:
    """Efficiency at which the CHSH margin closes, 4 / (2*sqrt(2) + 2)."""
    return 4.0 / (TSIRELSON_CHSH + 2.0)


def robustness_curve(eta_min: float, eta_max: float, steps: int) -> np.ndarray:
    """Rows (eta, delta_additive, delta_multiplicative) on an evenly spaced grid."""
    if not 0 < eta_min <= eta_max <= 1:
        raise ValueError(f"need 0 < eta_min <= eta_max <= 1, got [{eta_min}, {eta_max}]")
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    if steps == 1 and eta_min != eta_max:
        raise ValueError("a single step needs eta_min == eta_max")
    eta = np.linspace(eta_min, eta_max, steps)
    return np.column_stack([eta, delta_additive(eta), delta_multiplicative(eta)])
