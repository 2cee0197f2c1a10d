"""Monte Carlo simulator for the volume-maximization walker game.

Each round the referee hands Alice setting i and Bob setting j.  They answer
a, b in {-1, +1} and the walker moves by ``a*b*u_j(i) * u_j`` (Alice's
vectors are the standard basis).  The accumulated signed projection on each
of Bob's directions, W_j, gives the estimator

    B_hat = prod_j (n / T_j) * W_j

which is unbiased when the per-direction round counts T_j are fixed
(stratified scheduling).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np

from multibell.bellcore import OrthogonalBasis, bell_multiplicative, build_basis
from multibell.classical import LocalStrategy, fd_strategy
from multibell.quantum import MeasurementSetup, correlators_epr, saturating_setup

SCHEDULINGS = ("stratified", "uniform")
NORMALIZATION_NOTE = {
    "stratified": "B_hat = prod_j (n/T_j) W_j with T_j = T/n fixed per direction",
    "uniform": "B_hat = prod_j (n^2/T) W_j with uniformly random settings",
}


@dataclass(frozen=True)
class ClassicalStrategy:
    """Independent local samplers: Alice plays +1 w.p. (1+mu_i)/2, Bob plays fixed signs."""

    local: LocalStrategy
    kind: str = "classical-explicit"

    @property
    def n(self) -> int:
        return self.local.n

    def correlators(self) -> np.ndarray:
        return self.local.correlators()

    def sample(self, i: np.ndarray, j: np.ndarray, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        mu = np.asarray(self.local.mu)
        signs = np.asarray(self.local.bob_signs, dtype=np.int8)
        a = np.where(rng.random(i.shape) < (1.0 + mu[i]) / 2.0, 1, -1).astype(np.int8)
        return a, signs[j]


@dataclass(frozen=True)
class QuantumStrategy:
    """Measurements on a shared |beta_0> pair; P(a, b | i, j) = (1 + a b c_ij) / 4."""

    setup: MeasurementSetup
    kind: str = "quantum"

    @property
    def n(self) -> int:
        return self.setup.n

    def correlators(self) -> np.ndarray:
        return correlators_epr(self.setup).entries

    def sample(self, i: np.ndarray, j: np.ndarray, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        c = self.correlators()
        a = np.where(rng.random(i.shape) < 0.5, 1, -1).astype(np.int8)
        agree = rng.random(i.shape) < (1.0 + c[i, j]) / 2.0
        return a, np.where(agree, a, -a).astype(np.int8)


def classical_explicit(mu, bob_signs) -> ClassicalStrategy:
    return ClassicalStrategy(LocalStrategy(tuple(mu), tuple(bob_signs)))


def classical_fd(n: int) -> ClassicalStrategy:
    return ClassicalStrategy(fd_strategy(n), kind="classical-fd")


def classical_opt_n2() -> ClassicalStrategy:
    """a_1 = b_1 = b_2 = 1 and E[a_2] = 0: reaches the classical bound B_2 = 1."""
    return ClassicalStrategy(LocalStrategy((1.0, 0.0), (1, 1)), kind="classical-opt-n2")


def quantum(n: int, setup: MeasurementSetup | None = None) -> QuantumStrategy:
    return QuantumStrategy(setup if setup is not None else saturating_setup(n))


Strategy = ClassicalStrategy | QuantumStrategy


@dataclass(frozen=True)
class GameConfig:
    n: int
    rounds: int
    trials: int
    seed: int
    strategy: Strategy
    scheduling: str = "stratified"

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.rounds < 0:
            raise ValueError(f"rounds must be nonnegative, got {self.rounds}")
        if self.trials < 1:
            raise ValueError(f"trials must be positive, got {self.trials}")
        if self.scheduling not in SCHEDULINGS:
            raise ValueError(f"scheduling must be one of {SCHEDULINGS}, got {self.scheduling!r}")
        if self.scheduling == "stratified" and self.rounds % self.n:
            raise ValueError(f"stratified scheduling needs rounds divisible by n={self.n}, got {self.rounds}")
        if self.strategy.n != self.n:
            raise ValueError(f"strategy is for n={self.strategy.n} but the game has n={self.n}")
        if self.strategy.kind == "classical-opt-n2" and self.n != 2:
            raise ValueError("classical-opt-n2 is only defined for n=2")


class RoundRecord(NamedTuple):
    round: int
    i: int
    j: int
    a: int
    b: int
    step: np.ndarray


@dataclass
class TrialRecord:
    """Per-round inputs and outputs of one trial; settings are 1-based."""

    i: np.ndarray
    j: np.ndarray
    a: np.ndarray
    b: np.ndarray


@dataclass
class GameRun:
    config: GameConfig
    basis: OrthogonalBasis
    per_direction: np.ndarray  # (trials, n) accumulators W_j
    estimates: np.ndarray  # per-trial B_hat
    records: list[TrialRecord] | None = None
    area: np.ndarray | None = None  # per-trial S_T, n = 2 only
    analytic_target: float = field(default=float("nan"))

    @property
    def defined(self) -> bool:
        return self.config.rounds > 0

    @property
    def estimate(self) -> float:
        return float(np.mean(self.estimates)) if self.defined else float("nan")

    @property
    def stderr(self) -> float:
        return _stderr(self.estimates) if self.defined else float("nan")

    @property
    def area_mean(self) -> float | None:
        if self.area is None:
            return None
        return float(np.mean(self.area)) if self.defined else float("nan")

    @property
    def area_stderr(self) -> float | None:
        if self.area is None:
            return None
        return _stderr(self.area) if self.defined else float("nan")

    def steps(self, trial: int) -> np.ndarray:
        rec = self._record(trial)
        u = self.basis.matrix
        i0, j0 = rec.i.astype(np.intp) - 1, rec.j.astype(np.intp) - 1
        scale = rec.a.astype(float) * rec.b * u[j0, i0]
        return scale[:, None] * u[j0]

    def positions(self, trial: int) -> np.ndarray:
        """Cumulative walker position after each round, shape (rounds, n)."""
        return np.cumsum(self.steps(trial), axis=0)

    def round_records(self, trial: int) -> Iterator[RoundRecord]:
        rec = self._record(trial)
        for tau, s in enumerate(self.steps(trial), start=1):
            yield RoundRecord(tau, int(rec.i[tau - 1]), int(rec.j[tau - 1]), int(rec.a[tau - 1]), int(rec.b[tau - 1]), s)

    def _record(self, trial: int) -> TrialRecord:
        if self.records is None:
            raise ValueError("paths were not recorded for this run")
        return self.records[trial]


def _stderr(values: np.ndarray) -> float:
    if len(values) < 2:
        return float("nan")
    return float(np.std(values, ddof=1) / np.sqrt(len(values)))


def step(i: int, j: int, a: int, b: int, basis: OrthogonalBasis) -> np.ndarray:
    """Walker displacement a*b*(e_i . u_j)*u_j for 1-based settings i, j."""
    n = basis.n
    if not (1 <= i <= n and 1 <= j <= n):
        raise ValueError(f"settings must lie in 1..{n}, got i={i}, j={j}")
    if a not in (-1, 1) or b not in (-1, 1):
        raise ValueError(f"outputs must be +1 or -1, got a={a}, b={b}")
    u = basis.matrix[j - 1]
    return a * b * u[i - 1] * u


def sample_outputs(strategy: Strategy, i: int, j: int, rng: np.random.Generator) -> tuple[int, int]:
    """Draw one (a, b) pair for 1-based settings i, j."""
    n = strategy.n
    if not (1 <= i <= n and 1 <= j <= n):
        raise ValueError(f"settings must lie in 1..{n}, got i={i}, j={j}")
    a, b = strategy.sample(np.array([i - 1]), np.array([j - 1]), rng)
    return int(a[0]), int(b[0])


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent Philox stream keyed by (seed, trial)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed & (2**64 - 1), trial])))


def _schedule(config: GameConfig, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    n, T = config.n, config.rounds
    if config.scheduling == "stratified":
        j = rng.permutation(np.repeat(np.arange(n), T // n))
    else:
        j = rng.integers(0, n, size=T)
    i = rng.integers(0, n, size=T)
    return i, j


def _play_trial(config: GameConfig, basis: OrthogonalBasis, trial: int, record: bool):
    rng = trial_rng(config.seed, trial)
    i, j = _schedule(config, rng)
    a, b = config.strategy.sample(i, j, rng)
    contrib = a.astype(float) * b * basis.matrix[j, i]
    w = np.bincount(j, weights=contrib, minlength=config.n)
    rec = None
    if record:
        dtype = np.int16 if config.n < 2**15 else np.int64
        rec = TrialRecord((i + 1).astype(dtype), (j + 1).astype(dtype), a, b)
    return w, rec


def run_game(config: GameConfig, record_paths: bool = True, workers: int = 1) -> GameRun:
    """Play ``config.trials`` independent games of ``config.rounds`` rounds each."""
    basis = build_basis(config.n)
    trials = range(config.trials)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda t: _play_trial(config, basis, t, record_paths), trials))
    else:
        results = [_play_trial(config, basis, t, record_paths) for t in trials]

    w = np.array([r[0] for r in results]).reshape(config.trials, config.n)
    T, n = config.rounds, config.n
    if T > 0:
        estimates = np.prod(w * (n * n / T), axis=1)
    else:
        estimates = np.full(config.trials, np.nan)
    area = None
    if n == 2:
        # rectangle area in Bob's coordinates, normalized by T^2
        area = w[:, 0] * w[:, 1] / T**2 if T > 0 else np.full(config.trials, np.nan)
    return GameRun(
        config=config,
        basis=basis,
        per_direction=w,
        estimates=estimates,
        records=[r[1] for r in results] if record_paths else None,
        area=area,
        analytic_target=bell_multiplicative(config.strategy.correlators(), basis),
    )
