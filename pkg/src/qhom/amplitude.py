"""Amplitude estimation with maximum likelihood post-processing.

An amplitude ``a = sin(theta)`` is the square root of the probability of
measuring a flag qubit in state 1 after a preparation circuit ``A``.
Applying the Grover operator ``m`` times before measuring turns that
probability into ``sin^2((2m+1) theta)``; ``theta`` is recovered from the
hit counts of several powers by maximising the joint likelihood.

Two ways of producing hit counts are provided.  ``run_experiments`` simulates
``Q^m A |0>`` gate by gate.  ``sample_amplified`` skips the Grover circuit and
uses the closed form above on the simulated probability of ``A|0>``; it is
what the larger computations use, and the two agree to round-off (see the
tests).  Both draw from the same per-power random streams, so for the same
seed and key they give identical counts.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .quantum import Circuit, Gate, simulate, probability_one

__all__ = [
    "AmplificationSchedule",
    "GroverSpec",
    "MLQAEResult",
    "CalibrationFit",
    "ExactEstimator",
    "MLQAEEstimator",
    "flag_entangler",
    "grover_operator",
    "rng_stream",
    "run_experiments",
    "sample_amplified",
    "mlqae",
    "mlqae_thetas",
    "required_amplifications",
    "calibration_circuit",
    "calibrate",
    "write_calibration_csv",
]

DEFAULT_C = 0.094
_LOG_FLOOR = 1e-15


@dataclass(frozen=True)
class AmplificationSchedule:
    """Grover powers (0, 1, 2, 4, ..., m_M), shots per power and base seed."""

    powers: tuple[int, ...]
    shots: int
    seed: int = 0

    def __post_init__(self):
        powers = tuple(int(m) for m in self.powers)
        if not powers or powers[0] != 0:
            raise ValueError("schedule must start with power 0")
        for i, m in enumerate(powers[1:]):
            if m != 2**i:
                raise ValueError(f"powers must be 0, 1, 2, 4, ...; got {powers}")
        if self.shots < 1:
            raise ValueError("shots must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        object.__setattr__(self, "powers", powers)

    @classmethod
    def exponential(cls, max_power: int, shots: int, seed: int = 0) -> "AmplificationSchedule":
        if max_power < 0 or (max_power and max_power & (max_power - 1)):
            raise ValueError(f"max_power must be 0 or a power of two, got {max_power}")
        powers = (0,) + tuple(2**i for i in range(max_power.bit_length()))
        return cls(powers, shots, seed)

    @property
    def max_power(self) -> int:
        return self.powers[-1]


@dataclass(frozen=True)
class GroverSpec:
    a_circuit: Circuit
    flag_qubit: int

    def __post_init__(self):
        if not 0 <= self.flag_qubit < self.a_circuit.n_qubits:
            raise ValueError("flag qubit outside the preparation circuit")


@dataclass(frozen=True)
class MLQAEResult:
    theta: float
    amplitude: float
    hit_counts: tuple[int, ...]
    schedule: AmplificationSchedule


def flag_entangler(k: int, n: int, flag_qubit: int | None = None) -> Circuit:
    """Flip the flag iff the ``n``-qubit register holds basis state ``k``."""
    flag = n if flag_qubit is None else flag_qubit
    if not 0 <= k < 2**n:
        raise ValueError(f"index {k} out of range for {n} qubits")
    if flag < n:
        raise ValueError("flag qubit must sit above the data register")
    bits = tuple((k >> q) & 1 for q in range(n))
    return Circuit(flag + 1, [Gate("X", (flag,), tuple(range(n)), ctrl_state=bits)])


def grover_operator(spec: GroverSpec) -> Circuit:
    """Q = A S0 A^dagger S_chi as a circuit (S_chi runs first)."""
    a = spec.a_circuit
    n = a.n_qubits
    s_chi = Gate("PhaseFlip", (spec.flag_qubit,), values=(1,))
    s_0 = Gate("PhaseFlip", tuple(range(n)), values=(0,) * n)
    return Circuit(n, (s_chi,) + a.inverse().gates + (s_0,) + a.gates)


def rng_stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for (seed, key...); keys are non-negative ints."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key)))


def run_experiments(spec: GroverSpec, schedule: AmplificationSchedule, key=()) -> np.ndarray:
    """Hit counts of the flag for each power, from full circuit simulation."""
    n = spec.a_circuit.n_qubits
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1.0
    psi = simulate(spec.a_circuit, psi)
    q = grover_operator(spec)
    counts = np.empty(len(schedule.powers), dtype=np.int64)
    done = 0
    for j, m in enumerate(schedule.powers):
        for _ in range(m - done):
            psi = simulate(q, psi)
        done = m
        p = float(probability_one(psi, spec.flag_qubit))
        counts[j] = rng_stream(schedule.seed, *key, j).binomial(schedule.shots, p)
    return counts


def amplified_probabilities(p, powers) -> np.ndarray:
    """sin^2((2m+1) theta) with sin^2 theta = p; shape (..., len(powers))."""
    theta = np.arcsin(np.sqrt(np.clip(np.asarray(p, dtype=float), 0.0, 1.0)))
    m = np.asarray(powers, dtype=float)
    return np.sin((2 * m + 1) * theta[..., None]) ** 2


def sample_amplified(p, schedule: AmplificationSchedule, key=()) -> np.ndarray:
    """Hit counts for each probability in ``p`` (shape (K,)) and each power: (K, P)."""
    p = np.atleast_1d(np.asarray(p, dtype=float))
    probs = amplified_probabilities(p, schedule.powers)
    counts = np.empty(probs.shape, dtype=np.int64)
    for j in range(len(schedule.powers)):
        counts[:, j] = rng_stream(schedule.seed, *key, j).binomial(schedule.shots, probs[:, j])
    return counts


def _loglik(theta, counts, odd, shots):
    # theta: (K, G) or (G,), counts: (K, P), odd = 2m+1: (P,)
    if theta.ndim == 1:
        arg = odd[:, None] * theta[None, :]
    else:
        arg = odd[None, :, None] * theta[:, None, :]
    s2 = np.sin(arg) ** 2
    ls = np.log(np.maximum(s2, _LOG_FLOOR))
    lc = np.log(np.maximum(1.0 - s2, _LOG_FLOOR))
    if theta.ndim == 1:
        return counts @ ls + (shots - counts) @ lc
    h = counts[:, :, None]
    return (h * ls + (shots - h) * lc).sum(axis=1)


def _grid_size(max_power: int, shots: int) -> int:
    # spacing about half the width of the sharpest likelihood lobe
    step = 1.0 / (2.0 * (2 * max_power + 1) * math.sqrt(shots))
    return max(10_000, int(math.ceil((math.pi / 2) / step)) + 1)


def mlqae_thetas(counts, powers, shots: int, chunk: int = 16) -> np.ndarray:
    """Maximum likelihood angles for a batch of hit-count rows (K, P)."""
    counts = np.atleast_2d(np.asarray(counts, dtype=float))
    odd = 2.0 * np.asarray(powers, dtype=float) + 1.0
    if counts.shape[1] != odd.size:
        raise ValueError("one count per power expected")
    if np.any(counts < 0) or np.any(counts > shots):
        raise ValueError("hit counts must lie in [0, shots]")
    K = counts.shape[0]
    out = np.empty(K)
    zero = np.all(counts == 0, axis=1)
    full = np.all(counts == shots, axis=1)
    out[zero] = 0.0
    out[full] = math.pi / 2
    todo = np.flatnonzero(~(zero | full))
    if todo.size == 0:
        return out
    G = _grid_size(int(odd[-1] - 1) // 2, shots)
    grid = np.linspace(0.0, math.pi / 2, G)
    step = grid[1] - grid[0]
    best = np.empty(todo.size)
    for s in range(0, todo.size, chunk):
        rows = counts[todo[s : s + chunk]]
        ll = _loglik(grid, rows, odd, shots)
        best[s : s + chunk] = grid[np.argmax(ll, axis=1)]
    # golden-section refinement inside the bracketing grid cells
    c = todo
    rows = counts[c]
    lo = np.clip(best - step, 0.0, math.pi / 2)
    hi = np.clip(best + step, 0.0, math.pi / 2)
    g = (math.sqrt(5) - 1) / 2
    x1 = hi - g * (hi - lo)
    x2 = lo + g * (hi - lo)
    f1 = _loglik(x1[:, None], rows, odd, shots)[:, 0]
    f2 = _loglik(x2[:, None], rows, odd, shots)[:, 0]
    while np.max(hi - lo) > 1e-10:
        left = f1 > f2
        hi = np.where(left, x2, hi)
        lo = np.where(left, lo, x1)
        x_new = np.where(left, hi - g * (hi - lo), lo + g * (hi - lo))
        f_new = _loglik(x_new[:, None], rows, odd, shots)[:, 0]
        x1, x2, f1, f2 = (
            np.where(left, x_new, x2),
            np.where(left, x1, x_new),
            np.where(left, f_new, f2),
            np.where(left, f1, f_new),
        )
    refined = 0.5 * (lo + hi)
    # keep the grid point if refinement wandered to something worse
    f_ref = _loglik(refined[:, None], rows, odd, shots)[:, 0]
    f_best = _loglik(best[:, None], rows, odd, shots)[:, 0]
    out[c] = np.where(f_ref >= f_best, refined, best)
    return out


def mlqae(hit_counts, schedule: AmplificationSchedule) -> MLQAEResult:
    counts = np.asarray(hit_counts)
    if counts.shape != (len(schedule.powers),):
        raise ValueError("one hit count per power expected")
    theta = float(mlqae_thetas(counts[None, :], schedule.powers, schedule.shots)[0])
    return MLQAEResult(theta, math.sin(theta), tuple(int(c) for c in counts), schedule)


def required_amplifications(e: float, shots: int, C: float = DEFAULT_C) -> int:
    """Smallest power of two m with C / (m sqrt(S)) <= e."""
    if e <= 0 or shots < 1 or C <= 0:
        raise ValueError("need e > 0, shots >= 1 and C > 0")
    ratio = C / (e * math.sqrt(shots))
    m = 1
    while m < ratio * (1 - 1e-12):
        m *= 2
    return m


class ExactEstimator:
    """Noise-free surrogate: returns sqrt(p) exactly."""

    def amplitudes(self, p, key=()):
        return np.sqrt(np.clip(np.asarray(p, dtype=float), 0.0, 1.0))


class MLQAEEstimator:
    """Sampled amplitude estimates for a batch of flag probabilities."""

    def __init__(self, schedule: AmplificationSchedule):
        self.schedule = schedule

    def amplitudes(self, p, key=()):
        p = np.asarray(p, dtype=float)
        counts = sample_amplified(p.ravel(), self.schedule, key)
        theta = mlqae_thetas(counts, self.schedule.powers, self.schedule.shots)
        return np.sin(theta).reshape(p.shape)


# -- calibration ------------------------------------------------------------


@dataclass(frozen=True)
class CalibrationFit:
    slope_shots: float
    slope_amps: float
    C_shots: float
    C_amps: float
    stddev_C_shots: float
    stddev_C_amps: float
    rows: tuple = ()

    @property
    def C(self) -> float:
        return self.C_amps


def calibration_circuit() -> GroverSpec:
    """H on one qubit, then flag |1>: the flag amplitude is 1/sqrt(2)."""
    a = Circuit(2, [Gate("H", (0,))]) + flag_entangler(1, 1)
    return GroverSpec(a, 1)


def _mean_error(p, exact, max_power, shots, seed, reps, tag):
    sched = AmplificationSchedule.exponential(max_power, shots, seed)
    pp = np.full(reps, p)
    counts = np.empty((reps, len(sched.powers)), dtype=np.int64)
    for r in range(reps):
        counts[r] = sample_amplified(pp[r : r + 1], sched, (tag, max_power, shots, r))[0]
    est = np.sin(mlqae_thetas(counts, sched.powers, shots))
    return float(np.mean(np.abs(est - exact)))


def calibrate(
    seed: int = 0,
    reps: int = 50,
    shots_grid=(100, 200, 500, 1000, 2000, 5000, 10000),
    max_powers_for_shots=(1, 2, 4),
    power_grid=(1, 2, 4, 8, 16, 32, 64, 128),
    shots_for_powers=(100, 1000, 10000),
) -> CalibrationFit:
    """Fit error = C / (m sqrt(S)) on the single-qubit calibration problem."""
    spec = calibration_circuit()
    psi = np.zeros(4, dtype=complex)
    psi[0] = 1.0
    p = float(probability_one(simulate(spec.a_circuit, psi), spec.flag_qubit))
    exact = math.sqrt(p)
    rows = []
    slopes_s, cs_s = [], []
    for mM in max_powers_for_shots:
        errs = [_mean_error(p, exact, mM, S, seed, reps, 0) for S in shots_grid]
        slope, icpt = np.polyfit(np.log(shots_grid), np.log(errs), 1)
        slopes_s.append(-slope)
        cs_s.append(math.exp(icpt) * mM)
        rows += [("shots", mM, S, e, 1.0 / (mM * math.sqrt(S))) for S, e in zip(shots_grid, errs)]
    slopes_m, cs_m = [], []
    for S in shots_for_powers:
        errs = [_mean_error(p, exact, mM, S, seed, reps, 1) for mM in power_grid]
        slope, icpt = np.polyfit(np.log(power_grid), np.log(errs), 1)
        slopes_m.append(-slope)
        cs_m.append(math.exp(icpt) * math.sqrt(S))
        rows += [("amplifications", S, mM, e, 1.0 / (mM * math.sqrt(S))) for mM, e in zip(power_grid, errs)]
    return CalibrationFit(
        float(np.mean(slopes_s)),
        float(np.mean(slopes_m)),
        float(np.mean(cs_s)),
        float(np.mean(cs_m)),
        float(np.std(cs_s)),
        float(np.std(cs_m)),
        tuple(rows),
    )


def write_calibration_csv(fit: CalibrationFit, path) -> None:
    """Rows of (sweep, fixed, x, error, theoretical)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sweep", "fixed", "x", "error", "theoretical"])
        for sweep, fixed, x, err, th in fit.rows:
            w.writerow([sweep, fixed, x, repr(float(err)), repr(float(th))])
