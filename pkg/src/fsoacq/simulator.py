"""Monte Carlo simulation of the lidar-assisted acquisition loop.

Each attempt re-estimates the UAV position (the true offset is redrawn from
the lidar error covariance) and fires up to ``N0`` pulses from the firing
distribution. A pulse succeeds when the miss distance is below
``rho_f - rho_uav`` and the received charge plus Gaussian noise crosses the
threshold. Attempts repeat until a pulse succeeds.

Two fidelities are offered:

``FAITHFUL``
    Reproduces the assumptions behind the closed forms: every pulse sees an
    independent miss vector (UAV offset and pulse position both redrawn) and
    the received energy is the analytic average of the configured energy
    model. Per-pulse outcomes are then i.i.d. Bernoulli(p_N).
``PHYSICAL``
    One UAV offset per attempt shared by all its pulses, and per-pulse energy
    from the Gaussian footprint at the actual miss distance (point aperture).
    This exposes what the averaged model leaves out.

Reproducibility: trial ``i`` of a run with seed ``s`` draws from its own
``PCG64`` stream seeded by ``SeedSequence(s, spawn_key=(i,))``, so results
depend only on ``(seed, n_trials)`` and never on how trials are scheduled.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .acqstats import _snap, received_energy_coincident, received_energy_point
from .errors import DomainError, NonTerminationError
from .estimation import UncertaintySphere, uncertainty_sphere
from .model import EnergyModel, SystemParams

MAX_ATTEMPTS = 10**9
THREADS_ENV = "FSO_ACQ_THREADS"

RNG_METADATA = {
    "bit_generator": "PCG64",
    "seeding": "numpy.random.SeedSequence(seed, spawn_key=(trial_index,))",
    "numpy_version": np.__version__,
}


class SimFidelity(str, Enum):
    FAITHFUL = "faithful"
    PHYSICAL = "physical"


@dataclass(frozen=True)
class TrialRecord:
    attempts: int
    pulses_final_attempt: int
    total_time: float
    detected_pulse_index_history: tuple[int, ...] = ()


@dataclass(frozen=True)
class CdfPoint:
    t: float
    probability: float
    stderr: float


@dataclass(frozen=True)
class SimSummary:
    trials: int
    seed: int
    alpha: float
    fidelity: SimFidelity
    mean_time: float
    mean_time_stderr: float
    mean_attempts: float
    mean_pulses_final_attempt: float
    empirical_p_pulse: float
    empirical_p_pulse_stderr: float
    empirical_cdf: tuple[CdfPoint, ...] = ()
    rng: dict = field(default_factory=lambda: dict(RNG_METADATA))


def trial_rng(seed: int, trial_index: int) -> np.random.Generator:
    """Generator for one trial's independent substream."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(trial_index),))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class _Setup:
    fidelity: SimFidelity
    n0: int
    uav_std: np.ndarray
    fire_std: np.ndarray
    margin2: float
    signal: float  # faithful: eta * analytic energy
    energy_scale: float  # physical: eta * per-pulse peak energy on a point aperture
    footprint_var2: float  # 2 rho_f^2
    threshold: float
    noise_std: float
    t1: float
    t2: float


def _setup(
    params: SystemParams, alpha: float, sphere: UncertaintySphere, fidelity: SimFidelity
) -> _Setup:
    fidelity = SimFidelity(fidelity)
    rf, ru = params.fso_beam_radius, params.uav_aperture_radius
    eta = params.photoconversion_efficiency
    if params.energy_model is EnergyModel.COINCIDENT_CENTERS:
        energy = received_energy_coincident(params, alpha)
    else:
        energy = received_energy_point(params, alpha, 0.5 * (sphere.miss_var_1 + sphere.miss_var_2))
    per_pulse = (1.0 - alpha) * params.total_energy / params.max_pulses
    return _Setup(
        fidelity=fidelity,
        n0=params.max_pulses,
        uav_std=np.sqrt([sphere.uav_var_1, sphere.uav_var_2]),
        fire_std=np.sqrt([sphere.firing_var_1, sphere.firing_var_2]),
        margin2=(rf - ru) ** 2,
        signal=eta * energy,
        energy_scale=eta * per_pulse * ru**2 / (2.0 * rf**2),
        footprint_var2=2.0 * rf**2,
        threshold=params.threshold,
        noise_std=params.noise_std,
        t1=params.t1,
        t2=params.t2,
    )


def _attempt(s: _Setup, rng: np.random.Generator) -> tuple[bool, int]:
    if s.fidelity is SimFidelity.FAITHFUL:
        draws = rng.standard_normal((s.n0, 5))
        miss = draws[:, 2:4] * s.fire_std - draws[:, 0:2] * s.uav_std
        d2 = np.einsum("ij,ij->i", miss, miss)
        charge = s.signal + draws[:, 4] * s.noise_std
    else:
        uav = rng.standard_normal(2) * s.uav_std
        draws = rng.standard_normal((s.n0, 3))
        miss = draws[:, 0:2] * s.fire_std - uav
        d2 = np.einsum("ij,ij->i", miss, miss)
        charge = s.energy_scale * np.exp(-d2 / s.footprint_var2) + draws[:, 2] * s.noise_std
    hit = (d2 < s.margin2) & (charge > s.threshold)
    first = int(np.argmax(hit))
    if hit[first]:
        return True, first + 1
    return False, s.n0


def simulate_attempt(
    params: SystemParams,
    alpha: float,
    sphere: UncertaintySphere,
    fidelity: SimFidelity,
    rng: np.random.Generator,
) -> tuple[bool, int]:
    """Run one acquisition attempt; returns ``(success, pulses_used)``."""
    return _attempt(_setup(params, alpha, sphere, fidelity), rng)


def acquisition_time(attempts: int, pulses: int, n0: int, t1: float, t2: float) -> float:
    """``X T1 + (X - 1) N0 T2 + N T2`` with the pulse count summed in integers first."""
    return attempts * t1 + ((attempts - 1) * n0 + pulses) * t2


def _acquire(
    s: _Setup, rng: np.random.Generator, max_attempts: int, keep_history: bool = True
) -> TrialRecord:
    history: list[int] = []
    attempts = 0
    while attempts < max_attempts:
        attempts += 1
        ok, used = _attempt(s, rng)
        if keep_history:
            history.append(used if ok else 0)
        if ok:
            return TrialRecord(
                attempts=attempts,
                pulses_final_attempt=used,
                total_time=acquisition_time(attempts, used, s.n0, s.t1, s.t2),
                detected_pulse_index_history=tuple(history),
            )
    raise NonTerminationError(
        f"no pulse detected within {max_attempts} attempts; p_N is effectively zero"
    )


def simulate_acquisition(
    params: SystemParams,
    alpha: float,
    fidelity: SimFidelity,
    rng: np.random.Generator,
    max_attempts: int = MAX_ATTEMPTS,
    sphere: UncertaintySphere | None = None,
) -> TrialRecord:
    """Repeat attempts until a pulse is detected.

    ``detected_pulse_index_history`` lists, per attempt, the 1-based index of
    the detecting pulse or 0 for a failed attempt.
    """
    sphere = sphere or uncertainty_sphere(params, alpha)
    return _acquire(_setup(params, alpha, sphere, fidelity), rng, max_attempts)


def _run_chunk(args) -> tuple[np.ndarray, np.ndarray]:
    params, alpha, fidelity, seed, start, stop, max_attempts = args
    s = _setup(params, alpha, uncertainty_sphere(params, alpha), fidelity)
    attempts = np.empty(stop - start, dtype=np.int64)
    pulses = np.empty(stop - start, dtype=np.int64)
    for i in range(start, stop):
        rec = _acquire(s, trial_rng(seed, i), max_attempts, keep_history=False)
        attempts[i - start] = rec.attempts
        pulses[i - start] = rec.pulses_final_attempt
    return attempts, pulses


def default_workers() -> int:
    """Worker count: ``FSO_ACQ_THREADS`` when set, else the CPU count."""
    cap = os.environ.get(THREADS_ENV)
    if cap:
        try:
            return max(1, int(cap))
        except ValueError:
            raise DomainError(f"{THREADS_ENV} must be an integer, got {cap!r}") from None
    return os.cpu_count() or 1


def _sample_std(x: np.ndarray, mean: float) -> float:
    if len(x) < 2:
        return 0.0
    return math.sqrt(math.fsum((x - mean) ** 2) / (len(x) - 1))


def run_trials(
    params: SystemParams,
    alpha: float,
    fidelity: SimFidelity,
    n_trials: int,
    seed: int,
    cdf_grid=(),
    workers: int | None = None,
    chunk_size: int = 4096,
    max_attempts: int = MAX_ATTEMPTS,
) -> SimSummary:
    """Simulate ``n_trials`` independent acquisitions and summarize them.

    Standard errors are sample standard deviations over ``sqrt(n_trials)``.
    The per-pulse success estimate is ``1 / mean(total pulses fired)``, whose
    standard error follows from the delta method. In ``FAITHFUL`` mode the
    total pulse count is exactly geometric with parameter ``p_N``.
    """
    n_trials = int(n_trials)
    if n_trials < 1:
        raise DomainError(f"n_trials must be >= 1, got {n_trials!r}")
    fidelity = SimFidelity(fidelity)
    workers = default_workers() if workers is None else max(1, int(workers))
    bounds = list(range(0, n_trials, chunk_size)) + [n_trials]
    jobs = [
        (params, alpha, fidelity, seed, lo, hi, max_attempts)
        for lo, hi in zip(bounds[:-1], bounds[1:])
    ]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            parts = list(pool.map(_run_chunk, jobs))
    else:
        parts = [_run_chunk(job) for job in jobs]
    attempts = np.concatenate([a for a, _ in parts])
    pulses = np.concatenate([p for _, p in parts])

    n0, t1, t2 = params.max_pulses, params.t1, params.t2
    times = attempts * t1 + ((attempts - 1) * n0 + pulses) * t2
    mean_time = math.fsum(times) / n_trials
    fired = (attempts - 1) * n0 + pulses
    mean_fired = math.fsum(fired) / n_trials
    p_hat = 1.0 / mean_fired

    slots = t1 / t2 + n0
    slot_pos = attempts * slots + pulses
    cdf = []
    for t in cdf_grid:
        z = _snap(t / t2 + n0)
        hit = (slot_pos <= z + 1e-9 * max(1.0, abs(z))).astype(float)
        prob = math.fsum(hit) / n_trials
        cdf.append(CdfPoint(float(t), prob, _sample_std(hit, prob) / math.sqrt(n_trials)))

    return SimSummary(
        trials=n_trials,
        seed=int(seed),
        alpha=float(alpha),
        fidelity=fidelity,
        mean_time=mean_time,
        mean_time_stderr=_sample_std(times, mean_time) / math.sqrt(n_trials),
        mean_attempts=math.fsum(attempts) / n_trials,
        mean_pulses_final_attempt=math.fsum(pulses) / n_trials,
        empirical_p_pulse=p_hat,
        empirical_p_pulse_stderr=p_hat**2 * _sample_std(fired, mean_fired) / math.sqrt(n_trials),
        empirical_cdf=tuple(cdf),
    )
