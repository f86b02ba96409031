"""Per-pulse success probability and the distribution of the acquisition time.

One acquisition attempt is a lidar shot (time ``T1``) followed by up to ``N0``
FSO pulses spaced ``T2`` apart. A pulse succeeds with probability
``p_N = P(C) P(D|C)``: the UAV aperture must lie inside the pulse footprint
(coverage) and the captured energy must cross the detection threshold. With
``X`` attempts and ``N`` pulses in the final one, the total time is

    T = X T1 + (X - 1) N0 T2 + N T2.

``X`` is geometric with ``p_X = 1 - (1 - p_N)**N0`` and ``N`` is a geometric
variable truncated to ``{1..N0}``. Two normalizations of that truncation are
available (see :class:`~fsoacq.model.NormalizationMode`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, GeometricInfeasibilityError
from .estimation import uncertainty_sphere
from .model import EnergyModel, HoytConvention, NormalizationMode, SphereShape, SystemParams
from .specfun import QuadratureSpec, bessel_i0e, gaussian_q, integrate

# relative tolerance used to snap slot coordinates (t / T2 etc.) onto integers
_SNAP = 1e-9


# --- coverage --------------------------------------------------------------------


def _margin(fso_radius: float, uav_radius: float) -> float:
    margin = fso_radius - uav_radius
    if not margin > 0:
        raise GeometricInfeasibilityError(
            [("uav_aperture_radius", f"UAV aperture {uav_radius!r} m does not fit in footprint {fso_radius!r} m")]
        )
    return margin


def coverage_prob_circular(fso_radius: float, uav_radius: float, total_var: float) -> float:
    """Probability that a Rayleigh miss distance is below ``fso_radius - uav_radius``.

    ``total_var`` is the per-axis variance of the pulse-to-UAV miss vector,
    i.e. firing variance plus UAV position variance.
    """
    margin = _margin(fso_radius, uav_radius)
    if not total_var >= 0:
        raise DomainError(f"total_var must be >= 0, got {total_var!r}")
    if total_var == 0:
        return 1.0
    return -math.expm1(-(margin * margin) / (2.0 * total_var))


@dataclass(frozen=True)
class HoytParams:
    """Nakagami-q shape ``q`` in (0, 1] and second moment ``omega`` (m^2)."""

    q: float
    omega: float


def hoyt_params(
    azimuth: float,
    elevation: float,
    var1: float,
    var2: float,
    convention: HoytConvention = HoytConvention.PAPER,
) -> HoytParams:
    """Hoyt parameters of the miss distance with per-axis variances ``var1, var2``.

    ``omega`` is the second moment ``var1 + var2``. With the ``PAPER``
    convention ``q`` is ``min{(cos az/cos el)^2, (cos el/cos az)^2}``. With
    ``STD_RATIO`` it is ``sqrt(min(var)/max(var))``, which makes the Hoyt law
    the exact distribution of the norm of the two Gaussian components.
    """
    if not (var1 > 0 and var2 > 0):
        raise DomainError("Hoyt variances must be positive")
    if HoytConvention(convention) is HoytConvention.PAPER:
        r = (math.cos(azimuth) / math.cos(elevation)) ** 2
        q = min(r, 1.0 / r)
    else:
        q = math.sqrt(min(var1, var2) / max(var1, var2))
    return HoytParams(q=q, omega=var1 + var2)


def hoyt_pdf(x: float, hoyt: HoytParams) -> float:
    """Nakagami-q (Hoyt) density at ``x >= 0``."""
    if x < 0:
        return 0.0
    q, om = hoyt.q, hoyt.omega
    q2 = q * q
    x2 = x * x
    # exp(-(1+q^2)^2 x^2 / (4 q^2 om)) I0(b x^2) rewritten with the scaled I0
    b = (1.0 - q2 * q2) / (4.0 * q2 * om)
    return (1.0 + q2) / (q * om) * x * math.exp(-(1.0 + q2) * x2 / (2.0 * om)) * bessel_i0e(b * x2)


def coverage_prob_elliptical(
    fso_radius: float,
    uav_radius: float,
    hoyt: HoytParams,
    quad: QuadratureSpec | None = None,
) -> float:
    """Integral of the Hoyt density from 0 to ``fso_radius - uav_radius``.

    Raises :class:`~fsoacq.errors.ConvergenceError` (carrying the best
    estimate) if the quadrature does not converge.
    """
    upper = _margin(fso_radius, uav_radius)
    # the density decays at least as fast as exp(-x^2 / (2 sigma_max^2))
    sigma_max = math.sqrt(hoyt.omega / (1.0 + hoyt.q**2))
    upper = min(upper, 40.0 * sigma_max)
    value = integrate(lambda x: hoyt_pdf(x, hoyt), 0.0, upper, quad)
    return min(1.0, max(0.0, value))


# --- received energy and detection ----------------------------------------------------


def received_energy_coincident(params: SystemParams, alpha: float) -> float:
    """Per-pulse energy captured when aperture and footprint centers coincide."""
    p = params
    per_pulse = (1.0 - alpha) * p.total_energy / p.max_pulses
    return per_pulse * -math.expm1(-(p.uav_aperture_radius**2) / (2.0 * p.fso_beam_radius**2))


def received_energy_point(params: SystemParams, alpha: float, total_var: float) -> float:
    """Average per-pulse energy on a point-like aperture, given the pulse landed.

    The miss vector is taken as a circular Gaussian with per-axis variance
    ``total_var`` truncated to the footprint disk of radius ``rho_f``;
    ``a0`` is the mass of that disk. ``total_var == 0`` falls back to the
    coincident-centers energy.
    """
    p = params
    s = float(total_var)
    if s < 0:
        raise DomainError(f"total_var must be >= 0, got {total_var!r}")
    if s == 0:
        return received_energy_coincident(params, alpha)
    rf2 = p.fso_beam_radius**2
    per_pulse = (1.0 - alpha) * p.total_energy / p.max_pulses
    a0 = -math.expm1(-rf2 / (2.0 * s))
    return (
        per_pulse
        * p.uav_aperture_radius**2
        / (2.0 * a0 * (rf2 + s))
        * -math.expm1(-(s + rf2) / (2.0 * s))
    )


def detection_prob(signal_charge: float, threshold: float, noise_std: float) -> float:
    """``Q((threshold - signal) / noise_std)``: the signal plus Gaussian noise crosses the threshold."""
    if not noise_std > 0:
        raise DomainError(f"noise_std must be positive, got {noise_std!r}")
    return gaussian_q((threshold - signal_charge) / noise_std)


# --- per-pulse and per-attempt success ----------------------------------------------


def attempt_success_prob(p_pulse: float, n0: int) -> float:
    """``1 - (1 - p_N)**N0``, accurate for small ``p_N``."""
    if p_pulse >= 1.0:
        return 1.0
    return -math.expm1(n0 * math.log1p(-p_pulse))


@dataclass(frozen=True)
class AcqProbabilities:
    p_coverage: float
    p_detect_given_coverage: float
    p_pulse: float
    p_attempt: float
    n0: int
    received_energy: float = math.nan


def pulse_success_prob(params: SystemParams, alpha: float) -> AcqProbabilities:
    """Compose photon budget, sphere, coverage, energy and detection into ``p_N``."""
    sphere = uncertainty_sphere(params, alpha)
    rf, ru = params.fso_beam_radius, params.uav_aperture_radius
    if sphere.shape is SphereShape.CIRCULAR:
        total_var = sphere.miss_var_1
        p_c = coverage_prob_circular(rf, ru, total_var)
    else:
        hoyt = hoyt_params(
            params.azimuth,
            params.elevation,
            sphere.miss_var_1,
            sphere.miss_var_2,
            params.hoyt_convention,
        )
        total_var = 0.5 * hoyt.omega
        p_c = coverage_prob_elliptical(rf, ru, hoyt)

    if params.energy_model is EnergyModel.COINCIDENT_CENTERS:
        energy = received_energy_coincident(params, alpha)
    else:
        energy = received_energy_point(params, alpha, total_var)
    p_d = detection_prob(
        params.photoconversion_efficiency * energy, params.threshold, params.noise_std
    )
    p_n = p_c * p_d
    return AcqProbabilities(
        p_coverage=p_c,
        p_detect_given_coverage=p_d,
        p_pulse=p_n,
        p_attempt=attempt_success_prob(p_n, params.max_pulses),
        n0=params.max_pulses,
        received_energy=energy,
    )


# --- truncated geometric pulse count --------------------------------------------------


def _survival_power(p_pulse: float, m: float) -> float:
    """(1 - p_N)**m with 0**0 == 1."""
    if m == 0:
        return 1.0
    if p_pulse >= 1.0:
        return 0.0
    return math.exp(m * math.log1p(-p_pulse))


def pulse_normalizer(p_pulse: float, n0: int, mode: NormalizationMode) -> float:
    """Denominator of the truncated pulse-count pmf."""
    if NormalizationMode(mode) is NormalizationMode.CORRECTED:
        return attempt_success_prob(p_pulse, n0)
    return (1.0 - p_pulse) - _survival_power(p_pulse, n0)


def pmf_pulses(k: int, p_pulse: float, n0: int, mode: NormalizationMode) -> float:
    """P(N = k) for the truncated geometric pulse count."""
    if not 1 <= k <= n0:
        return 0.0
    c = pulse_normalizer(p_pulse, n0, mode)
    if c == 0:
        raise DomainError(f"pulse-count normalizer vanishes at p_N={p_pulse!r} ({mode.value} mode)")
    return _survival_power(p_pulse, k - 1) * p_pulse / c


def expected_pulses(p_n: float, n0: int, mode: NormalizationMode) -> float:
    """Closed-form mean of the truncated pulse count.

    Both modes share the numerator ``(1 - (1-p)^N0 (1 + N0 p)) / p``. The
    paper-faithful normalizer ``(1-p) - (1-p)^N0`` vanishes at ``p = 0`` and
    ``p = 1``, so those endpoints raise :class:`DomainError` in that mode.
    """
    mode = NormalizationMode(mode)
    p = float(p_n)
    if mode is NormalizationMode.PAPER_FAITHFUL:
        if not 0.0 < p < 1.0:
            raise DomainError(
                f"paper-faithful E[N] divides by zero at p_N={p!r}; requires 0 < p_N < 1"
            )
    elif not 0.0 < p <= 1.0:
        raise DomainError(f"E[N] requires 0 < p_N <= 1, got {p!r}")
    log_q = math.log1p(-p) if p < 1.0 else -math.inf
    qn = math.exp(n0 * log_q)
    # 1 - qn (1 + n0 p), split so the leading O(n0 p) terms cancel analytically
    numerator = (-math.expm1(n0 * log_q) - qn * n0 * p) / p
    return numerator / pulse_normalizer(p, n0, mode)


def expected_attempts(p_x: float) -> float:
    """Mean of the geometric attempt count; ``inf`` when ``p_x == 0``."""
    if p_x == 0:
        return math.inf
    if not 0.0 < p_x <= 1.0:
        raise DomainError(f"p_X must lie in [0, 1], got {p_x!r}")
    return 1.0 / p_x


# --- acquisition time -------------------------------------------------------------------


def _snap(x: float) -> float:
    r = round(x)
    if abs(x - r) <= _SNAP * max(1.0, abs(x)):
        return float(r)
    return x


def cdf_from_pulse_prob(
    t: float, p_pulse: float, n0: int, t1: float, t2: float, mode: NormalizationMode
) -> float:
    """P(T <= t) in closed form.

    In slot units ``M = T1/T2 + N0`` and ``z = t/T2 + N0`` the event is
    ``M X + N <= z``. With ``k = floor((z - 1)/M)`` and ``j = floor(z - kM)``:

    * ``j >= N0``: ``p_X (1 - (1 - p_X)^k) / c``
    * otherwise: ``p_X (1 - (1 - p_X)^(k-1)) / c + p_X (1 - p_X)^(k-1) (1 - (1 - p_N)^j) / c``

    where ``c`` is the pulse-count normalizer of ``mode`` (``c = p_X`` when
    corrected, so the factor ``p_X / c`` drops out).
    """
    mode = NormalizationMode(mode)
    if t < 0 or p_pulse <= 0:
        return 0.0
    c = pulse_normalizer(p_pulse, n0, mode)
    if c == 0:
        raise DomainError(f"pulse-count normalizer vanishes at p_N={p_pulse!r} ({mode.value} mode)")
    p_x = attempt_success_prob(p_pulse, n0)
    scale = 1.0 if mode is NormalizationMode.CORRECTED else p_x / c
    if math.isinf(t):
        return scale
    log_fail = n0 * math.log1p(-p_pulse) if p_pulse < 1.0 else -math.inf  # log(1 - p_X)

    def attempts_done(m: int) -> float:
        # P(X <= m) = 1 - (1 - p_X)^m
        return 0.0 if m == 0 else -math.expm1(m * log_fail)

    slots = t1 / t2 + n0
    z = _snap(t / t2 + n0)
    if z < slots + 1:
        return 0.0
    k = math.floor(_snap((z - 1) / slots))
    j = math.floor(_snap(z - k * slots))
    if j >= n0:
        return scale * attempts_done(k)
    fail_prev = 1.0 if k == 1 else math.exp((k - 1) * log_fail)
    pulses_done = -math.expm1(j * math.log1p(-p_pulse)) if p_pulse < 1.0 else 1.0
    return scale * attempts_done(k - 1) + fail_prev * p_x * pulses_done / c


@dataclass(frozen=True)
class AcqTimeModel:
    """Mean and distribution of the total acquisition time for a given ``p_N``."""

    expected_attempts: float
    expected_pulses: float
    expected_time: float
    t1: float
    t2: float
    n0: int
    p_pulse: float
    normalization_mode: NormalizationMode
    probabilities: AcqProbabilities | None = None

    @property
    def p_attempt(self) -> float:
        return attempt_success_prob(self.p_pulse, self.n0)

    @property
    def slot_ratio(self) -> float:
        """``M = T1/T2 + N0``: attempt length in units of ``T2``."""
        return self.t1 / self.t2 + self.n0

    def pmf_pulses(self, k: int) -> float:
        return pmf_pulses(k, self.p_pulse, self.n0, self.normalization_mode)

    def cdf(self, t: float) -> float:
        return cdf_from_pulse_prob(
            t, self.p_pulse, self.n0, self.t1, self.t2, self.normalization_mode
        )


def time_model(
    p_pulse: float,
    n0: int,
    t1: float,
    t2: float,
    mode: NormalizationMode = NormalizationMode.CORRECTED,
    probabilities: AcqProbabilities | None = None,
) -> AcqTimeModel:
    """Build an :class:`AcqTimeModel` directly from ``p_N``.

    ``E[T] = (T1 + N0 T2) E[X] + T2 E[N] - N0 T2``. For ``p_N == 0`` the
    mean time is ``inf``; ``E[N]`` is then its ``p -> 0`` limit
    ``(N0 + 1)/2`` in corrected mode and NaN in paper-faithful mode.
    """
    mode = NormalizationMode(mode)
    p_x = attempt_success_prob(p_pulse, n0)
    e_x = expected_attempts(p_x)
    if p_pulse == 0:
        e_n = 0.5 * (n0 + 1) if mode is NormalizationMode.CORRECTED else math.nan
        e_t = math.inf
    else:
        e_n = expected_pulses(p_pulse, n0, mode)
        e_t = (t1 + n0 * t2) * e_x + t2 * e_n - n0 * t2
    return AcqTimeModel(
        expected_attempts=e_x,
        expected_pulses=e_n,
        expected_time=e_t,
        t1=t1,
        t2=t2,
        n0=n0,
        p_pulse=p_pulse,
        normalization_mode=mode,
        probabilities=probabilities,
    )


def expected_time(params: SystemParams, alpha: float) -> AcqTimeModel:
    """Acquisition-time model at energy split ``alpha`` in the configured mode."""
    probs = pulse_success_prob(params, alpha)
    return time_model(
        probs.p_pulse, params.max_pulses, params.t1, params.t2, params.normalization_mode, probs
    )


def acq_time_cdf(params: SystemParams, alpha: float, t: float) -> float:
    """P(T <= t) at energy split ``alpha`` in the configured normalization mode."""
    probs = pulse_success_prob(params, alpha)
    return cdf_from_pulse_prob(
        t, probs.p_pulse, params.max_pulses, params.t1, params.t2, params.normalization_mode
    )


def pmf_z(k: int, n: float, model: AcqTimeModel) -> float:
    """P(Z = n) with ``Z = M X + N``, for the ``k``-th attempt block.

    Non-zero only for ``n = kM + j`` with ``j`` in ``{1..N0}``.
    """
    if k < 1:
        raise DomainError(f"attempt index k must be >= 1, got {k!r}")
    j = _snap(n - k * model.slot_ratio)
    if j != math.floor(j) or not 1 <= j <= model.n0:
        return 0.0
    p_x = model.p_attempt
    fail_prev = 1.0 if k == 1 else (1.0 - p_x) ** (k - 1)
    return fail_prev * p_x * model.pmf_pulses(int(j))
