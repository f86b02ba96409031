import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate as sint

from fsoacq.acqstats import (
    HoytParams,
    acq_time_cdf,
    attempt_success_prob,
    cdf_from_pulse_prob,
    coverage_prob_circular,
    coverage_prob_elliptical,
    detection_prob,
    expected_attempts,
    expected_pulses,
    expected_time,
    hoyt_params,
    hoyt_pdf,
    pmf_pulses,
    pmf_z,
    pulse_success_prob,
    received_energy_coincident,
    received_energy_point,
    time_model,
)
from fsoacq.errors import DomainError, GeometricInfeasibilityError
from fsoacq.model import HoytConvention, NormalizationMode, default_params

CORR = NormalizationMode.CORRECTED
PAPER = NormalizationMode.PAPER_FAITHFUL


# --- coverage ------------------------------------------------------------------


def test_rayleigh_coverage_reference_points():
    assert coverage_prob_circular(0.05, 0.01, 0.04**2 / 2) == pytest.approx(1 - math.exp(-1), rel=1e-15)
    assert coverage_prob_circular(0.01 + 1e-12, 0.01, 1e-4) < 1e-19
    assert coverage_prob_circular(0.05, 0.01, 0.0) == 1.0
    assert coverage_prob_circular(0.05, 0.01, 1e-300) == 1.0


def test_rayleigh_coverage_infeasible():
    with pytest.raises(GeometricInfeasibilityError):
        coverage_prob_circular(0.01, 0.01, 1e-4)


@given(st.floats(1e-4, 0.1), st.floats(1e-8, 1e-2), st.floats(1.01, 2.0))
def test_rayleigh_coverage_monotone(margin, var, k):
    base = coverage_prob_circular(0.01 + margin, 0.01, var)
    assert 0.0 <= base < 1.0 or base == 1.0
    assert coverage_prob_circular(0.01 + margin * k, 0.01, var) >= base
    assert coverage_prob_circular(0.01 + margin, 0.01, var * k) <= base


def test_hoyt_q_from_angles():
    assert hoyt_params(0.1, 0.6, 1.0, 2.0).q == pytest.approx(0.68804, abs=1e-4)
    assert hoyt_params(0.6, 0.1, 1.0, 2.0).q == hoyt_params(0.1, 0.6, 1.0, 2.0).q
    assert hoyt_params(0.3, 0.3, 1.0, 2.0).q == 1.0
    assert hoyt_params(0.1, 0.6, 1.0, 2.0).omega == 3.0
    std = hoyt_params(0.1, 0.6, 1.0, 4.0, HoytConvention.STD_RATIO)
    assert std.q == 0.5


def test_hoyt_pdf_normalized():
    h = HoytParams(q=0.3, omega=2e-3)
    total, _ = sint.quad(lambda x: hoyt_pdf(x, h), 0, 2.0, epsabs=1e-14, limit=200)
    assert total == pytest.approx(1.0, abs=1e-10)
    assert coverage_prob_elliptical(10.0, 0.01, h) == pytest.approx(1.0, abs=1e-6)
    assert coverage_prob_elliptical(0.01 + 1e-9, 0.01, h) < 1e-12


@pytest.mark.parametrize("margin", [0.002, 0.01, 0.03, 0.07])
def test_hoyt_q1_degenerates_to_rayleigh(margin):
    h = HoytParams(q=1.0, omega=2 * 3e-4)
    assert coverage_prob_elliptical(0.01 + margin, 0.01, h) == pytest.approx(
        coverage_prob_circular(0.01 + margin, 0.01, 3e-4), abs=1e-8
    )


@pytest.mark.parametrize("v1,v2,margin", [(1e-4, 4e-4, 0.02), (2e-5, 1e-3, 0.03), (5e-4, 5e-5, 0.01)])
def test_hoyt_std_ratio_is_norm_of_bivariate_gaussian(v1, v2, margin):
    h = hoyt_params(0.1, 0.6, v1, v2, HoytConvention.STD_RATIO)
    dens = lambda y, x: math.exp(-x * x / (2 * v1) - y * y / (2 * v2)) / (2 * math.pi * math.sqrt(v1 * v2))  # noqa: E731
    edge = lambda x: math.sqrt(max(margin * margin - x * x, 0.0))  # noqa: E731
    ref, _ = sint.dblquad(dens, -margin, margin, lambda x: -edge(x), edge, epsabs=0, epsrel=1e-12)
    assert coverage_prob_elliptical(0.05 + margin, 0.05, h) == pytest.approx(ref, rel=1e-9)


# --- energy and detection -----------------------------------------------------------


def test_coincident_energy_defaults():
    p = default_params()
    assert received_energy_coincident(p, 0.5) == pytest.approx(0.5 * -math.expm1(-0.02), rel=1e-12)
    assert received_energy_coincident(p, 0.5) == pytest.approx(9.9007e-3, abs=1e-6)
    assert received_energy_coincident(p, 1.0) == 0.0
    small = default_params(uav_aperture_radius=1e-4)
    approx = 0.5 * 1e-8 / (2 * 0.05**2)
    assert received_energy_coincident(small, 0.5) == pytest.approx(approx, rel=1e-5)


def test_point_energy_vs_monte_carlo():
    p = default_params()
    s = 4e-4
    rf, ru = p.fso_beam_radius, p.uav_aperture_radius
    rng = np.random.default_rng(5)
    xy = rng.standard_normal((2_000_000, 2)) * math.sqrt(s)
    r2 = (xy**2).sum(axis=1)
    r2 = r2[r2 < rf**2]
    per_pulse = 0.5 * 10 / 10
    e = per_pulse * ru**2 / (2 * rf**2) * np.exp(-r2 / (2 * rf**2))
    se = e.std(ddof=1) / math.sqrt(len(e))
    assert abs(received_energy_point(p, 0.5, s) - e.mean()) <= 3 * se


def test_point_energy_limits_and_scaling():
    p = default_params()
    assert received_energy_point(p, 0.5, 0.0) == received_energy_coincident(p, 0.5)
    assert received_energy_point(p, 1.0, 1e-4) == 0.0
    big = p.replace(total_energy=30.0)
    assert received_energy_point(big, 0.4, 1e-4) == pytest.approx(3 * received_energy_point(p, 0.4, 1e-4), rel=1e-14)


def test_detection_examples():
    assert detection_prob(2.0, 2.0, 0.1) == 0.5
    assert detection_prob(2.1, 2.0, 0.1) == pytest.approx(0.841344746, abs=1e-9)
    assert detection_prob(2.1, 2.0, 1e-9) == 1.0
    with pytest.raises(DomainError):
        detection_prob(1.0, 0.0, 0.0)


def test_pulse_success_factor_limits():
    p = default_params()
    never = pulse_success_prob(p.replace(detection_threshold=math.inf), 0.5)
    assert never.p_pulse == 0.0 and never.p_attempt == 0.0
    always = pulse_success_prob(p.replace(detection_threshold=-math.inf), 0.5)
    assert always.p_detect_given_coverage == 1.0
    assert always.p_pulse == always.p_coverage


def test_pulse_success_fields_consistent():
    for kw in ({}, {"sphere_shape": "elliptical"}, {"energy_model": "point"}):
        pr = pulse_success_prob(default_params(**kw), 0.4)
        assert pr.p_pulse == pytest.approx(pr.p_coverage * pr.p_detect_given_coverage, rel=1e-15)
        assert pr.p_attempt == pytest.approx(1 - (1 - pr.p_pulse) ** 10, rel=1e-12)


# --- pulse and attempt counts ---------------------------------------------------------


def test_expected_pulses_examples():
    assert expected_pulses(0.5, 2, PAPER) == pytest.approx(4.0, rel=1e-15)
    assert expected_pulses(0.5, 2, CORR) == pytest.approx(4 / 3, rel=1e-15)
    assert expected_pulses(1.0, 7, CORR) == 1.0
    assert expected_pulses(1 - 1e-15, 7, CORR) == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("p", [0.0, 1.0])
def test_expected_pulses_paper_endpoints(p):
    with pytest.raises(DomainError):
        expected_pulses(p, 5, PAPER)


@settings(max_examples=60)
@given(st.floats(1e-6, 0.999), st.integers(2, 60), st.sampled_from([CORR, PAPER]))
def test_expected_pulses_matches_own_pmf(p, n0, mode):
    pmf = [pmf_pulses(k, p, n0, mode) for k in range(1, n0 + 1)]
    mean = math.fsum(k * w for k, w in enumerate(pmf, 1))
    assert expected_pulses(p, n0, mode) == pytest.approx(mean, rel=1e-10, abs=1e-12)
    if mode is CORR:
        assert math.fsum(pmf) == pytest.approx(1.0, abs=1e-12)


def test_expected_attempts():
    assert expected_attempts(1.0) == 1.0
    assert expected_attempts(0.75) == pytest.approx(4 / 3)
    assert expected_attempts(0.0) == math.inf


@given(st.floats(1e-9, 1.0), st.integers(1, 500))
def test_attempt_at_least_pulse(p, n0):
    assert attempt_success_prob(p, n0) >= p * (1 - 1e-15)


def test_attempt_tends_to_one():
    assert attempt_success_prob(0.01, 5000) == pytest.approx(1.0, abs=1e-15)


# --- acquisition time ---------------------------------------------------------------


def test_worked_mean_time():
    assert time_model(0.5, 2, 1.0, 1.0).expected_time == pytest.approx(10 / 3, rel=1e-15)
    assert time_model(1.0, 5, 0.7, 0.2).expected_time == pytest.approx(0.9, rel=1e-15)


def test_worked_mean_time_monte_carlo():
    rng = np.random.default_rng(1)
    n = 1_000_000
    p, n0 = 0.5, 2
    x = rng.geometric(1 - (1 - p) ** n0, n)
    # N is geometric(p) conditioned on N <= n0
    u = rng.random(n)
    nn = np.where(u < (p / (1 - (1 - p) ** n0)), 1, 2)
    t = x * 1.0 + (x - 1) * n0 * 1.0 + nn * 1.0
    se = t.std(ddof=1) / math.sqrt(n)
    assert abs(t.mean() - 10 / 3) <= 3 * se


def test_zero_pulse_probability():
    m = time_model(0.0, 4, 1.0, 1.0)
    assert m.expected_time == math.inf
    assert m.expected_pulses == 2.5


def test_cdf_examples():
    m = time_model(0.5, 2, 1.0, 1.0)
    assert m.cdf(2.0) == pytest.approx(0.5, abs=1e-15)
    assert m.cdf(1.999) == 0.0
    assert m.cdf(1e9) == pytest.approx(1.0, abs=1e-9)
    paper = time_model(0.5, 2, 1.0, 1.0, PAPER)
    assert paper.cdf(2.0) == pytest.approx(1.5, rel=1e-12)


def test_cdf_library_entry_points_agree():
    p = default_params()
    for a in (0.1, 0.5, 0.9):
        assert acq_time_cdf(p, a, 0.0025) == expected_time(p, a).cdf(0.0025)


@settings(max_examples=80)
@given(
    st.floats(1e-3, 1.0),
    st.integers(2, 12),
    st.integers(1, 10),
    st.lists(st.floats(0.0, 200.0), min_size=2, max_size=10),
)
def test_cdf_is_a_distribution(p, n0, ratio, ts):
    ts = sorted(ts)
    vals = [cdf_from_pulse_prob(t, p, n0, float(ratio), 1.0, CORR) for t in ts]
    assert all(0.0 <= v <= 1.0 + 1e-15 for v in vals)
    assert all(b >= a - 1e-15 for a, b in zip(vals, vals[1:]))


def test_pmf_z_support():
    m = time_model(0.3, 4, 3.0, 1.0)
    M = m.slot_ratio
    assert pmf_z(1, M + 1, m) == pytest.approx(m.p_attempt * m.pmf_pulses(1), rel=1e-15)
    assert pmf_z(1, M + 5, m) == 0.0
    assert pmf_z(2, M + 2, m) == 0.0
    assert pmf_z(1, M + 1.5, m) == 0.0
    with pytest.raises(DomainError):
        pmf_z(0, 1, m)


def test_pmf_z_sums_to_cdf():
    m = time_model(0.2, 5, 3.0, 1.0)
    M = int(m.slot_ratio)
    running, k = 0.0, 1
    while (1 - m.p_attempt) ** (k - 1) > 1e-13:
        for j in range(1, 6):
            running += pmf_z(k, k * M + j, m)
            assert m.cdf(k * M + j - 5) == pytest.approx(running, abs=1e-9)
        k += 1
    assert running == pytest.approx(1.0, abs=1e-12)
