"""Lidar ranging equation and photon budget as a function of the energy split.

The lidar receives ``alpha * E_t``. Its return energy assumes the UAV sits at
the peak of the Gaussian lidar footprint (no off-axis illumination factor).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import DomainError
from .model import SystemParams

PLANCK = 6.62607015e-34  # J s, exact (SI 2019)
SPEED_OF_LIGHT = 299792458.0  # m/s, exact


@dataclass(frozen=True)
class LinkBudget:
    """Lidar return energy and the mean photon count it produces."""

    alpha: float
    return_energy: float
    photon_energy: float
    mean_photon_count: float


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"energy split factor must lie in (0, 1), got {alpha!r}")
    return alpha


def photon_energy(wavelength: float) -> float:
    """Planck-Einstein photon energy h*c/lambda in joules."""
    if not wavelength > 0:
        raise DomainError(f"wavelength must be positive, got {wavelength!r}")
    return PLANCK * SPEED_OF_LIGHT / wavelength


def lidar_return_energy(params: SystemParams, alpha: float) -> float:
    """Energy collected by the lidar telescope after reflection off the UAV.

    ``E_r = alpha E_t sigma a_l^2 / (32 pi^2 theta_l^2 D^6)``, i.e. peak
    footprint intensity times the radar cross-section, two spherical-spreading
    factors ``1/(4 pi D^2)`` and the aperture area ``pi a_l^2``.
    """
    alpha = _check_alpha(alpha)
    p = params
    return (
        alpha
        * p.total_energy
        * p.radar_cross_section
        * p.lidar_aperture_radius**2
        / (32.0 * math.pi**2 * p.lidar_half_angle**2 * p.distance**6)
    )


def link_budget(params: SystemParams, alpha: float) -> LinkBudget:
    e_r = lidar_return_energy(params, alpha)
    if params.photon_energy_override is not None:
        e_p = params.photon_energy_override
    else:
        e_p = photon_energy(params.wavelength)
    return LinkBudget(
        alpha=float(alpha), return_energy=e_r, photon_energy=e_p, mean_photon_count=e_r / e_p
    )


def beam_intensity(
    params: SystemParams,
    alpha: float,
    point: Sequence[float],
    center: Sequence[float] = (0.0, 0.0),
) -> float:
    """Lidar Gaussian footprint energy density (J/m^2) at ``point`` on the UAV plane."""
    rho_l = params.lidar_beam_radius
    r2 = (point[0] - center[0]) ** 2 + (point[1] - center[1]) ** 2
    peak = alpha * params.total_energy / (2.0 * math.pi * rho_l**2)
    return peak * math.exp(-r2 / (2.0 * rho_l**2))
