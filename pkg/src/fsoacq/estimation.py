"""Centroid-estimator error bounds and the resulting uncertainty sphere.

The lidar estimates the return-spot centroid on a (continuous) focal-plane
array from a Poisson number of photons. Its variance bound maps to angle-of-
arrival error variances through the small-angle relation
``E_angle = E_x / (F cos(angle))``, and those set the size of the region the
FSO transmitter has to search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError
from .linkbudget import link_budget
from .model import SphereShape, SystemParams
from .specfun import EULER_GAMMA, ei_log_remainder, exp_scaled_ei


def centroid_variance_bound(lambda_u: float, array_area: float, spot_radius: float) -> float:
    """Upper bound on the variance of one centroid coordinate (m^2).

    ``|A|/2 e^-L + rho^2 e^-L (Ei(L) - ln L - gamma)`` for mean photon count
    ``L``. When no photon is detected the estimate is taken as the array
    center, which costs at most half the squared array diagonal, ``|A|/2``.
    That is also the value at ``L = 0``.
    """
    lam = float(lambda_u)
    if not lam >= 0.0:
        raise DomainError(f"mean photon count must be >= 0, got {lambda_u!r}")
    if not (array_area > 0 and spot_radius > 0):
        raise DomainError("array_area and spot_radius must be positive")
    if lam == 0.0:
        return 0.5 * array_area
    decay = math.exp(-lam)
    if lam <= 40.0:
        photon_term = decay * ei_log_remainder(lam)
    else:
        # e^-L Ei(L) ~ 1/L; the log/gamma part has underflowed or is negligible
        photon_term = exp_scaled_ei(lam) - decay * (math.log(lam) + EULER_GAMMA)
    return 0.5 * array_area * decay + spot_radius**2 * photon_term


def angle_error_variance_bound(angle: float, focal_length: float, centroid_bound: float) -> float:
    """Angle-of-arrival error variance bound (rad^2): ``bound / (F cos(angle))^2``."""
    c = math.cos(angle)
    if not c > 0.0 or abs(angle) >= math.pi / 2:
        raise DomainError(f"angle must satisfy |angle| < pi/2, got {angle!r}")
    return centroid_bound / (focal_length * c) ** 2


@dataclass(frozen=True)
class UncertaintySphere:
    """Lidar uncertainty region at range ``distance`` and the FSO firing law.

    ``sigma_e_az`` and ``sigma_e_el`` are angle-error standard deviation bounds
    (rad); radii follow the 3-sigma rule. The firing variances are per-axis
    variances (m^2) of the Gaussian the FSO pulse positions are drawn from.
    Circular mode fires with ``2 sigma_E^2 D^2`` per axis, elliptical mode
    with ``sigma_E_i^2 D^2``.
    """

    shape: SphereShape
    sigma_e_az: float
    sigma_e_el: float
    radius_a: float
    radius_b: float
    firing_var_1: float
    firing_var_2: float
    distance: float

    @property
    def uav_var_1(self) -> float:
        """Per-axis variance (m^2) of the true UAV position about the estimate."""
        return (self.sigma_e_az * self.distance) ** 2

    @property
    def uav_var_2(self) -> float:
        return (self.sigma_e_el * self.distance) ** 2

    @property
    def miss_var_1(self) -> float:
        """Per-axis variance of the pulse-to-UAV miss vector."""
        return self.firing_var_1 + self.uav_var_1

    @property
    def miss_var_2(self) -> float:
        return self.firing_var_2 + self.uav_var_2


def uncertainty_sphere(
    params: SystemParams, alpha: float, shape: SphereShape | None = None
) -> UncertaintySphere:
    """Build the uncertainty sphere produced by a lidar shot with split ``alpha``.

    The circular sphere uses the elevation-angle bound for both axes.
    """
    shape = SphereShape(shape or params.sphere_shape)
    lam = link_budget(params, alpha).mean_photon_count
    bound = centroid_variance_bound(lam, params.array_area, params.spot_radius)
    D = params.distance
    var_el = angle_error_variance_bound(params.elevation, params.focal_length, bound)
    if shape is SphereShape.CIRCULAR:
        s = math.sqrt(var_el)
        fire = 2.0 * var_el * D**2
        return UncertaintySphere(shape, s, s, 3 * s * D, 3 * s * D, fire, fire, D)
    var_az = angle_error_variance_bound(params.azimuth, params.focal_length, bound)
    s_az = math.sqrt(var_az)
    s_el = math.sqrt(var_el)
    return UncertaintySphere(
        shape, s_az, s_el, 3 * s_az * D, 3 * s_el * D, var_az * D**2, var_el * D**2, D
    )
