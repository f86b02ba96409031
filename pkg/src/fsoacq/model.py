"""System parameters, validation and the flat ``key = value`` config format.

Every other module takes a validated :class:`SystemParams`. Beam radii at the
UAV are always derived from the half-angles (``rho = theta * D``); they are
never stored as independent inputs.

Angle naming: ``azimuth`` is the angle whose error sets the x-axis variance and
``elevation`` the y-axis one. With the default numbers the azimuth is
0.1 rad and the elevation 0.6 rad; the circular uncertainty sphere uses the
elevation angle.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Mapping

from .errors import ConfigError, GeometricInfeasibilityError, ParameterError
from .specfun import gaussian_q_inv


class SphereShape(str, Enum):
    CIRCULAR = "circular"
    ELLIPTICAL = "elliptical"


class EnergyModel(str, Enum):
    COINCIDENT_CENTERS = "coincident"
    POINT_DETECTOR = "point"


class NormalizationMode(str, Enum):
    """Normalizer of the truncated-geometric pulse count.

    ``CORRECTED`` divides by ``1 - (1 - p)**N0``, the proper truncation of a
    geometric variable to ``{1..N0}``. ``PAPER_FAITHFUL`` divides by
    ``(1 - p) - (1 - p)**N0`` instead. That is close to the proper value only
    when ``p`` is small, and it can push probabilities above 1.
    """

    PAPER_FAITHFUL = "paper"
    CORRECTED = "corrected"


class HoytConvention(str, Enum):
    """How the Nakagami-q shape parameter is formed from the axis variances.

    ``PAPER`` uses the ratio of variances, ``min{(cos az / cos el)^2, ...}``.
    ``STD_RATIO`` uses the ratio of standard deviations, which is the shape
    parameter of the usual Hoyt density.
    """

    PAPER = "paper"
    STD_RATIO = "std_ratio"


@dataclass(frozen=True)
class SystemParams:
    """All inputs of the acquisition model (SI units)."""

    total_energy: float = 10.0
    distance: float = 100.0
    lidar_half_angle: float = 0.05
    fso_half_angle: float = 5e-4
    lidar_aperture_radius: float = 0.5
    radar_cross_section: float = 0.2
    uav_aperture_radius: float = 0.01
    azimuth: float = 0.1
    elevation: float = 0.6
    focal_length: float = 1e-3
    array_area: float = 1e-6
    spot_radius: float = 1e-4
    wavelength: float = 1550e-9
    photoconversion_efficiency: float = 0.5
    noise_std: float = 1e-5
    detection_threshold: float | None = None
    false_alarm_prob: float = 1e-3
    t1: float = 1e-3
    t2: float = 1e-3
    max_pulses: int = 10
    sphere_shape: SphereShape = SphereShape.CIRCULAR
    energy_model: EnergyModel = EnergyModel.COINCIDENT_CENTERS
    normalization_mode: NormalizationMode = NormalizationMode.CORRECTED
    photon_energy_override: float | None = None
    hoyt_convention: HoytConvention = HoytConvention.PAPER

    @property
    def lidar_beam_radius(self) -> float:
        return self.lidar_half_angle * self.distance

    @property
    def fso_beam_radius(self) -> float:
        return self.fso_half_angle * self.distance

    @property
    def threshold(self) -> float:
        """Detection threshold, derived from the false-alarm rate when unset."""
        if self.detection_threshold is not None:
            return self.detection_threshold
        return self.noise_std * gaussian_q_inv(self.false_alarm_prob)

    def replace(self, **changes: Any) -> "SystemParams":
        """Copy with fields changed, validated."""
        return validate(dataclasses.replace(self, **changes))


_POSITIVE = (
    "total_energy",
    "distance",
    "lidar_half_angle",
    "fso_half_angle",
    "lidar_aperture_radius",
    "radar_cross_section",
    "uav_aperture_radius",
    "focal_length",
    "array_area",
    "spot_radius",
    "wavelength",
    "noise_std",
    "t1",
    "t2",
)


def _is_real(x: Any) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and not math.isnan(x)


def validate(params: SystemParams) -> SystemParams:
    """Check every invariant and return a normalized copy.

    The returned object has enum fields coerced from strings. An unset detection
    threshold stays unset and is derived on access (:attr:`SystemParams.threshold`)
    as ``noise_std * Q^-1(false_alarm_prob)``, so replacing ``noise_std`` on a
    validated object keeps the two consistent. Validation is idempotent.

    Raises
    ------
    GeometricInfeasibilityError
        If ``uav_aperture_radius >= fso_half_angle * distance`` (alongside any
        other violation).
    ParameterError
        For every other violated invariant, reported by field name.
    """
    bad: list[tuple[str, str]] = []
    p = params

    for name in _POSITIVE:
        v = getattr(p, name)
        if not _is_real(v) or not math.isfinite(v) or v <= 0:
            bad.append((name, f"must be a finite positive number, got {v!r}"))

    for name in ("azimuth", "elevation"):
        v = getattr(p, name)
        if not _is_real(v) or not 0.0 < v < math.pi / 2:
            bad.append((name, f"must lie in (0, pi/2), got {v!r}"))

    if not _is_real(p.photoconversion_efficiency) or not 0.0 < p.photoconversion_efficiency <= 1.0:
        bad.append(("photoconversion_efficiency", "must lie in (0, 1]"))
    if not _is_real(p.false_alarm_prob) or not 0.0 < p.false_alarm_prob < 1.0:
        bad.append(("false_alarm_prob", "must lie in (0, 1)"))
    if p.detection_threshold is not None and not _is_real(p.detection_threshold):
        bad.append(("detection_threshold", "must be a real number"))
    if p.photon_energy_override is not None and (
        not _is_real(p.photon_energy_override) or not p.photon_energy_override > 0
    ):
        bad.append(("photon_energy_override", "must be positive"))

    n0 = p.max_pulses
    if isinstance(n0, float) and n0.is_integer():
        n0 = int(n0)
    if not isinstance(n0, int) or isinstance(n0, bool) or n0 < 2:
        bad.append(("max_pulses", f"must be an integer >= 2, got {p.max_pulses!r}"))

    enums: dict[str, Any] = {}
    for name, cls in (
        ("sphere_shape", SphereShape),
        ("energy_model", EnergyModel),
        ("normalization_mode", NormalizationMode),
        ("hoyt_convention", HoytConvention),
    ):
        try:
            enums[name] = cls(getattr(p, name))
        except ValueError:
            choices = ", ".join(m.value for m in cls)
            bad.append((name, f"must be one of {{{choices}}}, got {getattr(p, name)!r}"))

    geometric = False
    if not any(f in ("fso_half_angle", "lidar_half_angle") for f, _ in bad):
        if not p.fso_half_angle < p.lidar_half_angle:
            bad.append(("fso_half_angle", "must be smaller than lidar_half_angle"))
    if not any(f in ("fso_half_angle", "distance", "uav_aperture_radius") for f, _ in bad):
        if not p.uav_aperture_radius < p.fso_half_angle * p.distance:
            geometric = True
            bad.append(
                (
                    "uav_aperture_radius",
                    "geometrically infeasible: UAV aperture radius "
                    f"{p.uav_aperture_radius!r} m is not smaller than the FSO "
                    f"footprint radius {p.fso_half_angle * p.distance!r} m",
                )
            )

    if bad:
        raise (GeometricInfeasibilityError if geometric else ParameterError)(bad)

    threshold = None if p.detection_threshold is None else float(p.detection_threshold)
    return dataclasses.replace(p, max_pulses=n0, detection_threshold=threshold, **enums)


def default_params(**overrides: Any) -> SystemParams:
    """Validated defaults, optionally with field overrides."""
    return validate(SystemParams(**overrides))


# --- config file ---------------------------------------------------------------

CONFIG_KEYS: dict[str, str] = {
    "total_energy_j": "total_energy",
    "distance_m": "distance",
    "lidar_half_angle_rad": "lidar_half_angle",
    "fso_half_angle_rad": "fso_half_angle",
    "lidar_aperture_radius_m": "lidar_aperture_radius",
    "radar_cross_section_m2": "radar_cross_section",
    "uav_aperture_radius_m": "uav_aperture_radius",
    "azimuth_rad": "azimuth",
    "elevation_rad": "elevation",
    "focal_length_m": "focal_length",
    "array_area_m2": "array_area",
    "spot_radius_m": "spot_radius",
    "wavelength_m": "wavelength",
    "photoconversion_efficiency": "photoconversion_efficiency",
    "noise_std": "noise_std",
    "detection_threshold": "detection_threshold",
    "false_alarm_prob": "false_alarm_prob",
    "t1_s": "t1",
    "t2_s": "t2",
    "max_pulses": "max_pulses",
    "sphere_shape": "sphere_shape",
    "energy_model": "energy_model",
    "normalization_mode": "normalization_mode",
    "photon_energy_j": "photon_energy_override",
    "hoyt_q_convention": "hoyt_convention",
}
_FIELD_TO_KEY = {v: k for k, v in CONFIG_KEYS.items()}
_OPTIONAL = {"detection_threshold", "photon_energy_override"}
_ENUM_FIELDS = {
    "sphere_shape": SphereShape,
    "energy_model": EnergyModel,
    "normalization_mode": NormalizationMode,
    "hoyt_convention": HoytConvention,
}


def _parse_value(key: str, raw: str) -> Any:
    name = CONFIG_KEYS[key]
    raw = raw.strip()
    if name in _OPTIONAL and raw.lower() in ("", "none", "auto"):
        return None
    if name in _ENUM_FIELDS:
        try:
            return _ENUM_FIELDS[name](raw.lower())
        except ValueError:
            choices = ", ".join(m.value for m in _ENUM_FIELDS[name])
            raise ConfigError(f"{key}: expected one of {{{choices}}}, got {raw!r}") from None
    if name == "max_pulses":
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {raw!r}") from None


def parse_assignments(lines: Iterable[str], source: str = "<config>") -> dict[str, Any]:
    """Parse ``key = value`` lines into a ``{field_name: value}`` mapping."""
    out: dict[str, Any] = {}
    for lineno, line in enumerate(lines, 1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line.rstrip()!r}")
        key, raw = (s.strip() for s in text.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown config key {key!r}")
        out[CONFIG_KEYS[key]] = _parse_value(key, raw)
    return out


def load_config(path: str | Path | None = None, overrides: Iterable[str] = ()) -> SystemParams:
    """Build validated parameters from the defaults, a config file and overrides.

    ``overrides`` are ``key=value`` strings using the same keys as the file and
    are applied last.
    """
    values: dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        values.update(parse_assignments(text.splitlines(), str(path)))
    values.update(parse_assignments(overrides, "--set"))
    return validate(SystemParams(**values))


def params_to_config(params: SystemParams) -> dict[str, Any]:
    """Resolved parameters keyed by config names, JSON-serializable."""
    out: dict[str, Any] = {}
    for f in dataclasses.fields(params):
        v = getattr(params, f.name)
        out[_FIELD_TO_KEY[f.name]] = v.value if isinstance(v, Enum) else v
    out["detection_threshold_resolved"] = params.threshold
    out["lidar_beam_radius_m"] = params.lidar_beam_radius
    out["fso_beam_radius_m"] = params.fso_beam_radius
    return out


def format_config(params: SystemParams) -> str:
    """Render parameters in the config file format (round-trips through load_config)."""
    lines = []
    for f in dataclasses.fields(params):
        v = getattr(params, f.name)
        if v is None:
            continue
        if isinstance(v, Enum):
            v = v.value
        elif isinstance(v, float):
            v = repr(v)
        lines.append(f"{_FIELD_TO_KEY[f.name]} = {v}")
    return "\n".join(lines) + "\n"


def config_keys() -> Mapping[str, str]:
    return dict(CONFIG_KEYS)
