"""Named models with closed-form reference solutions.

Each preset records whatever is known exactly about it: a solution ``z`` of
the reduced equation at a given speed, the critical speed, a front profile,
or the nonexistence of an endpoint derivative of ``q``.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ModelError
from .model import ModelSpec

PHASE_MINUS_INF = float("-inf")


@dataclass(frozen=True)
class Preset:
    """Registry entry.

    Attributes
    ----------
    exact_z, exact_dz : callable, optional
        Solution of the reduced equation at ``exact_z_speed`` and its slope.
    exact_z_right : float, optional
        Boundary value ``z(1)`` of that solution.
    exact_c_star : float, optional
        Critical speed.
    exact_profile : callable, optional
        Profile ``phi(xi)`` normalized by ``phi(0) = 1/2`` at ``exact_z_speed``.
    exact_profile_slope : callable, optional
        Its derivative ``phi'(xi)``.
    profile_xi0 : float, optional
        Right endpoint of the profile support (``inf`` if unbounded).
    profile_kind_at_zero : str, optional
        ``sharp`` or ``classical``.
    missing : tuple of str
        Endpoint derivatives of ``q`` that do not exist (``"dq0"``, ``"dq1"``).
    """

    name: str
    spec: ModelSpec
    description: str
    exact_z: Optional[Callable] = None
    exact_dz: Optional[Callable] = None
    exact_z_speed: Optional[float] = None
    exact_z_right: Optional[float] = None
    exact_c_star: Optional[float] = None
    c_star_basis: Optional[str] = None
    exact_profile: Optional[Callable] = None
    exact_profile_slope: Optional[Callable] = None
    profile_xi0: Optional[float] = None
    profile_kind_at_zero: Optional[str] = None
    profile_slope_at_xi0: Optional[float] = None
    missing: tuple = field(default_factory=tuple)


def _cubic_z(phi):
    phi = np.asarray(phi, dtype=float)
    return phi ** 2 * (phi - 1.0)


def _cubic_dz(phi):
    phi = np.asarray(phi, dtype=float)
    return 3.0 * phi ** 2 - 2.0 * phi


def _sharp_profile(xi):
    xi = np.asarray(xi, dtype=float)
    return np.where(xi < math.log(2.0), 1.0 - 0.5 * np.exp(np.minimum(xi, math.log(2.0))), 0.0)


def _logistic_profile(xi):
    xi = np.asarray(xi, dtype=float)
    return 0.5 * (1.0 - np.tanh(0.5 * xi))


def _sharp_profile_slope(xi):
    xi = np.asarray(xi, dtype=float)
    return np.where(xi < math.log(2.0), -0.5 * np.exp(np.minimum(xi, math.log(2.0))), 0.0)


def _logistic_profile_slope(xi):
    p = _logistic_profile(xi)
    return -p * (1.0 - p)


def _osc1_z(phi):
    phi = np.asarray(phi, dtype=float)
    L = np.log(np.where(phi < 1.0, 1.0 - phi, 1.0))
    return -(2.0 + np.sin(L)) * (1.0 - phi) * phi ** 2


def _osc1_dz(phi):
    phi = np.asarray(phi, dtype=float)
    L = np.log(np.where(phi < 1.0, 1.0 - phi, 1.0))
    return np.cos(L) * phi ** 2 - (2.0 + np.sin(L)) * (2.0 * phi - 3.0 * phi ** 2)


def _osc2_z(phi):
    phi = np.asarray(phi, dtype=float)
    ell = np.log(np.where(phi > 0.0, phi, 1.0))
    return -(2.0 + np.sin(ell)) * (1.0 - phi) ** 2 * phi


def _osc2_dz(phi):
    phi = np.asarray(phi, dtype=float)
    ell = np.log(np.where(phi > 0.0, phi, 1.0))
    return -np.cos(ell) * (1.0 - phi) ** 2 - (2.0 + np.sin(ell)) * (1.0 - phi) * (1.0 - 3.0 * phi)


_CUBIC_FLUX = (0.0, 0.0, -1.5, 1.0)

_REGISTRY = {
    p.name: p for p in [
        Preset(
            name="remark_6_2",
            spec=ModelSpec(f_poly=_CUBIC_FLUX, D_poly=(0.0, 1.0, -1.0),
                           g_poly=(0.0, 0.0, 1.0), name="remark_6_2"),
            description="q = phi^3 (1 - phi), h = 3 phi (phi - 1); critical speed equals h(0) = 0",
            exact_z=_cubic_z, exact_dz=_cubic_dz, exact_z_speed=0.0, exact_z_right=0.0,
            exact_c_star=0.0, c_star_basis="exact solution with z(0) = z(1) = 0 at c = h(0)",
        ),
        Preset(
            name="remark_9_3_model1",
            spec=ModelSpec(f_poly=_CUBIC_FLUX, D_poly=(0.0, 0.0, 1.0),
                           g_poly=(0.0, 1.0, -1.0), name="remark_9_3_model1"),
            description="D = phi^2, g = phi (1 - phi): profile 1 - e^xi / 2, sharp at ln 2",
            exact_z=_cubic_z, exact_dz=_cubic_dz, exact_z_speed=0.0, exact_z_right=0.0,
            exact_c_star=0.0, c_star_basis="same q and h as remark_6_2",
            exact_profile=_sharp_profile, exact_profile_slope=_sharp_profile_slope,
            profile_xi0=math.log(2.0),
            profile_kind_at_zero="sharp", profile_slope_at_xi0=-1.0,
        ),
        Preset(
            name="remark_9_3_model2",
            spec=ModelSpec(f_poly=_CUBIC_FLUX, D_poly=(0.0, 1.0),
                           g_poly=(0.0, 0.0, 1.0, -1.0), name="remark_9_3_model2"),
            description="D = phi, g = phi^2 (1 - phi): logistic profile 1/(1 + e^xi), classical",
            exact_z=_cubic_z, exact_dz=_cubic_dz, exact_z_speed=0.0, exact_z_right=0.0,
            exact_c_star=0.0, c_star_basis="same q and h as remark_6_2",
            exact_profile=_logistic_profile, exact_profile_slope=_logistic_profile_slope,
            profile_xi0=math.inf,
            profile_kind_at_zero="classical", profile_slope_at_xi0=0.0,
        ),
        Preset(
            name="fisher",
            spec=ModelSpec(f_poly=(0.0,), D_poly=(1.0,), g_poly=(0.0, 1.0, -1.0), name="fisher"),
            description="f = 0, D = 1, g = phi (1 - phi); lower and upper speed bounds both equal 2",
            exact_c_star=2.0,
            c_star_basis="h(0) + 2 sqrt(q'(0)) = 2 sqrt(sup q/phi) + sup f/phi = 2",
        ),
        Preset(
            name="counterexample_6_2b",
            spec=ModelSpec(f_poly=(0.0, 0.0, -1.0, -1.0 / 3.0, 0.25), D_poly=(0.0, 0.0, 1.0),
                           g_poly=(0.0, 0.0, 1.0, -1.0), name="counterexample_6_2b"),
            description="q = phi^4 (1 - phi), h = -2 phi - phi^2 (1 - phi); z = -phi^2 at c = 0",
            exact_z=lambda p: -np.asarray(p, dtype=float) ** 2,
            exact_dz=lambda p: -2.0 * np.asarray(p, dtype=float),
            exact_z_speed=0.0, exact_z_right=-1.0, exact_c_star=0.0,
            c_star_basis="z = -phi^2 solves at c = h(0) with z(0) = 0",
        ),
        Preset(
            name="oscillatory_7_2",
            spec=ModelSpec(special="oscillatory_7_2", name="oscillatory_7_2"),
            description="closed-form (h, q) whose solution has no slope at phi = 1",
            exact_z=_osc1_z, exact_dz=_osc1_dz, exact_z_speed=0.0, exact_z_right=0.0,
            missing=("dq1",),
        ),
        Preset(
            name="oscillatory_8_3",
            spec=ModelSpec(special="oscillatory_8_3", name="oscillatory_8_3"),
            description="closed-form (h, q) whose solution has no slope at phi = 0",
            exact_z=_osc2_z, exact_dz=_osc2_dz, exact_z_speed=0.0, exact_z_right=0.0,
            missing=("dq0",),
        ),
    ]
}


def presets():
    """Return the registry entries in a stable order."""
    return [_REGISTRY[k] for k in sorted(_REGISTRY)]


def preset_names():
    return sorted(_REGISTRY)


def get_preset(name):
    try:
        return _REGISTRY[name]
    except KeyError:
        raise ModelError(f"unknown preset {name!r}; known: {', '.join(preset_names())}") from None
