"""Physical parameters, unit conventions, and the fiber-channel estimator.

The model is a pair of microwave cavities (modes c1, c2), each hosting a
magnon mode (m1, m2) and a superconducting qubit (q1, q2), with the cavities
linked through an optical-fiber channel of effective coupling rate J.  All
frequency-like quantities are angular frequencies and share one unit mode:
either bare dimensionless numbers or SI rad/s (entered as nu/2pi in MHz at
the config layer and converted here).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

#: Speed of light used in the fiber-coupling estimate [m/s].
SPEED_OF_LIGHT = 2.998e8


class UnitMode(enum.Enum):
    """Unit convention for all frequency-like fields of :class:`SystemParams`."""

    DIMENSIONLESS = "dimensionless"
    SI_MHZ = "si_mhz"


class ValidationError(ValueError):
    """Raised when parameter invariants fail; lists the offending fields."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("invalid parameters: " + "; ".join(self.problems))


@dataclass(frozen=True)
class SystemParams:
    """The seven rates/frequencies of the two-cavity model plus cavity decay.

    Parameters
    ----------
    omega_c, omega_m, omega_q : float
        Mode angular frequencies (identical for the two cavities by
        symmetry).  In the rotating frame only the differences matter.
    g_m : float
        Magnon-cavity coupling rate.
    g_q : float
        Qubit-cavity coupling rate.
    J : float
        Cavity-cavity (fiber channel) coupling rate.
    Gamma_c : float
        Cavity decay rate feeding the open-system model.
    unit_mode : UnitMode
        Unit convention shared by every frequency-like field.
    """

    omega_c: float = 0.0
    omega_m: float = 0.0
    omega_q: float = 0.0
    g_m: float = 0.0
    g_q: float = 0.0
    J: float = 0.0
    Gamma_c: float = 0.0
    unit_mode: UnitMode = UnitMode.DIMENSIONLESS

    @property
    def r_q(self) -> float:
        """Coupling ratio g_q/g_m."""
        if self.g_m == 0.0:
            raise ZeroDivisionError("r_q undefined for g_m = 0")
        return self.g_q / self.g_m

    @property
    def is_resonant(self) -> bool:
        return self.omega_c == self.omega_m == self.omega_q

    def with_coupling(self, J: float) -> "SystemParams":
        """Copy with a different channel coupling (used by sweeps)."""
        return replace(self, J=J)


@dataclass(frozen=True)
class ChannelSpec:
    """Fiber channel: conversion efficiency and length.

    xi is the microwave-optical conversion efficiency (the converter itself
    is not modeled; only this scalar enters, via J = xi^2 * J_f).
    """

    xi: float
    L: float
    c: float = SPEED_OF_LIGHT

    def __post_init__(self):
        problems = []
        if not 0.0 <= self.xi <= 1.0:
            problems.append(f"xi={self.xi} outside [0, 1]")
        if not self.L > 0.0:
            problems.append(f"L={self.L} must be positive")
        if not self.c > 0.0:
            problems.append(f"c={self.c} must be positive")
        if problems:
            raise ValidationError(problems)


@dataclass(frozen=True)
class CouplingRatio:
    """The ratio r_q = g_q/g_m controlling how peak entanglement is shared.

    r_q = 0 is rejected unless `allow_zero` is set; the zero value is only
    meaningful where a formula's r_q -> 0 limit is explicitly taken.
    """

    r_q: float
    allow_zero: bool = False

    def __post_init__(self):
        if self.r_q < 0.0 or (self.r_q == 0.0 and not self.allow_zero):
            raise ValidationError([f"r_q={self.r_q} must be > 0"])


def validate_params(params: SystemParams) -> SystemParams:
    """Check all :class:`SystemParams` invariants; return the params unchanged.

    Raises
    ------
    ValidationError
        Naming every offending field (negative rates, bad unit mode).
    """
    problems = []
    for name in ("g_m", "g_q", "J", "Gamma_c"):
        value = getattr(params, name)
        if not math.isfinite(value):
            problems.append(f"{name}={value} is not finite")
        elif value < 0.0:
            problems.append(f"{name}={value} must be >= 0")
    for name in ("omega_c", "omega_m", "omega_q"):
        if not math.isfinite(getattr(params, name)):
            problems.append(f"{name} is not finite")
    if not isinstance(params.unit_mode, UnitMode):
        problems.append(f"unit_mode={params.unit_mode!r} is not a UnitMode")
    if problems:
        raise ValidationError(problems)
    return params


def fiber_coupling_rate(L: float, Gamma_c: float) -> float:
    """Fiber coupling rate J_f = sqrt(8 pi c Gamma_c / L).

    Parameters
    ----------
    L : float
        Fiber length in meters.
    Gamma_c : float
        Cavity decay rate as an angular frequency [rad/s].

    Returns
    -------
    float
        J_f in rad/s.  For L = 10 m and Gamma_c = 2pi * 1.8 MHz this is
        about 9.23e7 rad/s.
    """
    if L <= 0.0:
        raise ValidationError([f"L={L} must be positive"])
    if Gamma_c < 0.0:
        raise ValidationError([f"Gamma_c={Gamma_c} must be >= 0"])
    return math.sqrt(8.0 * math.pi * SPEED_OF_LIGHT * Gamma_c / L)


def channel_coupling(xi: float, J_f: float) -> float:
    """Effective cavity-cavity coupling J = xi^2 * J_f."""
    if not 0.0 <= xi <= 1.0:
        raise ValidationError([f"xi={xi} outside [0, 1]"])
    if J_f < 0.0:
        raise ValidationError([f"J_f={J_f} must be >= 0"])
    return xi * xi * J_f


def mhz_to_angular(value_mhz: float) -> float:
    """Convert a frequency given as nu/2pi in MHz to angular rad/s."""
    return 2.0 * math.pi * 1e6 * value_mhz
