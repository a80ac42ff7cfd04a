"""Tropospheric and ionospheric delay models and the dual-frequency combinations.

The troposphere is a two-part zenith delay (hydrostatic "dry" plus "wet")
mapped to slant with 1/sin(elevation); the defaults make the dry part
exactly 90% of the total. The ionosphere is the first-order group delay
a / f^2. Combining the L1 and L2 observables cancels that term: the
combination is exposed both literally, as

    pr_l1 - (f_L2^2 / f_L1^2) * pr_l2

which scales the geometric and clock content by (1 - f_L2^2/f_L1^2), and
in normalized form with that scale divided back out, which is what the
solver consumes.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

from .geo import F_L1, F_L2, SPEED_OF_LIGHT

# (f_L2 / f_L1)^2 = (120/154)^2, the coefficient of the L2 observable
FREQ_RATIO_SQ = (F_L2 / F_L1) ** 2


@dataclass(frozen=True)
class TroposphereModel:
    zenith_dry: float = 2.25  # m
    zenith_wet: float = 0.25  # m

    def __post_init__(self):
        if self.zenith_dry < 0 or self.zenith_wet < 0:
            raise ValueError("zenith delays must be non-negative")


@dataclass(frozen=True)
class IonosphereModel:
    """First-order ionosphere: slant group delay = a / f^2 (a in m*Hz^2)."""

    a: float = 0.0

    def __post_init__(self):
        if self.a < 0:
            raise ValueError("ionospheric parameter must be non-negative")

    @classmethod
    def from_l1_delay(cls, delay_m: float):
        """Model whose delay at the L1 frequency equals delay_m."""
        return cls(a=delay_m * F_L1 ** 2)


class TropoDelay(NamedTuple):
    total: float  # m
    dry: float    # m
    wet: float    # m


def tropo_delay(model: TroposphereModel, elevation: float) -> TropoDelay:
    """Slant tropospheric delay at an elevation angle (rad), split dry/wet.

    Raises ValueError for elevations at or below the horizon, where the
    1/sin mapping has no meaning.
    """
    if elevation <= 0.0:
        raise ValueError("below horizon: elevation must be positive")
    mapping = 1.0 / math.sin(elevation)
    dry = model.zenith_dry * mapping
    wet = model.zenith_wet * mapping
    return TropoDelay(total=dry + wet, dry=dry, wet=wet)


def iono_delay(model: IonosphereModel, f: float) -> float:
    """First-order ionospheric group delay a / f^2 in meters."""
    if f <= 0.0:
        raise ValueError("frequency must be positive")
    return model.a / f ** 2


class IonoFreePseudorange(NamedTuple):
    literal_m: float     # pr_l1 - (f_L2^2/f_L1^2) * pr_l2
    normalized_m: float  # literal / (1 - f_L2^2/f_L1^2)


def iono_free_pseudorange(pr_l1: float, pr_l2: float) -> IonoFreePseudorange:
    """Ionosphere-free combination of the two code observables (meters).

    When the inputs follow the first-order model, the normalized value
    equals the geometric range plus clock terms with the a / f^2 term
    cancelled exactly.
    """
    literal = pr_l1 - FREQ_RATIO_SQ * pr_l2
    return IonoFreePseudorange(literal_m=literal,
                               normalized_m=literal / (1.0 - FREQ_RATIO_SQ))


class IonoFreeCarrier(NamedTuple):
    literal_m: float      # combination of the phase-derived pseudoranges
    normalized_m: float   # literal / (1 - f_L2^2/f_L1^2)
    wavelength_m: float   # effective wavelength of the combined signal


def iono_free_carrier(phi_l1: float, phi_l2: float) -> IonoFreeCarrier:
    """Ionosphere-free combination of the two carrier phases (cycles in).

    The combination acts on phase-derived pseudoranges, so each input is
    scaled by its wavelength first; only in range units does the
    first-order term cancel. The ambiguity content of the result is no
    longer an integer number of any single wavelength, which is why
    integer fixing happens on L1 alone (see the carrier module).
    """
    lambda_l1 = SPEED_OF_LIGHT / F_L1
    lambda_l2 = SPEED_OF_LIGHT / F_L2
    literal = lambda_l1 * phi_l1 - FREQ_RATIO_SQ * lambda_l2 * phi_l2
    wavelength, _ = iono_free_wavelength()
    return IonoFreeCarrier(literal_m=literal,
                           normalized_m=literal / (1.0 - FREQ_RATIO_SQ),
                           wavelength_m=wavelength)


def iono_free_wavelength() -> tuple:
    """(wavelength m, frequency Hz) of the ionosphere-free signal.

    frequency = (f_L1^2 - f_L2^2) / f_L1, about 60.5 * F0 (618.8 MHz),
    wavelength about 48.5 cm.
    """
    frequency = (F_L1 ** 2 - F_L2 ** 2) / F_L1
    return SPEED_OF_LIGHT / frequency, frequency
