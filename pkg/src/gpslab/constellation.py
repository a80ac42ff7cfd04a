"""Nominal 24-satellite constellation: construction, propagation, visibility.

The nominal build places four satellites in each of six orbital planes
labelled A through F, planes spaced 60 degrees in right ascension, all at
26,600 km radius and 55 degrees inclination on perfectly circular orbits.
Within a plane the slots are 90 degrees apart; successive planes are offset
by 15 degrees of in-plane phase so the geometry never degenerates into a
synchronized lattice. Both spacings are documented constants so runs are
reproducible.
"""

import math
from dataclasses import dataclass

import numpy as np

from .geo import (
    EARTH_RADIUS,
    NOMINAL_INCLINATION,
    ORBIT_PERIOD,
    ORBIT_RADIUS,
    GeodeticPosition,
    enu_basis,
    geodetic_to_ecef,
    inertial_to_ecef,
)

PLANE_NAMES = "ABCDEF"
SLOTS_PER_PLANE = 4
RAAN_SPACING = math.radians(60.0)        # rad between planes
SLOT_SPACING = math.radians(90.0)        # rad between slots within a plane
PLANE_PHASE_OFFSET = math.radians(15.0)  # rad of extra in-plane phase per plane


@dataclass(frozen=True)
class SatelliteId:
    """Plane/slot designation plus the NAVSTAR space vehicle number."""

    plane: str
    slot: int
    svn: int

    def __post_init__(self):
        if self.plane not in PLANE_NAMES:
            raise ValueError(f"plane {self.plane!r} not in {PLANE_NAMES}")
        if not 1 <= self.slot <= SLOTS_PER_PLANE:
            raise ValueError(f"slot {self.slot} outside 1..{SLOTS_PER_PLANE}")
        if self.svn <= 0:
            raise ValueError("svn must be positive")

    @property
    def label(self) -> str:
        return f"{self.plane}{self.slot}"


@dataclass(frozen=True)
class OrbitalElements:
    """Circular-orbit description of one satellite (no eccentricity)."""

    id: SatelliteId
    radius: float          # m
    inclination: float     # rad
    raan: float            # rad, orientation of the orbital plane
    phase_at_epoch: float  # rad, in-plane position at t = 0
    period: float          # s

    def __post_init__(self):
        if self.radius <= EARTH_RADIUS:
            raise ValueError("orbit radius must exceed the Earth radius")
        if self.period <= 0:
            raise ValueError("period must be positive")


@dataclass(frozen=True)
class Constellation:
    satellites: tuple

    def by_svn(self, svn: int) -> OrbitalElements:
        for el in self.satellites:
            if el.id.svn == svn:
                return el
        raise KeyError(f"no satellite with SVN {svn}")

    def __len__(self):
        return len(self.satellites)


@dataclass(frozen=True)
class LookAngles:
    """Elevation/azimuth of a satellite seen from a ground observer.

    range_m may be NaN for records reconstructed from observation logs,
    which do not carry the geometric range.
    """

    elevation: float  # rad, [-pi/2, pi/2]
    azimuth: float    # rad, [0, 2*pi)
    range_m: float    # m

    def __post_init__(self):
        if not -math.pi / 2 <= self.elevation <= math.pi / 2:
            raise ValueError("elevation outside [-pi/2, pi/2]")
        if not 0.0 <= self.azimuth < 2.0 * math.pi:
            raise ValueError("azimuth outside [0, 2*pi)")
        if not math.isnan(self.range_m) and self.range_m <= 0:
            raise ValueError("range must be positive")


def build_nominal_constellation(svn_base: int = 1) -> Constellation:
    """Build the 24-satellite nominal constellation.

    SVNs are assigned sequentially from svn_base in plane-then-slot order
    (A1, A2, ... F4).
    """
    satellites = []
    svn = svn_base
    for plane_index, plane in enumerate(PLANE_NAMES):
        raan = plane_index * RAAN_SPACING
        for slot in range(1, SLOTS_PER_PLANE + 1):
            phase = (slot - 1) * SLOT_SPACING + plane_index * PLANE_PHASE_OFFSET
            satellites.append(OrbitalElements(
                id=SatelliteId(plane=plane, slot=slot, svn=svn),
                radius=ORBIT_RADIUS,
                inclination=NOMINAL_INCLINATION,
                raan=raan,
                phase_at_epoch=phase,
                period=ORBIT_PERIOD,
            ))
            svn += 1
    return Constellation(satellites=tuple(satellites))


def propagate_inertial(el: OrbitalElements, t: float) -> np.ndarray:
    """Inertial-frame position at time t; |result| = radius, periodic in t."""
    u = el.phase_at_epoch + 2.0 * math.pi * t / el.period
    in_plane = np.array([el.radius * math.cos(u), el.radius * math.sin(u), 0.0])
    cos_i, sin_i = math.cos(el.inclination), math.sin(el.inclination)
    tilted = np.array([
        in_plane[0],
        cos_i * in_plane[1],
        sin_i * in_plane[1],
    ])
    cos_o, sin_o = math.cos(el.raan), math.sin(el.raan)
    return np.array([
        cos_o * tilted[0] - sin_o * tilted[1],
        sin_o * tilted[0] + cos_o * tilted[1],
        tilted[2],
    ])


def propagate(el: OrbitalElements, t: float) -> np.ndarray:
    """ECEF position at time t (inertial propagation plus Earth rotation)."""
    return inertial_to_ecef(propagate_inertial(el, t), t)


def look_angles(observer: GeodeticPosition, sat_ecef) -> LookAngles:
    """Elevation, azimuth, range of a satellite from a ground observer.

    Elevation is the angle of the observer-to-satellite vector above the
    local horizon plane; azimuth is measured clockwise from north.
    Raises ValueError if the two points coincide.
    """
    obs_ecef = geodetic_to_ecef(observer)
    delta = np.asarray(sat_ecef, dtype=float) - obs_ecef
    rng = float(np.linalg.norm(delta))
    if rng == 0.0:
        raise ValueError("satellite coincides with observer")
    east, north, up = enu_basis(observer.latitude, observer.longitude)
    unit = delta / rng
    elevation = math.asin(max(-1.0, min(1.0, float(up @ unit))))
    azimuth = math.atan2(float(east @ delta), float(north @ delta)) % (2.0 * math.pi)
    return LookAngles(elevation=elevation, azimuth=azimuth, range_m=rng)


def visible_satellites(c: Constellation, observer: GeodeticPosition,
                       mask: float, t: float) -> list:
    """Satellites at or above the elevation mask, sorted by descending elevation.

    Parameters
    ----------
    c : Constellation
    observer : GeodeticPosition
    mask : float
        Elevation mask in radians, [0, pi/2).
    t : float
        Simulation time in seconds.

    Returns
    -------
    list of (SatelliteId, LookAngles)
    """
    if not 0.0 <= mask < math.pi / 2:
        raise ValueError("mask outside [0, pi/2)")
    rows = []
    for el in c.satellites:
        angles = look_angles(observer, propagate(el, t))
        if angles.elevation >= mask:
            rows.append((el.id, angles))
    rows.sort(key=lambda item: -item[1].elevation)
    return rows


def elevations_grid(observer_ecef: np.ndarray, sat_ecef: np.ndarray) -> np.ndarray:
    """Vectorized elevations (rad) for many observers x many satellites.

    observer_ecef: (n, 3) surface points; sat_ecef: (m, 3). Returns (n, m).
    Used by survey outputs (visibility/DOP maps) where per-pair calls would
    dominate runtime.
    """
    observer_ecef = np.asarray(observer_ecef, dtype=float)
    sat_ecef = np.asarray(sat_ecef, dtype=float)
    up = observer_ecef / np.linalg.norm(observer_ecef, axis=1, keepdims=True)
    delta = sat_ecef[None, :, :] - observer_ecef[:, None, :]
    rng = np.linalg.norm(delta, axis=2)
    sin_el = np.einsum("nmk,nk->nm", delta, up) / rng
    return np.arcsin(np.clip(sin_el, -1.0, 1.0))
