"""Physical constants and spherical-Earth coordinate frames.

Every position handled by this package is either a geodetic triple on the
spherical Earth model or a 3-vector in the Earth-centered, Earth-fixed
(ECEF) frame. Satellite motion is integrated in an inertial frame and
rotated into ECEF, so the ground rotates under the constellation. The
rotation angle is zero at scenario start (t = 0).
"""

import math
from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0                      # m/s
EARTH_RADIUS = 6_371_000.0                          # m, spherical Earth
SIDEREAL_DAY = 86_164.1                             # s
EARTH_ROTATION_RATE = 2.0 * math.pi / SIDEREAL_DAY  # rad/s

F0 = 10.23e6                                        # Hz, fundamental frequency
F_L1 = 154.0 * F0                                   # Hz, 1575.42 MHz
F_L2 = 120.0 * F0                                   # Hz, 1227.60 MHz
WAVELENGTH_L1 = SPEED_OF_LIGHT / F_L1               # m, ~0.1903
WAVELENGTH_L2 = SPEED_OF_LIGHT / F_L2               # m, ~0.2442

ORBIT_RADIUS = 26_600e3                             # m, geocentric
ORBIT_PERIOD = 43_080.0                             # s, 11 h 58 min
NOMINAL_INCLINATION = math.radians(55.0)            # rad


@dataclass(frozen=True)
class GeodeticPosition:
    """Latitude/longitude in radians, altitude in meters above the sphere.

    Longitude follows the (-pi, pi] convention; at the poles the longitude
    of a converted ECEF point is 0 by convention.
    """

    latitude: float
    longitude: float
    altitude: float = 0.0

    def __post_init__(self):
        if not -math.pi / 2 <= self.latitude <= math.pi / 2:
            raise ValueError(f"latitude {self.latitude!r} outside [-pi/2, pi/2]")
        if not -math.pi < self.longitude <= math.pi:
            raise ValueError(f"longitude {self.longitude!r} outside (-pi, pi]")
        if not math.isfinite(self.altitude):
            raise ValueError("altitude must be finite")

    @classmethod
    def from_degrees(cls, lat_deg: float, lon_deg: float, alt_m: float = 0.0):
        lon = math.radians(lon_deg)
        # normalize into (-pi, pi]
        lon = lon - 2.0 * math.pi * math.floor((lon + math.pi) / (2.0 * math.pi))
        if lon <= -math.pi:
            lon += 2.0 * math.pi
        return cls(math.radians(lat_deg), lon, alt_m)


def geodetic_to_ecef(g: GeodeticPosition) -> np.ndarray:
    """ECEF position of a geodetic point; |result| = EARTH_RADIUS + altitude."""
    r = EARTH_RADIUS + g.altitude
    cos_lat = math.cos(g.latitude)
    return np.array([
        r * cos_lat * math.cos(g.longitude),
        r * cos_lat * math.sin(g.longitude),
        r * math.sin(g.latitude),
    ])


def ecef_to_geodetic(p) -> GeodeticPosition:
    """Inverse of geodetic_to_ecef. Raises ValueError for the zero vector."""
    p = np.asarray(p, dtype=float)
    r = float(np.linalg.norm(p))
    if r == 0.0:
        raise ValueError("undefined direction: zero ECEF vector")
    lat = math.asin(max(-1.0, min(1.0, p[2] / r)))
    lon = math.atan2(p[1], p[0]) if (p[0] != 0.0 or p[1] != 0.0) else 0.0
    if lon == -math.pi:
        lon = math.pi
    return GeodeticPosition(lat, lon, r - EARTH_RADIUS)


def rotation_about_z(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def inertial_to_ecef(p_inertial, t: float) -> np.ndarray:
    """Rotate an inertial-frame vector into ECEF at simulation time t.

    The Earth has turned by EARTH_ROTATION_RATE * t since scenario start, so
    ECEF coordinates of an inertially fixed point rotate by the opposite
    angle. Norm is preserved.
    """
    return rotation_about_z(-EARTH_ROTATION_RATE * t) @ np.asarray(p_inertial, dtype=float)


def enu_basis(latitude: float, longitude: float) -> np.ndarray:
    """Rows are the east, north, up unit vectors expressed in ECEF."""
    sin_lat, cos_lat = math.sin(latitude), math.cos(latitude)
    sin_lon, cos_lon = math.sin(longitude), math.cos(longitude)
    return np.array([
        [-sin_lon, cos_lon, 0.0],
        [-sin_lat * cos_lon, -sin_lat * sin_lon, cos_lat],
        [cos_lat * cos_lon, cos_lat * sin_lon, sin_lat],
    ])
