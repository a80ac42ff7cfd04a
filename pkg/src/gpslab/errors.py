"""Exception types shared across the package."""


class GpsLabError(Exception):
    """Base class for all domain errors raised by gpslab."""


class DegenerateGeometryError(GpsLabError):
    """Satellite geometry does not support a solution (collinear, rank-deficient)."""


class NoIntersectionError(GpsLabError):
    """Range spheres do not mutually intersect."""

    def __init__(self, message, violations=None):
        super().__init__(message)
        # per-sphere |distance - range| magnitudes at the closest feasible point
        self.violations = tuple(violations) if violations is not None else ()


class AmbiguousFixError(GpsLabError):
    """Both trilateration candidates are equally plausible; a fourth measurement is needed."""


class InsufficientSatellitesError(GpsLabError):
    """Fewer usable satellites than the solve requires."""


class CorrectionError(GpsLabError):
    """Differential correction cannot be computed or applied."""


class StaleCorrectionError(CorrectionError):
    """Correction set is older than the allowed staleness window."""

    def __init__(self, message, age_s):
        super().__init__(message)
        self.age_s = age_s


class AmbiguityError(GpsLabError):
    """Carrier-phase integer ambiguity search failed or was rejected."""


class ScenarioError(GpsLabError):
    """Scenario file is malformed or holds out-of-range values."""
