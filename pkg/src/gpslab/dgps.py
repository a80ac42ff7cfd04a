"""Differential corrections: reference-station generation, rover application,
post-processing merge, and the inverted (fleet) variant.

A surveyed station inverts the usual problem: it knows where it is and asks
what each satellite's pseudorange should have been. The per-satellite
difference, with the station's own clock removed as the mean of the raw
differences, is the correction a nearby rover adds to its measurements.
The mean-removal convention leaves every correction set offset by a common
constant, which the rover's clock estimate absorbs, exactly as a receiver
clock would.
"""

from dataclasses import dataclass, field

import numpy as np

from .constellation import Constellation
from .errors import CorrectionError, StaleCorrectionError
from .formats import read_observations
from .geo import EARTH_RADIUS, SPEED_OF_LIGHT, GeodeticPosition, geodetic_to_ecef
from .measurement import (
    ObservationEpoch,
    PseudorangeObservation,
    SatObservation,
    satellite_states,
    true_range,
)
from .solver import PvtSolution, geometry_matrix, solve_pvt

DEFAULT_MAX_AGE_S = 5.0  # staleness window for real-time corrections

# Approximate monitor-site coordinates (degrees, meters); scenario presets only.
PRESET_SITES = {
    "hawaii": (21.5, -158.0, 0.0),
    "kwajalein": (8.7, 167.7, 0.0),
    "diego-garcia": (-7.3, 72.4, 0.0),
    "ascension": (-7.9, -14.4, 0.0),
    "colorado-springs": (38.8, -104.5, 1800.0),
}


@dataclass(eq=False)
class ReferenceStation:
    """Surveyed reference receiver; its clock is estimated fresh each epoch."""

    id: str
    position: np.ndarray  # ECEF, known truth

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        height = abs(float(np.linalg.norm(self.position)) - EARTH_RADIUS)
        if height > 10_000.0:
            raise ValueError("surveyed position more than 10 km from the surface")

    @classmethod
    def at_site(cls, name: str):
        if name not in PRESET_SITES:
            raise ValueError(f"unknown site {name!r}; presets: {sorted(PRESET_SITES)}")
        lat, lon, alt = PRESET_SITES[name]
        return cls(id=name, position=geodetic_to_ecef(
            GeodeticPosition.from_degrees(lat, lon, alt)))


@dataclass
class CorrectionSet:
    epoch: float
    station: str
    entries: dict                      # svn -> pseudorange correction, m
    station_clock_estimate: float = None  # s, diagnostic


@dataclass
class CorrectedSolutionLog:
    station: str
    solutions: list = field(default_factory=list)   # (epoch, PvtSolution)
    skipped_epochs: list = field(default_factory=list)
    dropped_satellites: int = 0


@dataclass(eq=False)
class FleetReport:
    """What an inverted-mode rover transmits: its fix, not its raw observables."""

    rover_id: str
    epoch: float
    solution: PvtSolution
    svns: tuple


def compute_corrections(station: ReferenceStation, obs: ObservationEpoch,
                        sat_states: dict) -> CorrectionSet:
    """Per-satellite pseudorange corrections from a surveyed station.

    Needs at least four satellites so the station clock (estimated as the
    mean of the raw expected-minus-measured differences, after removing the
    known satellite clocks) separates from the per-satellite errors.
    """
    if len(obs.observations) < 4:
        raise CorrectionError(
            f"cannot separate station clock: {len(obs.observations)} < 4 satellites")
    svns, raw = [], []
    for o in obs.observations:
        svn = o.pseudorange.sat.svn
        if svn not in sat_states:
            raise CorrectionError(f"no satellite state for SVN {svn}")
        sat = sat_states[svn]
        expected = true_range(sat.position, station.position)
        raw.append(expected + sat.clock_bias * 299_792_458.0 - o.pseudorange.pr_l1)
        svns.append(svn)
    raw = np.array(raw)
    clock_term = float(raw.mean())
    entries = {svn: float(r - clock_term) for svn, r in zip(svns, raw)}
    return CorrectionSet(epoch=obs.epoch, station=station.id, entries=entries,
                         station_clock_estimate=clock_term / 299_792_458.0)


def apply_corrections(rover_obs: ObservationEpoch, corr: CorrectionSet,
                      max_age_s: float = DEFAULT_MAX_AGE_S):
    """Add the station's corrections to a rover epoch.

    Corrections are derived from L1 and applied to both code observables;
    with the ionosphere on, L2 keeps its inter-frequency difference.
    Returns (corrected epoch, dropped satellite count). Raises
    StaleCorrectionError outside the staleness window and CorrectionError
    when no satellite matches.
    """
    age = abs(rover_obs.epoch - corr.epoch)
    if age > max_age_s:
        raise StaleCorrectionError(
            f"corrections are {age:.3f} s old (window {max_age_s:.3f} s)", age_s=age)
    corrected, dropped = [], 0
    for o in rover_obs.observations:
        svn = o.pseudorange.sat.svn
        if svn not in corr.entries:
            dropped += 1
            continue
        prc = corr.entries[svn]
        corrected.append(SatObservation(
            pseudorange=PseudorangeObservation(
                sat=o.pseudorange.sat,
                pr_l1=o.pseudorange.pr_l1 + prc,
                pr_l2=o.pseudorange.pr_l2 + prc,
                epoch=o.pseudorange.epoch),
            carrier=o.carrier,
            look=o.look,
        ))
    if not corrected:
        raise CorrectionError("no satellites match the correction set")
    return (ObservationEpoch(epoch=rover_obs.epoch,
                             receiver_truth=rover_obs.receiver_truth,
                             observations=corrected), dropped)


def correct_and_solve(rover_obs: ObservationEpoch, corr: CorrectionSet,
                      sat_states: dict, max_age_s: float = DEFAULT_MAX_AGE_S,
                      mode: str = "l1") -> tuple:
    """apply_corrections followed by a standard solve; the per-epoch DGPS step."""
    corrected, dropped = apply_corrections(rover_obs, corr, max_age_s=max_age_s)
    return solve_pvt(corrected, sat_states, mode=mode), dropped


def post_process(rover_log: str, ref_log: str, ref_position,
                 constellation: Constellation, station_id: str = "ref",
                 mode: str = "l1") -> CorrectedSolutionLog:
    """Merge recorded rover and reference logs; no real-time link involved.

    Epochs are matched exactly on their formatted epoch_s field; rover
    epochs missing from the reference log are skipped and reported. The
    arithmetic path per epoch is identical to the real-time flow, so
    identical inputs give bit-identical solutions.
    """
    station = ReferenceStation(id=station_id, position=ref_position)
    rover_epochs = read_observations(rover_log, constellation)
    ref_epochs = {f"{e.epoch:.6f}": e for e in read_observations(ref_log, constellation)}
    log = CorrectedSolutionLog(station=station_id)
    for rover in rover_epochs:
        key = f"{rover.epoch:.6f}"
        if key not in ref_epochs:
            log.skipped_epochs.append(rover.epoch)
            continue
        states = satellite_states(constellation, rover.epoch)
        corr = compute_corrections(station, ref_epochs[key], states)
        solution, dropped = correct_and_solve(rover, corr, states, mode=mode)
        log.dropped_satellites += dropped
        log.solutions.append((rover.epoch, solution))
    return log


def inverted_dgps(fleet_reports, corr: CorrectionSet, sat_states: dict) -> list:
    """Apply corrections to already-computed fleet fixes at the tracking station.

    Rovers in this mode transmit standard fixes, not observables, so the
    range corrections are projected into position space to first order
    through each rover's own geometry matrix. Returns a list of
    (rover_id, corrected position).
    """
    results = []
    for report in fleet_reports:
        prc = []
        for svn in report.svns:
            if svn not in corr.entries:
                raise CorrectionError(
                    f"report from {report.rover_id!r} uses SVN {svn} "
                    "absent from the correction set")
            if svn not in sat_states:
                raise CorrectionError(f"no satellite state for SVN {svn}")
            prc.append(corr.entries[svn])
        sat_pos = np.array([sat_states[s].position for s in report.svns])
        g = geometry_matrix(sat_pos, report.solution.position)
        delta, *_ = np.linalg.lstsq(g, np.array(prc), rcond=None)
        results.append((report.rover_id, report.solution.position + delta[:3]))
    return results
