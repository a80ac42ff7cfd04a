"""Forward model: synthesize dual-frequency code and carrier observations.

Each pseudorange follows

    pr_f = rho_true + c*(d_s - d_r) + a/f^2 + tropo + multipath + sa + noise

and each carrier phase (in cycles of its own frequency)

    phase_f = (rho_true + c*(d_s - d_r) - a/f^2 + tropo + multipath)/lambda_f
              + N_f + noise

with the ionospheric term advancing the phase while it delays the code.
Only the a/f^2 term differs between L1 and L2; every other term, including
the noise draw, is shared across the two frequencies.

All randomness comes from named substreams derived from (seed, source,
satellite, epoch, receiver), so toggling one error source never perturbs
another's draws, two receivers sharing a seed see identical satellite-borne
errors (SA dither) but independent local noise, and the same seed always
reproduces a bit-identical epoch.
"""

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .atmosphere import IonosphereModel, TroposphereModel, iono_delay, tropo_delay
from .constellation import Constellation, LookAngles, SatelliteId, propagate, visible_satellites
from .errors import GpsLabError
from .geo import (
    F_L1,
    F_L2,
    SPEED_OF_LIGHT,
    WAVELENGTH_L1,
    WAVELENGTH_L2,
    ecef_to_geodetic,
)

MULTIPATH_FOLDING_ANGLE = math.radians(10.0)  # e-folding elevation of the multipath bias
AMBIGUITY_DRAW_RANGE = 50                     # hidden-truth integers drawn from [-50, 50]


@dataclass(eq=False)
class ReceiverState:
    """Ground-truth receiver: ECEF position, clock offset, optional velocity.

    `name` tags the receiver's local-noise substreams; receivers with
    different names sharing a seed draw independent measurement noise while
    still seeing identical satellite-borne errors.
    """

    position: np.ndarray
    clock_bias: float = 0.0          # s
    velocity: np.ndarray = None      # m/s, defaults to zero
    name: str = "rcvr"

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        self.velocity = (np.zeros(3) if self.velocity is None
                         else np.asarray(self.velocity, dtype=float))


@dataclass(eq=False)
class SatelliteState:
    id: SatelliteId
    position: np.ndarray
    clock_bias: float = 0.0  # s

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)


@dataclass
class ErrorBudget:
    """Switches and magnitudes for every modeled error source.

    A None model means that source is off. `ephemeris_error` maps SVN to an
    ECEF offset applied to the broadcast (solver-side) satellite position,
    not to the geometry that generates the observations.
    """

    iono: IonosphereModel = None
    tropo: TroposphereModel = None
    multipath_amplitude: float = 0.0     # m
    code_noise_sigma: float = 1.0        # m
    phase_noise_sigma: float = 0.01      # cycles
    sa_sigma: float = 0.0                # m, selective availability (off by default)
    ephemeris_error: dict = field(default_factory=dict)
    rng_seed: int = 0

    def __post_init__(self):
        for label, sigma in (("code_noise_sigma", self.code_noise_sigma),
                             ("phase_noise_sigma", self.phase_noise_sigma),
                             ("sa_sigma", self.sa_sigma),
                             ("multipath_amplitude", self.multipath_amplitude)):
            if sigma < 0:
                raise ValueError(f"{label} must be non-negative")
        if self.rng_seed < 0:
            raise ValueError("rng_seed must be non-negative")

    @classmethod
    def quiet(cls, rng_seed: int = 0):
        """All error sources off; useful for closed-loop checks."""
        return cls(code_noise_sigma=0.0, phase_noise_sigma=0.0, rng_seed=rng_seed)


class NoiseStreams:
    """Seed-derived, order-independent random substreams.

    Each draw comes from a fresh generator keyed by (seed, source label,
    satellite, epoch, receiver). Draws therefore do not depend on how many
    other sources are enabled or in which order satellites are processed.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)

    def _rng(self, *key) -> np.random.Generator:
        tag = "|".join(str(k) for k in key).encode()
        digest = hashlib.blake2s(tag, digest_size=8).digest()
        return np.random.default_rng([self.seed, int.from_bytes(digest, "little")])

    @staticmethod
    def _t(t: float) -> str:
        # epochs keyed at the same resolution the observation log uses
        return f"{t:.6f}"

    def code_noise(self, svn: int, t: float, receiver: str) -> float:
        return float(self._rng("code", svn, self._t(t), receiver).standard_normal())

    def phase_noise(self, svn: int, t: float, receiver: str) -> float:
        return float(self._rng("phase", svn, self._t(t), receiver).standard_normal())

    def sa_dither(self, svn: int, t: float) -> float:
        # receiver-independent: common mode across all receivers by design
        return float(self._rng("sa", svn, self._t(t)).standard_normal())

    def ambiguity(self, svn: int, receiver: str, band: str) -> int:
        rng = self._rng("ambiguity", svn, receiver, band)
        return int(rng.integers(-AMBIGUITY_DRAW_RANGE, AMBIGUITY_DRAW_RANGE + 1))


@dataclass(frozen=True)
class PseudorangeObservation:
    sat: SatelliteId
    pr_l1: float  # m
    pr_l2: float  # m
    epoch: float  # s


@dataclass(frozen=True)
class CarrierPhaseObservation:
    sat: SatelliteId
    phase_l1: float     # cycles
    phase_l2: float     # cycles
    ambiguity_l1: int   # hidden truth, kept for closed-loop scoring
    ambiguity_l2: int
    epoch: float


@dataclass(eq=False)
class SatObservation:
    pseudorange: PseudorangeObservation
    carrier: CarrierPhaseObservation
    look: LookAngles


@dataclass(eq=False)
class ObservationEpoch:
    """Everything one receiver measured at one instant.

    receiver_truth is retained for closed-loop scoring when the epoch came
    from the simulator; it is None for epochs parsed back from logs.
    """

    epoch: float
    receiver_truth: ReceiverState
    observations: list

    def svns(self) -> list:
        return [o.pseudorange.sat.svn for o in self.observations]

    def __len__(self):
        return len(self.observations)


def true_range(a, b) -> float:
    """Euclidean distance in meters; symmetric; error on coincident points."""
    d = float(np.linalg.norm(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)))
    if d == 0.0:
        raise ValueError("coincident points have no range")
    return d


def multipath_bias(amplitude: float, elevation: float) -> float:
    """Deterministic elevation-shaped multipath bias (largest near the horizon)."""
    return amplitude * math.exp(-elevation / MULTIPATH_FOLDING_ANGLE)


def satellite_states(c: Constellation, t: float, clock_biases: dict = None,
                     ephemeris_error: dict = None) -> dict:
    """Per-SVN SatelliteState at time t.

    With ephemeris_error given, positions are offset by the per-SVN vectors;
    that is the broadcast picture a solver works from, as opposed to the
    truth geometry the simulator ranges against.
    """
    clock_biases = clock_biases or {}
    ephemeris_error = ephemeris_error or {}
    states = {}
    for el in c.satellites:
        pos = propagate(el, t)
        if el.id.svn in ephemeris_error:
            pos = pos + np.asarray(ephemeris_error[el.id.svn], dtype=float)
        states[el.id.svn] = SatelliteState(id=el.id, position=pos,
                                           clock_bias=clock_biases.get(el.id.svn, 0.0))
    return states


def _common_terms(sat: SatelliteState, rcvr: ReceiverState, look: LookAngles,
                  budget: ErrorBudget, streams: NoiseStreams, t: float):
    if look.elevation <= 0.0:
        raise ValueError("satellite below receiver horizon")
    rho = true_range(sat.position, rcvr.position)
    clock = SPEED_OF_LIGHT * (sat.clock_bias - rcvr.clock_bias)
    tropo = tropo_delay(budget.tropo, look.elevation).total if budget.tropo else 0.0
    mp = multipath_bias(budget.multipath_amplitude, look.elevation)
    sa = (budget.sa_sigma * streams.sa_dither(sat.id.svn, t)
          if budget.sa_sigma > 0 else 0.0)
    return rho, clock, tropo, mp, sa


def simulate_pseudorange(sat: SatelliteState, rcvr: ReceiverState, look: LookAngles,
                         budget: ErrorBudget, streams: NoiseStreams,
                         t: float) -> PseudorangeObservation:
    """One dual-frequency code observation; only the iono term differs by band."""
    rho, clock, tropo, mp, sa = _common_terms(sat, rcvr, look, budget, streams, t)
    noise = (budget.code_noise_sigma * streams.code_noise(sat.id.svn, t, rcvr.name)
             if budget.code_noise_sigma > 0 else 0.0)
    common = rho + clock + tropo + mp + sa + noise
    iono_l1 = iono_delay(budget.iono, F_L1) if budget.iono else 0.0
    iono_l2 = iono_delay(budget.iono, F_L2) if budget.iono else 0.0
    return PseudorangeObservation(sat=sat.id, pr_l1=common + iono_l1,
                                  pr_l2=common + iono_l2, epoch=t)


def simulate_carrier_phase(sat: SatelliteState, rcvr: ReceiverState, look: LookAngles,
                           budget: ErrorBudget, streams: NoiseStreams,
                           t: float) -> CarrierPhaseObservation:
    """One dual-frequency carrier observation with hidden integer ambiguities.

    The ionospheric term enters with the opposite sign to the code
    observable (phase advance vs group delay). Ambiguities are drawn once
    per (satellite, receiver, band) pass and recorded as hidden truth.
    """
    rho, clock, tropo, mp, _ = _common_terms(sat, rcvr, look, budget, streams, t)
    base = rho + clock + tropo + mp
    noise = (budget.phase_noise_sigma * streams.phase_noise(sat.id.svn, t, rcvr.name)
             if budget.phase_noise_sigma > 0 else 0.0)
    n_l1 = streams.ambiguity(sat.id.svn, rcvr.name, "l1")
    n_l2 = streams.ambiguity(sat.id.svn, rcvr.name, "l2")
    iono_l1 = iono_delay(budget.iono, F_L1) if budget.iono else 0.0
    iono_l2 = iono_delay(budget.iono, F_L2) if budget.iono else 0.0
    return CarrierPhaseObservation(
        sat=sat.id,
        phase_l1=(base - iono_l1) / WAVELENGTH_L1 + n_l1 + noise,
        phase_l2=(base - iono_l2) / WAVELENGTH_L2 + n_l2 + noise,
        ambiguity_l1=n_l1,
        ambiguity_l2=n_l2,
        epoch=t,
    )


def simulate_epoch(c: Constellation, rcvr: ReceiverState, t: float, mask: float,
                   budget: ErrorBudget, sat_clock_biases: dict = None) -> ObservationEpoch:
    """Simulate every visible satellite for one receiver at one instant.

    Returns an empty epoch (no observations) when nothing is visible; the
    solver, not the simulator, decides whether that is fatal. Identical
    (scenario, seed) inputs produce a bit-identical epoch.
    """
    try:
        observer = ecef_to_geodetic(rcvr.position)
    except ValueError as exc:
        raise GpsLabError(f"receiver position invalid: {exc}") from exc
    streams = NoiseStreams(budget.rng_seed)
    states = satellite_states(c, t, clock_biases=sat_clock_biases)
    observations = []
    for sat_id, look in visible_satellites(c, observer, mask, t):
        if look.elevation <= 0.0:
            continue  # grazing geometry: the slant mapping is undefined at 0
        sat = states[sat_id.svn]
        observations.append(SatObservation(
            pseudorange=simulate_pseudorange(sat, rcvr, look, budget, streams, t),
            carrier=simulate_carrier_phase(sat, rcvr, look, budget, streams, t),
            look=look,
        ))
    return ObservationEpoch(epoch=t, receiver_truth=rcvr, observations=observations)
