"""Position/clock estimation: trilateration, Gauss-Newton PVT, DOP, export check.

The iterative solver works on the unknowns (x, y, z, psi) where psi is the
clock term added to every predicted pseudorange. With the modeling
convention pr = range + c*(d_s - d_r), psi = -c*d_r, so the reported
receiver clock bias is -psi/c and adding b meters to all pseudoranges
shifts the clock estimate by exactly -b/c while leaving the position
unchanged.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .atmosphere import iono_free_pseudorange
from .errors import (
    AmbiguousFixError,
    DegenerateGeometryError,
    InsufficientSatellitesError,
    NoIntersectionError,
)
from .geo import EARTH_RADIUS, SPEED_OF_LIGHT, ecef_to_geodetic, enu_basis
from .measurement import ObservationEpoch

STEP_TOLERANCE = 1e-8          # m, convergence threshold on the update norm
MAX_ITERATIONS = 20
ALTITUDE_CONSTRAINT_WEIGHT = 1e6  # makes the altitude row effectively hard
FEASIBLE_TIE_TOLERANCE = 1.0   # m, candidates closer than this are ambiguous

EXPORT_ALTITUDE_LIMIT = 18_000.0  # m
EXPORT_SPEED_LIMIT = 515.0        # m/s


@dataclass(frozen=True)
class DopValues:
    gdop: float
    pdop: float
    hdop: float
    vdop: float
    tdop: float


@dataclass(eq=False)
class PvtSolution:
    position: np.ndarray
    clock_bias: float        # s
    residuals: dict          # svn -> m, at the final iterate
    iterations: int
    converged: bool
    dop: DopValues = None

    @property
    def residual_rms(self) -> float:
        if not self.residuals:
            return 0.0
        vals = np.array(list(self.residuals.values()))
        return float(np.sqrt(np.mean(vals ** 2)))


@dataclass(eq=False)
class TrilaterationResult:
    point_a: np.ndarray
    point_b: np.ndarray


def trilaterate_three_spheres(centers, ranges) -> TrilaterationResult:
    """Intersect three range spheres exactly.

    Returns the two candidate points. Raises DegenerateGeometryError for
    collinear centers and NoIntersectionError (with per-sphere violation
    magnitudes) when the spheres do not meet.
    """
    p1, p2, p3 = (np.asarray(c, dtype=float) for c in centers)
    r1, r2, r3 = (float(r) for r in ranges)

    ex = p2 - p1
    d = np.linalg.norm(ex)
    if d == 0.0:
        raise DegenerateGeometryError("first two centers coincide")
    ex = ex / d
    p31 = p3 - p1
    i = float(ex @ p31)
    ey = p31 - i * ex
    ey_norm = np.linalg.norm(ey)
    if ey_norm < 1e-9 * max(1.0, np.linalg.norm(p31)):
        raise DegenerateGeometryError("collinear sphere centers")
    ey = ey / ey_norm
    ez = np.cross(ex, ey)
    j = float(ey @ p31)

    x = (r1 ** 2 - r2 ** 2 + d ** 2) / (2.0 * d)
    y = (r1 ** 2 - r3 ** 2 + i ** 2 + j ** 2 - 2.0 * i * x) / (2.0 * j)
    z_sq = r1 ** 2 - x ** 2 - y ** 2
    if z_sq < 0.0:
        # report how badly each sphere misses the closest in-plane point
        closest = p1 + x * ex + y * ey
        violations = [abs(float(np.linalg.norm(closest - c)) - r)
                      for c, r in zip((p1, p2, p3), (r1, r2, r3))]
        raise NoIntersectionError(
            "no solution: spheres do not mutually intersect "
            f"(per-sphere violations {violations[0]:.3f}, "
            f"{violations[1]:.3f}, {violations[2]:.3f} m)",
            violations=violations)
    z = math.sqrt(z_sq)
    base = p1 + x * ex + y * ey
    return TrilaterationResult(point_a=base + z * ez, point_b=base - z * ez)


def select_feasible(result: TrilaterationResult) -> np.ndarray:
    """Pick the candidate whose radius is nearer the Earth surface.

    Raises AmbiguousFixError when the two candidates are equally plausible,
    in which case a fourth measurement would be needed.
    """
    da = abs(float(np.linalg.norm(result.point_a)) - EARTH_RADIUS)
    db = abs(float(np.linalg.norm(result.point_b)) - EARTH_RADIUS)
    if abs(da - db) < FEASIBLE_TIE_TOLERANCE:
        raise AmbiguousFixError("ambiguous candidates: fourth measurement required")
    return result.point_a if da < db else result.point_b


def geometry_matrix(sat_positions, rcvr_pos) -> np.ndarray:
    """Direction-cosine design matrix, one row (-u_x, -u_y, -u_z, 1) per satellite.

    u is the unit receiver-to-satellite vector, so the matrix is the
    Jacobian of the predicted pseudoranges with respect to (position,
    clock term).
    """
    sat_positions = np.asarray(sat_positions, dtype=float)
    rcvr_pos = np.asarray(rcvr_pos, dtype=float)
    delta = sat_positions - rcvr_pos
    ranges = np.linalg.norm(delta, axis=1)
    if np.any(ranges == 0.0):
        raise ValueError("satellite coincides with receiver")
    g = np.empty((len(sat_positions), 4))
    g[:, :3] = -delta / ranges[:, None]
    g[:, 3] = 1.0
    return g


def dilution_of_precision(g: np.ndarray, receiver_ecef) -> DopValues:
    """DOP factors from the geometry matrix.

    The horizontal/vertical split requires the local east-north-up frame,
    hence the receiver position argument. Raises DegenerateGeometryError
    when g^T g is singular (for example, duplicated satellites).
    """
    gtg = g.T @ g
    try:
        q = np.linalg.inv(gtg)
    except np.linalg.LinAlgError as exc:
        raise DegenerateGeometryError("degenerate geometry: singular normal matrix") from exc
    if not np.all(np.isfinite(q)):
        raise DegenerateGeometryError("degenerate geometry: non-finite covariance")
    geo = ecef_to_geodetic(receiver_ecef)
    rot = enu_basis(geo.latitude, geo.longitude)
    q_enu = rot @ q[:3, :3] @ rot.T
    return DopValues(
        gdop=math.sqrt(np.trace(q)),
        pdop=math.sqrt(np.trace(q[:3, :3])),
        hdop=math.sqrt(q_enu[0, 0] + q_enu[1, 1]),
        vdop=math.sqrt(q_enu[2, 2]),
        tdop=math.sqrt(q[3, 3]),
    )


def select_lowest_gdop(candidates, rcvr_pos, k: int):
    """Exhaustively pick the k-subset of satellites minimizing GDOP.

    candidates: sequence of (SatelliteId, ECEF position). Returns
    (list of SatelliteId, gdop). Ties keep the first subset in
    lexicographic candidate order, so the choice is deterministic.
    """
    candidates = list(candidates)
    if k < 4:
        raise ValueError("at least 4 satellites are required for a PVT fix")
    if k > len(candidates):
        raise InsufficientSatellitesError(
            f"need {k} candidates, have {len(candidates)}")
    best_ids, best_gdop = None, math.inf
    for subset in itertools.combinations(candidates, k):
        positions = np.array([pos for _, pos in subset])
        try:
            dop = dilution_of_precision(geometry_matrix(positions, rcvr_pos), rcvr_pos)
        except DegenerateGeometryError:
            continue
        if dop.gdop < best_gdop:
            best_ids = [sid for sid, _ in subset]
            best_gdop = dop.gdop
    if best_ids is None:
        raise DegenerateGeometryError("every candidate subset is degenerate")
    return best_ids, best_gdop


def export_limit_check(position, speed: float) -> bool:
    """True (receiver must block) only above 18 km altitude AND above 515 m/s."""
    altitude = float(np.linalg.norm(np.asarray(position, dtype=float))) - EARTH_RADIUS
    return altitude > EXPORT_ALTITUDE_LIMIT and speed > EXPORT_SPEED_LIMIT


def observables(obs: ObservationEpoch, mode: str):
    """(svns, pseudoranges) for a solve mode: l1, l2, or iono-free."""
    svns, values = [], []
    for o in obs.observations:
        svns.append(o.pseudorange.sat.svn)
        if mode == "l1":
            values.append(o.pseudorange.pr_l1)
        elif mode == "l2":
            values.append(o.pseudorange.pr_l2)
        elif mode == "iono-free":
            values.append(iono_free_pseudorange(o.pseudorange.pr_l1,
                                                o.pseudorange.pr_l2).normalized_m)
        else:
            raise ValueError(f"unknown observable mode {mode!r}")
    return svns, np.array(values)


def _gauss_newton(svns, sat_pos, sat_clk, prs, position, psi, delay_fn=None,
                  altitude_target=None, tol=STEP_TOLERANCE, max_iter=MAX_ITERATIONS,
                  constraint_weight=ALTITUDE_CONSTRAINT_WEIGHT):
    """Shared Gauss-Newton loop; returns (position, psi, residuals, iters, converged)."""
    n = len(svns)
    converged = False
    iterations = 0

    def predicted(pos, psi_val):
        delta = sat_pos - pos
        ranges = np.linalg.norm(delta, axis=1)
        pred = ranges + SPEED_OF_LIGHT * sat_clk + psi_val
        if delay_fn is not None:
            pred = pred + np.array([delay_fn(sat_pos[i], pos) for i in range(n)])
        return pred, ranges

    for iterations in range(1, max_iter + 1):
        pred, ranges = predicted(position, psi)
        if np.any(ranges == 0.0):
            raise DegenerateGeometryError("iterate coincides with a satellite")
        resid = prs - pred
        g = geometry_matrix(sat_pos, position)
        rows, rhs = g, resid
        if altitude_target is not None:
            radius = float(np.linalg.norm(position))
            if radius == 0.0:
                raise DegenerateGeometryError(
                    "altitude constraint undefined at the Earth center")
            radial = position / radius
            c_row = np.append(constraint_weight * radial, 0.0)
            rows = np.vstack([g, c_row])
            rhs = np.append(resid, constraint_weight * (altitude_target - radius))
        if np.linalg.matrix_rank(rows) < 4:
            raise DegenerateGeometryError("degenerate geometry: rank-deficient system")
        step, *_ = np.linalg.lstsq(rows, rhs, rcond=None)
        position = position + step[:3]
        psi = psi + step[3]
        if not np.all(np.isfinite(position)):
            break
        if float(np.linalg.norm(step)) < tol:
            converged = True
            break

    final_pred, _ = predicted(position, psi)
    residuals = dict(zip(svns, (prs - final_pred).tolist()))
    return position, psi, residuals, iterations, converged


def _finish(svns, sat_pos, position, psi, residuals, iterations, converged):
    dop = None
    if converged:
        try:
            dop = dilution_of_precision(geometry_matrix(sat_pos, position), position)
        except (DegenerateGeometryError, ValueError):
            dop = None
    return PvtSolution(position=position, clock_bias=-psi / SPEED_OF_LIGHT,
                       residuals=residuals, iterations=iterations,
                       converged=converged, dop=dop)


def _states_arrays(svns, sat_states):
    try:
        sat_pos = np.array([sat_states[s].position for s in svns])
        sat_clk = np.array([sat_states[s].clock_bias for s in svns])
    except KeyError as exc:
        raise KeyError(f"no satellite state for SVN {exc.args[0]}") from exc
    return sat_pos, sat_clk


def solve_pvt(obs: ObservationEpoch, sat_states: dict, initial_position=None,
              initial_clock: float = 0.0, mode: str = "l1", delay_fn=None,
              tol: float = STEP_TOLERANCE, max_iter: int = MAX_ITERATIONS) -> PvtSolution:
    """Iterative least-squares position and clock solution.

    Parameters
    ----------
    obs : ObservationEpoch
    sat_states : dict
        SVN -> SatelliteState with the broadcast positions and clocks.
    initial_position : array-like, optional
        Defaults to the Earth center, which converges for every surface
        receiver geometry at this scale; if the iteration still fails, a
        restart from a trilateration fix is attempted.
    initial_clock : float
        Initial receiver clock bias in seconds.
    mode : str
        Observable selection: "l1", "l2", or "iono-free".
    delay_fn : callable, optional
        delay_fn(sat_position, receiver_position) -> meters added to the
        predicted pseudorange (for modeled atmospheric terms).
    """
    svns, prs = observables(obs, mode)
    if len(svns) < 4:
        raise InsufficientSatellitesError(
            f"insufficient satellites: {len(svns)} < 4")
    sat_pos, sat_clk = _states_arrays(svns, sat_states)
    position = (np.zeros(3) if initial_position is None
                else np.asarray(initial_position, dtype=float))
    psi = -SPEED_OF_LIGHT * initial_clock

    position, psi, residuals, iterations, converged = _gauss_newton(
        svns, sat_pos, sat_clk, prs, position, psi,
        delay_fn=delay_fn, tol=tol, max_iter=max_iter)

    if not converged:
        # documented fallback: restart from a trilateration point
        try:
            tri = trilaterate_three_spheres(sat_pos[:3], prs[:3])
            restart = select_feasible(tri)
            position, psi, residuals, iterations, converged = _gauss_newton(
                svns, sat_pos, sat_clk, prs, restart, 0.0,
                delay_fn=delay_fn, tol=tol, max_iter=max_iter)
        except (DegenerateGeometryError, NoIntersectionError, AmbiguousFixError):
            pass

    return _finish(svns, sat_pos, position, psi, residuals, iterations, converged)


def solve_altitude_aided(obs: ObservationEpoch, sat_states: dict, known_altitude: float,
                         initial_position=None, initial_clock: float = 0.0,
                         mode: str = "l1", delay_fn=None, tol: float = STEP_TOLERANCE,
                         max_iter: int = MAX_ITERATIONS,
                         constraint_weight: float = ALTITUDE_CONSTRAINT_WEIGHT) -> PvtSolution:
    """PVT solve with |position| pinned to EARTH_RADIUS + known_altitude.

    The constraint is a heavily weighted extra equation, so three
    satellites suffice. The default start sits on the constraint sphere
    along the mean satellite direction (the Earth center would leave the
    constraint's radial direction undefined).
    """
    svns, prs = observables(obs, mode)
    if len(svns) < 3:
        raise InsufficientSatellitesError(
            f"insufficient satellites: {len(svns)} < 3")
    sat_pos, sat_clk = _states_arrays(svns, sat_states)
    target = EARTH_RADIUS + known_altitude
    if initial_position is None:
        mean_dir = sat_pos.mean(axis=0)
        mean_dir = mean_dir / np.linalg.norm(mean_dir)
        initial_position = target * mean_dir
    position = np.asarray(initial_position, dtype=float)
    psi = -SPEED_OF_LIGHT * initial_clock

    position, psi, residuals, iterations, converged = _gauss_newton(
        svns, sat_pos, sat_clk, prs, position, psi, delay_fn=delay_fn,
        altitude_target=target, tol=tol, max_iter=max_iter,
        constraint_weight=constraint_weight)
    return _finish(svns, sat_pos, position, psi, residuals, iterations, converged)
