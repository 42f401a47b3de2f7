# -*- coding: utf-8 -*-
# Copyright (c) 2026 hybridloco contributors
# GNU General Public License v3.0+ (see COPYING or https://www.gnu.org/licenses/gpl-3.0.txt)

"""Base trajectory optimization.

The COM position and the yaw-pitch-roll angles of the base are quintic
splines over the same uniform segments. The COM problem carries the ZMP
inequalities against the support polygon spanned by the planned wheel
contacts and is solved by SQP. The angles only see costs and equalities and
are solved by a single QP.

ZMP rows use the reaction wrench f_c = m (a - g), m_c = m (r - p0) x (a - g)
+ l_dot about the terrain point p0. For an edge p x + q y + r >= 0 the
inequality is multiplied through by n . (a - g) > 0 so it becomes a
polynomial in the spline coefficients.
"""

from __future__ import annotations

import dataclasses
import logging
import math
import time
import typing as t

import numpy as np
import numpy.typing as npt
import scipy.linalg
from scipy.spatial import ConvexHull, QhullError
from scipy.spatial.transform import Rotation

from ._errors import DegenerateContactError, InputError, NumericalError, SqpError
from ._qp import DEFAULT_RHO, GoldfarbIdnaniSolver, QpProblem, QpStatus
from ._spline import AIR_DIM, AirSegment, Kinematics, SegmentSequence, accel_hessian_air
from ._state import GRAVITY, RobotState
from ._terrain import TerrainPlane
from ._wheel_to import SegmentSpec, SplineQpBuilder, WheelPlan, sample_times, shift_previous

log = logging.getLogger(__name__)

GRAVITY_VECTOR = np.array([0.0, 0.0, -GRAVITY])
CERT_TOL = 1e-6

_HULL_TOL = 1e-12
_LINE_SEARCH = (1.0, 0.5, 0.25, 0.125)


@dataclasses.dataclass()
class BaseToConfig:
    """Weights, limits and SQP settings of the base planner.

    Args:
        mass: Robot mass in kg.
        com_height: Default COM height above the terrain plane.
        g_min: Lower bound of n . (a - g), keeps the contact pressing.
        epsilon: Half-width of the support polygon used for one or two contacts.
        zmp_margin: Distance the ZMP is kept inside every support edge.
        l_dot: Constant angular momentum rate about the COM.
        w_acc: COM acceleration weight.
        w_vel: COM xy velocity tracking weight.
        w_pose: COM xy tracking weight of the integrated reference path.
        w_height: COM height weight.
        w_pre_pos: Previous solution COM position weight.
        w_pre_vel: Previous solution COM velocity weight.
        w_ang_acc: Angular acceleration weight.
        w_yaw_rate: Yaw rate tracking weight.
        w_yaw: Yaw tracking weight of the integrated reference heading.
        w_tilt: Weight aligning pitch and roll with the terrain plane.
        w_pre_ang: Previous solution angle weight.
        n_segments: Number of quintic segments over the horizon.
        n_samples: Samples N over the horizon.
        penalty: Constraint violation weight of the SQP merit function.
        max_iterations: SQP iteration cap.
        step_tol: SQP step size, infinity norm, counted as converged.
        rho: QP Hessian regularization.
    """

    mass: float = 30.0
    com_height: float = 0.45
    g_min: float = 2.0
    epsilon: float = 0.02
    zmp_margin: float = 1e-3
    l_dot: t.Tuple[float, float, float] = (0.0, 0.0, 0.0)
    w_acc: float = 1e-3
    w_vel: float = 1.0
    w_pose: float = 6.0
    w_height: float = 10.0
    w_pre_pos: float = 0.1
    w_pre_vel: float = 0.01
    w_ang_acc: float = 1e-3
    w_yaw_rate: float = 1.0
    w_yaw: float = 2.0
    w_tilt: float = 10.0
    w_pre_ang: float = 0.1
    n_segments: int = 6
    n_samples: int = 40
    penalty: float = 1e3
    max_iterations: int = 5
    step_tol: float = 1e-5
    rho: float = DEFAULT_RHO

    def __post_init__(self) -> None:
        self.l_dot = tuple(float(v) for v in self.l_dot)  # type: ignore[assignment]
        if len(self.l_dot) != 3:
            raise InputError("l_dot needs 3 components")
        if not self.mass > 0:
            raise InputError(f"Mass must be positive, got {self.mass}")
        if not self.com_height > 0:
            raise InputError("COM height must be positive")
        if self.epsilon <= 0 or self.zmp_margin < 0:
            raise InputError("Support polygon half-width must be positive and the ZMP margin non-negative")
        weights = (
            self.w_acc,
            self.w_vel,
            self.w_pose,
            self.w_height,
            self.w_pre_pos,
            self.w_pre_vel,
            self.w_ang_acc,
            self.w_yaw_rate,
            self.w_yaw,
            self.w_tilt,
            self.w_pre_ang,
            self.penalty,
        )
        if any(w < 0 for w in weights):
            raise InputError("Base planner weights must be non-negative")
        if self.n_segments < 1 or self.n_samples < 10 or self.max_iterations < 1:
            raise InputError("Base planner needs at least 1 segment, 10 samples and 1 SQP iteration")

    def pack(self) -> t.Dict[str, t.Any]:
        data = dataclasses.asdict(self)
        data["l_dot"] = list(self.l_dot)
        return data

    @classmethod
    def unpack(
        cls,
        obj: t.Dict[str, t.Any],
    ) -> BaseToConfig:
        return cls(**obj)


@dataclasses.dataclass(frozen=True, eq=False)
class GravitoInertialWrench:
    """Gravito-inertial wrench of the lumped mass about a point on the terrain.

    f_gi = m (g - a) and m_gi = m (r - origin) x (g - a) - l_dot.
    """

    f_gi: np.ndarray
    m_gi: np.ndarray
    mass: float
    gravity: np.ndarray
    l_dot: np.ndarray

    @classmethod
    def from_motion(
        cls,
        r_com: npt.ArrayLike,
        a_com: npt.ArrayLike,
        mass: float,
        gravity: t.Optional[npt.ArrayLike] = None,
        l_dot: t.Optional[npt.ArrayLike] = None,
        origin: t.Optional[npt.ArrayLike] = None,
    ) -> GravitoInertialWrench:
        if not mass > 0:
            raise InputError(f"Mass must be positive, got {mass}")
        g = GRAVITY_VECTOR if gravity is None else np.asarray(gravity, dtype=float)
        ld = np.zeros(3) if l_dot is None else np.asarray(l_dot, dtype=float)
        o = np.zeros(3) if origin is None else np.asarray(origin, dtype=float)
        inertial = g - np.asarray(a_com, dtype=float)
        f_gi = mass * inertial
        m_gi = mass * np.cross(np.asarray(r_com, dtype=float) - o, inertial) - ld
        return cls(f_gi, m_gi, float(mass), g, ld)


def zmp_point(
    r_com: npt.ArrayLike,
    a_com: npt.ArrayLike,
    mass: float,
    normal: npt.ArrayLike = (0.0, 0.0, 1.0),
    point: npt.ArrayLike = (0.0, 0.0, 0.0),
    l_dot: t.Optional[npt.ArrayLike] = None,
    gravity: t.Optional[npt.ArrayLike] = None,
) -> np.ndarray:
    """The ZMP on the plane through point with the given normal.

    Raises:
        DegenerateContactError: The wrench does not press into the plane.
    """
    n = np.asarray(normal, dtype=float)
    p0 = np.asarray(point, dtype=float)
    w = GravitoInertialWrench.from_motion(r_com, a_com, mass, gravity=gravity, l_dot=l_dot, origin=p0)
    pressing = -float(n @ w.f_gi)
    if pressing <= 1e-9 * mass:
        raise DegenerateContactError(f"Contact wrench does not press into the terrain, n.f = {pressing:.3g}")

    return t.cast(np.ndarray, p0 + np.cross(n, w.m_gi) / float(n @ w.f_gi))


@dataclasses.dataclass(frozen=True, eq=False)
class SupportPolygonEdges:
    """Support polygon at one sample.

    Args:
        time: Horizon time of the sample.
        vertices: CCW vertices in world xy, shape (k, 2).
        edges: One [p, q, r] row per edge with unit (p, q), interior points
            satisfy p x + q y + r > 0.
    """

    time: float
    vertices: np.ndarray
    edges: np.ndarray

    @property
    def flight(self) -> bool:
        return self.edges.shape[0] == 0

    def margin(self, xy: npt.ArrayLike) -> float:
        """Signed distance of xy to the closest edge, positive inside."""
        if self.flight:
            return math.inf
        p = np.asarray(xy, dtype=float)[:2]
        return float(np.min(self.edges[:, :2] @ p + self.edges[:, 2]))


def convex_hull(points: npt.ArrayLike) -> np.ndarray:
    """CCW hull of 2D points, colinear points dropped.

    Fewer than three distinct points or a colinear set have no area, those
    come back as their one or two extreme points.
    """
    pts = np.unique(np.asarray(points, dtype=float).reshape(-1, 2), axis=0)
    if pts.shape[0] <= 2:
        return pts

    try:
        hull = ConvexHull(pts)
    except QhullError:
        # np.unique sorts lexicographically, which puts the ends of a line first and last
        return pts[[0, -1]]

    return pts[hull.vertices]


def _edges(vertices: np.ndarray) -> np.ndarray:
    rows = []
    for a, b in zip(vertices, np.roll(vertices, -1, axis=0)):
        d = b - a
        length = float(np.hypot(d[0], d[1]))
        p, q = -d[1] / length, d[0] / length
        rows.append([p, q, -(p * a[0] + q * a[1])])
    return np.array(rows).reshape(-1, 3)


def polygon_from_points(
    time: float,
    points: npt.ArrayLike,
    epsilon: float = 0.02,
) -> SupportPolygonEdges:
    """Support polygon of contact points, widened to a rectangle or box for one or two contacts."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.size == 0:
        return SupportPolygonEdges(time, np.zeros((0, 2)), np.zeros((0, 3)))

    hull = convex_hull(pts[:, :2])
    if hull.shape[0] == 2 and np.linalg.norm(hull[1] - hull[0]) > _HULL_TOL:
        u = (hull[1] - hull[0]) / np.linalg.norm(hull[1] - hull[0])
        v = np.array([-u[1], u[0]])
        a = hull[0] - epsilon * u
        b = hull[1] + epsilon * u
        hull = np.array([a - epsilon * v, b - epsilon * v, b + epsilon * v, a + epsilon * v])
    elif hull.shape[0] <= 2:
        c = hull[0]
        hull = c + epsilon * np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])

    return SupportPolygonEdges(time, hull, _edges(hull))


def support_polygon(
    time: float,
    wheels: t.Sequence[WheelPlan],
    flags: t.Optional[t.Sequence[bool]] = None,
    epsilon: float = 0.02,
    t0: float = 0.0,
) -> SupportPolygonEdges:
    """Support polygon of the planned wheel contacts at absolute time t0 + time.

    Args:
        time: Horizon time of the sample.
        wheels: Latest wheel plans, their own start time is honoured.
        flags: Contact flag per wheel, taken from the plans when omitted.
        epsilon: Half-width for one or two contacts.
        t0: Absolute time the horizon starts at.
    """
    points = []
    for idx, plan in enumerate(wheels):
        tau = t0 + time - plan.t0
        in_contact = plan.in_contact(tau) if flags is None else flags[idx]
        if in_contact:
            points.append(plan.world(tau, clamp=True).position)
    return polygon_from_points(time, np.array(points).reshape(-1, 3), epsilon)


@dataclasses.dataclass(frozen=True, eq=False)
class ZmpSample:
    """One ZMP sample with the maps of COM position and acceleration from the coefficients."""

    time: float
    polygon: SupportPolygonEdges
    position_map: np.ndarray
    acceleration_map: np.ndarray


def _zmp_linearization(
    sample: ZmpSample,
    xi: np.ndarray,
    mass: float,
    plane: TerrainPlane,
    l_dot: np.ndarray,
    margin: float,
) -> t.Tuple[np.ndarray, np.ndarray, float, np.ndarray]:
    """Edge values h, their gradients, and the pressing value n.(a - g) with its gradient."""
    n, p0 = plane.normal, plane.point
    r = sample.position_map @ xi
    a = sample.acceleration_map @ xi
    ag = a - GRAVITY_VECTOR
    pressing = float(n @ ag)
    pressing_grad = n @ sample.acceleration_map

    edges = sample.polygon.edges
    if edges.shape[0] == 0:
        return np.zeros(0), np.zeros((0, xi.shape[0])), pressing, pressing_grad

    e = np.column_stack([edges[:, 0], edges[:, 1], np.zeros(edges.shape[0])])
    k = np.cross(e, n)
    offset = e @ p0 + edges[:, 2] - margin
    grad_r = np.cross(ag, k)
    grad_a = np.cross(k, r - p0) + offset[:, None] * n
    values = grad_r @ (r - p0) + (k @ l_dot) / mass + offset * pressing
    grads = grad_r @ sample.position_map + grad_a @ sample.acceleration_map
    return values, grads, pressing, pressing_grad


def zmp_constraint_rows(
    samples: t.Sequence[ZmpSample],
    xi: npt.ArrayLike,
    mass: float,
    plane: TerrainPlane,
    l_dot: t.Optional[npt.ArrayLike] = None,
    g_min: float = 0.0,
    margin: float = 0.0,
) -> t.Tuple[np.ndarray, np.ndarray]:
    """ZMP and pressing rows D x <= f linearized about xi.

    Full flight samples emit no rows.
    """
    x = np.asarray(xi, dtype=float)
    ld = np.zeros(3) if l_dot is None else np.asarray(l_dot, dtype=float)
    D_rows: t.List[np.ndarray] = []
    f_vals: t.List[float] = []
    for sample in samples:
        if sample.polygon.flight:
            continue
        values, grads, pressing, pressing_grad = _zmp_linearization(sample, x, mass, plane, ld, margin)
        for value, grad in zip(values, grads):
            D_rows.append(-grad)
            f_vals.append(float(value - grad @ x))
        D_rows.append(-pressing_grad)
        f_vals.append(float(pressing - g_min - pressing_grad @ x))

    return np.array(D_rows).reshape(-1, x.shape[0]), np.array(f_vals)


def zmp_violation(
    samples: t.Sequence[ZmpSample],
    xi: np.ndarray,
    mass: float,
    plane: TerrainPlane,
    l_dot: t.Optional[npt.ArrayLike] = None,
    g_min: float = 0.0,
    margin: float = 0.0,
) -> float:
    """Sum of the nonlinear row violations at xi."""
    ld = np.zeros(3) if l_dot is None else np.asarray(l_dot, dtype=float)
    total = 0.0
    for sample in samples:
        if sample.polygon.flight:
            continue
        values, _, pressing, _ = _zmp_linearization(sample, xi, mass, plane, ld, margin)
        total += float(np.sum(np.maximum(0.0, -values))) + max(0.0, g_min - pressing)
    return total


@dataclasses.dataclass(frozen=True, eq=False)
class BaseReference:
    """Commanded base motion from the set-point at the start of the horizon.

    Args:
        v_ref: Reference COM velocity in the heading frame.
        omega_ref: Reference yaw rate.
        com_xy: Reference COM xy at the horizon start.
        yaw: Reference yaw at the horizon start.
    """

    v_ref: np.ndarray
    omega_ref: float
    com_xy: np.ndarray
    yaw: float

    def __post_init__(self) -> None:
        v = np.zeros(2)
        vr = np.asarray(self.v_ref, dtype=float).reshape(-1)
        v[: min(2, vr.shape[0])] = vr[:2]
        object.__setattr__(self, "v_ref", v)
        object.__setattr__(self, "com_xy", np.asarray(self.com_xy, dtype=float).reshape(-1)[:2].copy())
        object.__setattr__(self, "omega_ref", float(self.omega_ref))
        object.__setattr__(self, "yaw", float(self.yaw))

    def heading(self, tau: float) -> float:
        return self.yaw + self.omega_ref * tau

    def velocity(self, tau: float) -> np.ndarray:
        vel = np.exp(1j * self.heading(tau)) * complex(self.v_ref[0], self.v_ref[1])
        return np.array([vel.real, vel.imag])

    def position(self, tau: float) -> np.ndarray:
        # The rotated velocity integrates in closed form, exact at any yaw rate.
        if abs(self.omega_ref) < 1e-9:
            disp = np.exp(1j * self.yaw) * complex(self.v_ref[0], self.v_ref[1]) * tau
        else:
            rot = (np.exp(1j * self.omega_ref * tau) - 1.0) / (1j * self.omega_ref)
            disp = np.exp(1j * self.yaw) * complex(self.v_ref[0], self.v_ref[1]) * rot
        return t.cast(np.ndarray, self.com_xy + np.array([disp.real, disp.imag]))

    def advance(self, dt: float) -> BaseReference:
        """The set-point dt seconds later under the same command."""
        return BaseReference(self.v_ref, self.omega_ref, self.position(dt), self.heading(dt))

    def command(self, v_ref: npt.ArrayLike, omega_ref: float) -> BaseReference:
        return BaseReference(np.asarray(v_ref, dtype=float), omega_ref, self.com_xy, self.yaw)


def base_reference(state: RobotState, v_ref: npt.ArrayLike, omega_ref: float) -> BaseReference:
    """Reference anchored at the measured COM and yaw."""
    return BaseReference(np.asarray(v_ref, dtype=float), omega_ref, state.r_com[:2], state.yaw)


@dataclasses.dataclass(frozen=True)
class SqpReport:
    iterations: int
    merits: t.Tuple[float, ...]
    converged: bool
    worst_margin: float


@dataclasses.dataclass(frozen=True, eq=False)
class BaseTrajectory:
    """Solved base motion.

    Args:
        t0: Absolute time the horizon starts at.
        com: COM position splines in world.
        angles: Yaw, pitch and roll splines.
        polygons: Support polygon of every ZMP sample.
        terrain: Terrain plane the ZMP is taken on.
        report: SQP statistics.
        solve_time: Wall clock seconds spent assembling and solving.
    """

    t0: float
    com: SegmentSequence
    angles: SegmentSequence
    polygons: t.Tuple[SupportPolygonEdges, ...]
    terrain: TerrainPlane
    report: t.Optional[SqpReport] = None
    solve_time: float = 0.0

    @property
    def t_f(self) -> float:
        return self.com.t_f

    def com_at(self, tau: float, clamp: bool = True) -> Kinematics:
        return self.com.evaluate(tau, clamp=clamp)

    def angles_at(self, tau: float, clamp: bool = True) -> Kinematics:
        return self.angles.evaluate(tau, clamp=clamp)

    def rotation(self, tau: float) -> Rotation:
        """Base orientation, intrinsic yaw-pitch-roll."""
        yaw, pitch, roll = self.angles_at(tau).position
        return Rotation.from_euler("ZYX", [yaw, pitch, roll])


@dataclasses.dataclass(frozen=True, eq=False)
class BaseProblem:
    """The assembled base problem, the ZMP rows are added per SQP iteration."""

    t0: float
    t_f: float
    specs: t.Tuple[SegmentSpec, ...]
    com_qp: QpProblem
    angle_qp: QpProblem
    samples: t.Tuple[ZmpSample, ...]
    terrain: TerrainPlane
    cfg: BaseToConfig
    initial: np.ndarray

    def zmp_rows(self, xi: np.ndarray) -> t.Tuple[np.ndarray, np.ndarray]:
        cfg = self.cfg
        return zmp_constraint_rows(
            self.samples, xi, cfg.mass, self.terrain, cfg.l_dot, g_min=cfg.g_min, margin=cfg.zmp_margin
        )

    def merit(self, xi: np.ndarray) -> float:
        cfg = self.cfg
        violation = zmp_violation(
            self.samples, xi, cfg.mass, self.terrain, cfg.l_dot, g_min=cfg.g_min, margin=cfg.zmp_margin
        )
        return self.com_qp.objective(xi) + cfg.penalty * violation


def _segment_specs(t_f: float, n_segments: int) -> t.Tuple[SegmentSpec, ...]:
    bounds = [t_f * i / n_segments for i in range(n_segments)] + [t_f]
    return tuple(SegmentSpec("air", start, end) for start, end in zip(bounds, bounds[1:]))


def _shifted_previous(
    prev: BaseTrajectory,
    state: RobotState,
    times: np.ndarray,
) -> t.Tuple[Kinematics, Kinematics]:
    t_pre = max(state.time - prev.t0, 0.0)
    return shift_previous(prev.com, t_pre, times), shift_previous(prev.angles, t_pre, times)


def assemble_base(
    state: RobotState,
    wheels: t.Sequence[WheelPlan],
    cfg: BaseToConfig,
    prev: t.Optional[BaseTrajectory],
    terrain: TerrainPlane,
    ref: BaseReference,
    t_f: t.Optional[float] = None,
) -> BaseProblem:
    """Build the COM and angle problems of one base replan.

    Args:
        state: Measured state the horizon starts from.
        wheels: Latest wheel plans spanning the support polygons.
        cfg: Planner settings.
        prev: The last base plan, shifted by the time elapsed since it started.
        terrain: Current terrain estimate.
        ref: Commanded motion and set-point.
        t_f: Horizon, the wheel horizon when omitted.

    Returns:
        BaseProblem: The problem ready for sqp_solve and solve_angles.
    """
    horizon = float(t_f if t_f is not None else wheels[0].t_f)
    if not horizon > 0:
        raise InputError(f"Base horizon must be positive, got {horizon}")

    specs = _segment_specs(horizon, cfg.n_segments)
    com = SplineQpBuilder(specs, 0.0)
    ang = SplineQpBuilder(specs, 0.0)
    n, p0 = terrain.normal, terrain.point

    for idx, spec in enumerate(specs):
        lo = com.offsets[idx]
        com.Q[lo : lo + AIR_DIM, lo : lo + AIR_DIM] += accel_hessian_air(spec.duration, cfg.w_acc)
        ang.Q[lo : lo + AIR_DIM, lo : lo + AIR_DIM] += accel_hessian_air(spec.duration, cfg.w_ang_acc)

    times = sample_times(horizon, cfg.n_samples)
    dt = horizon / cfg.n_samples
    previous = _shifted_previous(prev, state, times) if prev is not None else None

    samples = []
    for k, tk in enumerate(times):
        tp, tv, ta = com.at(tk)
        com.add_cost(tv[:2], ref.velocity(tk), cfg.w_vel * dt)
        com.add_cost(tp[:2], ref.position(tk), cfg.w_pose * dt)
        com.add_cost(n @ tp, [n @ p0 + cfg.com_height], cfg.w_height * dt)

        yaw_k = ref.heading(tk)
        pitch_k, roll_k = terrain.orientation(yaw_k)
        ap, av, _ = ang.at(tk)
        ang.add_cost(av[0], [ref.omega_ref], cfg.w_yaw_rate * dt)
        ang.add_cost(ap[0], [yaw_k], cfg.w_yaw * dt)
        ang.add_cost(ap[1:], [pitch_k, roll_k], cfg.w_tilt * dt)

        if previous is not None:
            prev_com, prev_ang = previous
            com.add_cost(tp, prev_com.position[k], cfg.w_pre_pos * dt)
            com.add_cost(tv, prev_com.velocity[k], cfg.w_pre_vel * dt)
            ang.add_cost(ap, prev_ang.position[k], cfg.w_pre_ang * dt)

        polygon = support_polygon(float(tk), wheels, epsilon=cfg.epsilon, t0=state.time)
        samples.append(ZmpSample(float(tk), polygon, tp, ta))

    # Initial state.
    tp0, tv0, ta0 = com.transfer(0, 0.0)
    com.add_eq(tp0, state.r_com)
    com.add_eq(tv0, state.v_com)
    com.add_eq(ta0, state.a_com)
    ap0, av0, aa0 = ang.transfer(0, 0.0)
    ang.add_eq(ap0, state.angles)
    ang.add_eq(av0, state.angle_rates)
    ang.add_eq(aa0, state.angle_accs)

    # Continuity.
    for idx in range(len(specs) - 1):
        t_j = specs[idx].end
        for builder in (com, ang):
            lp, lv, la = builder.transfer(idx, t_j)
            rp, rv, ra = builder.transfer(idx + 1, t_j)
            builder.add_eq(rp - lp, np.zeros(3))
            builder.add_eq(rv - lv, np.zeros(3))
            builder.add_eq(ra - la, np.zeros(3))

    return BaseProblem(
        t0=state.time,
        t_f=horizon,
        specs=specs,
        com_qp=com.problem(),
        angle_qp=ang.problem(),
        samples=tuple(samples),
        terrain=terrain,
        cfg=cfg,
        initial=hold_guess(state.r_com, len(specs)),
    )


def hold_guess(position: npt.ArrayLike, n_segments: int) -> np.ndarray:
    """Coefficients of a trajectory resting at position."""
    xi = np.zeros(n_segments * AIR_DIM)
    pos = np.asarray(position, dtype=float)
    for idx in range(n_segments):
        for axis in range(3):
            xi[idx * AIR_DIM + 6 * axis + 5] = pos[axis]
    return xi


def _sequence(specs: t.Sequence[SegmentSpec], xi: np.ndarray, t_f: float) -> SegmentSequence:
    segments = [
        AirSegment.from_xi(xi[idx * AIR_DIM : (idx + 1) * AIR_DIM], spec.start, spec.duration)
        for idx, spec in enumerate(specs)
    ]
    return SegmentSequence(tuple(segments), t_f)


def _raise_for_status(status: QpStatus, what: str, worst: t.Optional[float] = None) -> None:
    if status == QpStatus.INFEASIBLE:
        raise SqpError(f"{what} is infeasible", worst_violation=worst)
    raise NumericalError(f"{what} failed with status {status.value}")


def worst_zmp_margin(
    samples: t.Sequence[ZmpSample],
    xi: np.ndarray,
    mass: float,
    plane: TerrainPlane,
    l_dot: t.Optional[npt.ArrayLike] = None,
) -> float:
    """Smallest distance of the nonlinear ZMP to its support polygon, negative outside."""
    worst = math.inf
    for sample in samples:
        if sample.polygon.flight:
            continue
        r = sample.position_map @ xi
        a = sample.acceleration_map @ xi
        try:
            zmp = zmp_point(r, a, mass, plane.normal, plane.point, l_dot)
        except DegenerateContactError:
            return -math.inf
        worst = min(worst, sample.polygon.margin(zmp))
    return worst


def _level_basis(normal: np.ndarray, n_segments: int) -> np.ndarray:
    """Coefficient directions that keep n . r constant, only the constant terms move along n."""
    tangent = scipy.linalg.null_space(normal.reshape(1, 3))
    blocks = []
    for power in range(6):
        directions = np.eye(3) if power == 5 else tangent
        block = np.zeros((AIR_DIM, directions.shape[1]))
        for axis in range(3):
            block[6 * axis + power] = directions[axis]
        blocks.append(block)
    return t.cast(np.ndarray, scipy.linalg.block_diag(*([np.hstack(blocks)] * n_segments)))


def level_guess(
    problem: BaseProblem,
    solver: t.Optional[GoldfarbIdnaniSolver] = None,
) -> t.Optional[np.ndarray]:
    """Start point for sqp_solve with the COM held at its height above the terrain.

    The COM problem is first solved without the ZMP rows. When that motion
    leaves the support polygons the QP is repeated over the trajectories of
    constant height, where the rows on a level plane are affine in the
    coefficients and a single QP lands on them. Returns None when the start
    state is not level or the restricted QP has no solution.
    """
    cfg = problem.cfg
    solver = solver or GoldfarbIdnaniSolver(rho=cfg.rho)
    qp = problem.com_qp
    free = solver.solve(qp)
    if not free.ok:
        return None
    if zmp_violation(problem.samples, free.x, cfg.mass, problem.terrain, cfg.l_dot, cfg.g_min, cfg.zmp_margin) == 0:
        return free.x

    Z = _level_basis(problem.terrain.normal, len(problem.specs))
    AZ = qp.A @ Z
    w0, *_ = np.linalg.lstsq(AZ, qp.b, rcond=None)
    xi0 = Z @ w0
    if qp.m_eq and float(np.max(np.abs(qp.A @ xi0 - qp.b))) > 1e-9:
        log.debug("Start state is not level, no level guess")
        return None

    M = Z @ scipy.linalg.null_space(AZ) if qp.m_eq else Z
    Q = M.T @ qp.Q @ M
    D, f = problem.zmp_rows(xi0)
    reduced = QpProblem(0.5 * (Q + Q.T), M.T @ (qp.Q @ xi0 + qp.c), D=D @ M, f=f - D @ xi0)
    sol = solver.solve(reduced)
    if not sol.ok:
        log.debug("Level guess QP failed with %s", sol.status.value)
        return None
    return t.cast(np.ndarray, xi0 + M @ sol.x)


def sqp_solve(
    problem: BaseProblem,
    init: t.Optional[npt.ArrayLike] = None,
    solver: t.Optional[GoldfarbIdnaniSolver] = None,
) -> t.Tuple[np.ndarray, SqpReport]:
    """Solve the COM problem by a sequence of QPs with linearized ZMP rows.

    Without init the iteration starts from level_guess, or the resting
    trajectory when there is none. Steps are accepted on a non-increasing L1
    merit by backtracking. The first step is taken in full when the start
    does not satisfy the equalities. Should the last iterate leave the
    support polygons, the best iterate that stayed inside is returned.

    Raises:
        SqpError: No iterate keeps the nonlinear ZMP inside the support
            polygons or a QP subproblem is infeasible.
        NumericalError: A QP subproblem broke down.
    """
    cfg = problem.cfg
    solver = solver or GoldfarbIdnaniSolver(rho=cfg.rho)
    if init is None:
        guess = level_guess(problem, solver=solver)
        init = problem.initial if guess is None else guess
    xi = np.array(init, dtype=float)
    qp = problem.com_qp
    feasible_start = qp.m_eq == 0 or float(np.max(np.abs(qp.A @ xi - qp.b))) < 1e-9

    def margin(x: np.ndarray) -> float:
        return worst_zmp_margin(problem.samples, x, cfg.mass, problem.terrain, cfg.l_dot)

    merits: t.List[float] = []
    hint: t.Optional[t.Tuple[int, ...]] = None
    converged = False
    iterations = 0
    best: t.Optional[t.Tuple[float, np.ndarray, int]] = None
    if feasible_start and margin(xi) >= -CERT_TOL:
        best = (problem.merit(xi), xi, 0)

    for it in range(cfg.max_iterations):
        iterations = it + 1
        D, f = problem.zmp_rows(xi)
        sol = solver.solve(QpProblem(qp.Q, qp.c, qp.A, qp.b, D, f), hint_active_set=hint)
        if not sol.ok:
            log.warning("Base QP subproblem %d failed with %s", iterations, sol.status.value)
            worst = margin(xi)
            _raise_for_status(sol.status, "Base QP subproblem", -worst if worst < 0 else None)
        hint = sol.active_set

        direction = sol.x - xi
        if not feasible_start:
            step = direction
            feasible_start = True
        else:
            current = problem.merit(xi)
            if not merits:
                merits.append(current)
            for alpha in _LINE_SEARCH:
                if problem.merit(xi + alpha * direction) <= current + 1e-12 * max(1.0, abs(current)):
                    step = alpha * direction
                    break
            else:
                log.warning("Base SQP line search stalled at iteration %d", iterations)
                break

        xi = xi + step
        merits.append(problem.merit(xi))
        if margin(xi) >= -CERT_TOL and (best is None or merits[-1] <= best[0]):
            best = (merits[-1], xi, len(merits))
        if float(np.max(np.abs(step))) < cfg.step_tol:
            converged = True
            break

    worst = margin(xi)
    log.debug("Base SQP finished after %d iterations, worst ZMP margin %.3g", iterations, worst)
    if worst < -CERT_TOL:
        if best is None:
            raise SqpError(f"ZMP leaves the support polygon by {-worst:.3g} m", worst_violation=-worst)

        log.warning("Base SQP ended %.3g m outside the support polygon, keeping the best inside iterate", -worst)
        xi = best[1]
        merits = merits[: max(best[2], 1)] if merits else [best[0]]
        worst = margin(xi)

    return xi, SqpReport(iterations, tuple(merits), converged, worst)


def solve_angles(problem: BaseProblem, solver: t.Optional[GoldfarbIdnaniSolver] = None) -> np.ndarray:
    solver = solver or GoldfarbIdnaniSolver(rho=problem.cfg.rho)
    sol = solver.solve(problem.angle_qp)
    if not sol.ok:
        _raise_for_status(sol.status, "Base angle QP")
    return sol.x


def plan_base(
    state: RobotState,
    wheels: t.Sequence[WheelPlan],
    cfg: BaseToConfig,
    prev: t.Optional[BaseTrajectory],
    terrain: TerrainPlane,
    ref: BaseReference,
    t_f: t.Optional[float] = None,
) -> BaseTrajectory:
    """Assemble and solve the base problem."""
    start = time.perf_counter()
    problem = assemble_base(state, wheels, cfg, prev, terrain, ref, t_f=t_f)
    solver = GoldfarbIdnaniSolver(rho=cfg.rho)
    xi_com, report = sqp_solve(problem, solver=solver)
    xi_ang = solve_angles(problem, solver=solver)
    elapsed = time.perf_counter() - start
    log.debug("Base planned in %d SQP iterations, %.3f ms", report.iterations, elapsed * 1000)
    return BaseTrajectory(
        t0=problem.t0,
        com=_sequence(problem.specs, xi_com, problem.t_f),
        angles=_sequence(problem.specs, xi_ang, problem.t_f),
        polygons=tuple(s.polygon for s in problem.samples),
        terrain=terrain,
        report=report,
        solve_time=elapsed,
    )


@dataclasses.dataclass(frozen=True)
class BaseCertificate:
    zmp_margin: float
    continuity: float
    flight_samples: int

    @property
    def ok(self) -> bool:
        return self.zmp_margin >= -CERT_TOL and self.continuity < CERT_TOL


def certify_base(
    trajectory: BaseTrajectory,
    cfg: t.Optional[BaseToConfig] = None,
) -> BaseCertificate:
    """Recompute the ZMP of every sample from the returned splines together with junction continuity."""
    cfg = cfg or BaseToConfig()
    plane = trajectory.terrain
    worst = math.inf
    flight = 0
    for polygon in trajectory.polygons:
        if polygon.flight:
            flight += 1
            continue
        k = trajectory.com_at(polygon.time)
        try:
            zmp = zmp_point(k.position, k.acceleration, cfg.mass, plane.normal, plane.point, cfg.l_dot)
        except DegenerateContactError:
            worst = -math.inf
            continue
        worst = min(worst, polygon.margin(zmp))

    continuity = max(trajectory.com.continuity_residual(), trajectory.angles.continuity_residual())
    return BaseCertificate(worst, continuity, flight)
