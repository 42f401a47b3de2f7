# -*- coding: utf-8 -*-
# Copyright (c) 2026 hybridloco contributors
# GNU General Public License v3.0+ (see COPYING or https://www.gnu.org/licenses/gpl-3.0.txt)

"""Per-wheel trajectory optimization.

Every wheel is planned in its own frame W whose origin is the wheel's contact
point projected onto the terrain plane, whose x-axis is the base heading
projected onto the plane and whose z-axis is the plane normal. The horizon is
the stride duration of the gait and its segments follow the contact schedule
of the leg.
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
import logging
import math
import time
import typing as t

import numpy as np
import numpy.typing as npt

from ._errors import AssemblyError, InputError, WheelPlanningError
from ._gait import LEGS, ContactSchedule, LegSchedule
from ._qp import DEFAULT_RHO, GoldfarbIdnaniSolver, QpProblem, QpSolution
from ._spline import (
    AIR_DIM,
    CONTACT_DIM,
    AirSegment,
    ContactSegment,
    Kinematics,
    Segment,
    SegmentSequence,
    accel_hessian_air,
    accel_hessian_contact,
    air_transfer,
    contact_integrals,
    contact_transfer,
)
from ._state import GRAVITY, RobotState, leg_offset
from ._terrain import TerrainPlane, WheelFrame, wheel_frame

log = logging.getLogger(__name__)

_CERT_TOL = 1e-6


@dataclasses.dataclass()
class WheelToConfig:
    """Weights and limits of the wheel planner.

    Args:
        w_acc: Acceleration weight, the diagonal of W_acc.
        w_pre_pos: Previous solution position weight.
        w_pre_vel: Previous solution velocity weight.
        w_pre_acc: Previous solution acceleration weight.
        w_ref: Reference rolling velocity weight.
        w_def: Default position weight along the rolling direction.
        w_fh: Foothold weight, the diagonal of W_fh.
        w_sh: Swing height weight.
        w_apex: Weight pulling the apex over the middle of the swing.
        r_def: Default xy offset of the left front wheel from the COM, mirrored
            for the other legs.
        x_kin: Half-extent of the kinematic box along x of frame W.
        y_kin: Half-extent of the kinematic box along y of frame W.
        z_kin: Half-extent of the kinematic box along the terrain normal.
        z_sh: Swing apex height above the terrain.
        k_inv: Inverted pendulum foothold gain.
        hip_height: Hip height h used by the inverted pendulum term.
        n_samples: Samples N over the horizon.
        rho: QP Hessian regularization.
    """

    w_acc: float = 1e-2
    w_pre_pos: float = 1.0
    w_pre_vel: float = 0.1
    w_pre_acc: float = 1e-3
    w_ref: float = 10.0
    w_def: float = 1.0
    w_fh: float = 50.0
    w_sh: float = 50.0
    w_apex: float = 5.0
    r_def: t.Tuple[float, float] = (0.3, 0.2)
    x_kin: float = 0.25
    y_kin: float = 0.15
    z_kin: float = 0.25
    z_sh: float = 0.1
    k_inv: float = 0.5
    hip_height: float = 0.45
    n_samples: int = 40
    rho: float = DEFAULT_RHO

    def __post_init__(self) -> None:
        self.r_def = (float(self.r_def[0]), float(self.r_def[1]))
        weights = (
            self.w_acc,
            self.w_pre_pos,
            self.w_pre_vel,
            self.w_pre_acc,
            self.w_ref,
            self.w_def,
            self.w_fh,
            self.w_sh,
            self.w_apex,
        )
        if any(w < 0 for w in weights):
            raise InputError("Wheel planner weights must be non-negative")
        if min(self.x_kin, self.y_kin, self.z_kin) <= 0:
            raise InputError("Kinematic limits must be positive")
        if self.n_samples < 10:
            raise InputError(f"Wheel planner needs at least 10 samples, got {self.n_samples}")
        if self.hip_height <= 0:
            raise InputError("Hip height must be positive")

    def pack(self) -> t.Dict[str, t.Any]:
        data = dataclasses.asdict(self)
        data["r_def"] = list(self.r_def)
        return data

    @classmethod
    def unpack(
        cls,
        obj: t.Dict[str, t.Any],
    ) -> WheelToConfig:
        return cls(**obj)


@dataclasses.dataclass(frozen=True, eq=False)
class WheelReference:
    """Reference motion of one wheel, vectors expressed in its frame W.

    Args:
        v_ref: Reference COM velocity.
        omega_ref: Reference yaw rate.
        v_bh_ref: Reference hip velocity.
        v_bh: Measured hip velocity.
        h: Hip height.
        g: Gravitational acceleration.
        r_bw_xy: Vector from the COM to the projected wheel.
    """

    v_ref: np.ndarray
    omega_ref: float
    v_bh_ref: np.ndarray
    v_bh: np.ndarray
    h: float
    g: float
    r_bw_xy: np.ndarray

    def __post_init__(self) -> None:
        if not self.h > 0 or not self.g > 0:
            raise InputError("Hip height and gravity must be positive")
        for name in ("v_ref", "v_bh_ref", "v_bh", "r_bw_xy"):
            arr = np.zeros(3)
            value = np.asarray(getattr(self, name), dtype=float).reshape(-1)
            arr[: value.shape[0]] = value
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def _rot2(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


def inverted_pendulum_offset(ref: WheelReference, k_inv: float) -> np.ndarray:
    """Touch-down offset k_inv * (v_bh_ref - v_bh) * sqrt(h / g)."""
    return t.cast(np.ndarray, k_inv * (ref.v_bh_ref - ref.v_bh) * math.sqrt(ref.h / ref.g))


def foothold_reference(
    ref: WheelReference,
    r_def_xy: npt.ArrayLike,
    dt_i: float,
) -> np.ndarray:
    """Default foothold moved by the reference twist over dt_i."""
    if not dt_i > 0:
        raise InputError(f"Foothold look-ahead must be positive, got {dt_i}")

    omega = np.array([0.0, 0.0, ref.omega_ref])
    shift = (ref.v_ref + np.cross(omega, ref.r_bw_xy)) * dt_i
    return t.cast(np.ndarray, np.asarray(r_def_xy, dtype=float)[:2] + shift[:2])


def wheel_reference(
    state: RobotState,
    leg: str,
    v_ref: npt.ArrayLike,
    omega_ref: float,
    cfg: WheelToConfig,
    g: float = GRAVITY,
) -> WheelReference:
    """Reference of one wheel from the measured state and the commanded base twist.

    Velocities are expressed in the heading frame, which matches frame W at
    the start of the horizon on flat terrain.
    """
    v_ref_h = np.zeros(3)
    vr = np.asarray(v_ref, dtype=float).reshape(-1)
    v_ref_h[: min(3, vr.shape[0])] = vr[:3]
    v_ref_h[2] = 0.0

    offset = leg_offset(leg, cfg.r_def)
    r_bw = np.array([offset[0], offset[1], 0.0])
    yaw_rate = float(state.angle_rates[0])

    heading_from_world = _rot2(-state.yaw)
    v_com_h = np.zeros(3)
    v_com_h[:2] = heading_from_world @ state.v_com[:2]

    v_bh_ref = v_ref_h + np.cross([0.0, 0.0, omega_ref], r_bw)
    v_bh = v_com_h + np.cross([0.0, 0.0, yaw_rate], r_bw)
    return WheelReference(
        v_ref=v_ref_h,
        omega_ref=float(omega_ref),
        v_bh_ref=v_bh_ref,
        v_bh=v_bh,
        h=cfg.hip_height,
        g=g,
        r_bw_xy=r_bw,
    )


def sample_times(t_f: float, n: int) -> np.ndarray:
    """Uniform grid t_k = k * t_f / n for k = 1..n."""
    return np.arange(1, n + 1) * (t_f / n)


def shift_previous(
    prev: SegmentSequence,
    t_pre: float,
    times: npt.ArrayLike,
) -> Kinematics:
    """Evaluate prev at times + t_pre, clamped to prev's horizon.

    Returns:
        Kinematics: Arrays of shape (len(times), 3).
    """
    if t_pre < 0:
        raise InputError(f"Elapsed time since the previous solution must be non-negative, got {t_pre}")

    pos, vel, acc = [], [], []
    for tk in np.asarray(times, dtype=float):
        k = prev.evaluate(min(tk + t_pre, prev.t_f), clamp=True)
        pos.append(k.position)
        vel.append(k.velocity)
        acc.append(k.acceleration)
    return Kinematics(np.array(pos), np.array(vel), np.array(acc))


@dataclasses.dataclass(frozen=True)
class SegmentSpec:
    kind: str
    start: float
    end: float

    @property
    def duration(self) -> float:
        return self.end - self.start


def segment_plan(leg_schedule: LegSchedule) -> t.Tuple[SegmentSpec, ...]:
    """One contact segment per contact phase and one air segment per swing half."""
    return tuple(
        SegmentSpec("air" if phase.kind.in_air else "contact", phase.start, phase.end) for phase in leg_schedule.phases
    )


@dataclasses.dataclass(frozen=True, eq=False)
class WheelPlan:
    """Solved trajectory of one wheel.

    Args:
        leg: The leg name.
        t0: Absolute time the horizon starts at.
        frame: Frame W the sequence is expressed in.
        sequence: The wheel trajectory in frame W.
        default_path: Default positions in W at the sample times.
        sample_times: Horizon times of the samples.
        kin_limits: The (x, y, z) half-extents of the kinematic box.
        iterations: QP iterations spent.
        solve_time: Wall clock seconds spent assembling and solving.
        active_set: Active inequality rows of the QP.
    """

    leg: str
    t0: float
    frame: WheelFrame
    sequence: SegmentSequence
    default_path: np.ndarray
    sample_times: np.ndarray
    kin_limits: np.ndarray
    iterations: int = 0
    solve_time: float = 0.0
    active_set: t.Tuple[int, ...] = ()

    @property
    def t_f(self) -> float:
        return self.sequence.t_f

    def local(self, tau: float, clamp: bool = True) -> Kinematics:
        return self.sequence.evaluate(tau, clamp=clamp)

    def world(self, tau: float, clamp: bool = True) -> Kinematics:
        k = self.sequence.evaluate(tau, clamp=clamp)
        return Kinematics(
            self.frame.to_world(k.position),
            self.frame.vector_to_world(k.velocity),
            self.frame.vector_to_world(k.acceleration),
        )

    def in_contact(self, tau: float) -> bool:
        tau = min(max(tau, 0.0), self.t_f)
        return self.sequence.segments[self.sequence.segment_index(tau)].kind == "contact"


@dataclasses.dataclass(frozen=True, eq=False)
class WheelProblem:
    """Assembled QP of one wheel together with what is needed to read its solution back."""

    leg: str
    t0: float
    qp: QpProblem
    plan: t.Tuple[SegmentSpec, ...]
    frame: WheelFrame
    omega_ref: float
    t_f: float
    default_path: np.ndarray
    sample_times: np.ndarray
    kin_limits: np.ndarray


class SplineQpBuilder:
    """Accumulates the quadratic costs and linear constraints over the stacked segment variables."""

    def __init__(self, plan: t.Sequence[SegmentSpec], omega_ref: float) -> None:
        self.plan = list(plan)
        self.omega_ref = omega_ref
        self.offsets: t.List[int] = []
        n = 0
        for spec in self.plan:
            self.offsets.append(n)
            n += AIR_DIM if spec.kind == "air" else CONTACT_DIM
        self.n = n
        self.Q = np.zeros((n, n))
        self.c = np.zeros(n)
        self.A_rows: t.List[np.ndarray] = []
        self.b_vals: t.List[float] = []
        self.D_rows: t.List[np.ndarray] = []
        self.f_vals: t.List[float] = []

    def segment_index(self, tau: float) -> int:
        for idx in range(len(self.plan) - 1, -1, -1):
            if tau >= self.plan[idx].start - 1e-9:
                return idx
        return 0

    def transfer(self, idx: int, tau: float) -> t.Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Maps of position, velocity and acceleration at horizon time tau on segment idx, padded to n columns."""
        spec = self.plan[idx]
        local = min(max(tau - spec.start, 0.0), spec.duration)
        if spec.kind == "air":
            maps = air_transfer(local)
        else:
            maps = contact_transfer(local, self.omega_ref, spec.start)
        lo = self.offsets[idx]
        out = []
        for m in maps:
            full = np.zeros((3, self.n))
            full[:, lo : lo + m.shape[1]] = m
            out.append(full)
        return out[0], out[1], out[2]

    def at(self, tau: float) -> t.Tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.transfer(self.segment_index(tau), tau)

    def add_cost(self, M: np.ndarray, y: npt.ArrayLike, weight: float) -> None:
        """Adds weight * ||M xi - y||^2."""
        if weight == 0.0:
            return
        M = np.atleast_2d(M)
        y = np.atleast_1d(np.asarray(y, dtype=float))
        self.Q += 2.0 * weight * M.T @ M
        self.c += -2.0 * weight * M.T @ y

    def add_eq(self, M: np.ndarray, y: npt.ArrayLike) -> None:
        M = np.atleast_2d(M)
        for row, val in zip(M, np.atleast_1d(np.asarray(y, dtype=float))):
            if np.any(row != 0.0):
                self.A_rows.append(row)
                self.b_vals.append(float(val))

    def add_ineq(self, M: np.ndarray, y: npt.ArrayLike) -> None:
        M = np.atleast_2d(M)
        for row, val in zip(M, np.atleast_1d(np.asarray(y, dtype=float))):
            if np.any(row != 0.0):
                self.D_rows.append(row)
                self.f_vals.append(float(val))

    def problem(self) -> QpProblem:
        sym = 0.5 * (self.Q + self.Q.T)
        return QpProblem(
            Q=sym,
            c=self.c,
            A=np.array(self.A_rows).reshape(-1, self.n),
            b=np.array(self.b_vals),
            D=np.array(self.D_rows).reshape(-1, self.n),
            f=np.array(self.f_vals),
        )


class _DefaultPath:
    """Default wheel positions moving with the reference base twist, in world."""

    def __init__(
        self,
        state: RobotState,
        leg: str,
        v_ref: np.ndarray,
        omega_ref: float,
        cfg: WheelToConfig,
        terrain: TerrainPlane,
    ) -> None:
        self.com_xy = np.array(state.r_com[:2])
        self.yaw = state.yaw
        self.v = complex(v_ref[0], v_ref[1])
        self.omega = omega_ref
        off = leg_offset(leg, cfg.r_def)
        self.offset = complex(off[0], off[1])
        self.terrain = terrain

    def position(self, tau: float) -> np.ndarray:
        disp = np.exp(1j * self.yaw) * self.v * contact_integrals(tau, self.omega)[0]
        hip = np.exp(1j * (self.yaw + self.omega * tau)) * self.offset
        xy = self.com_xy + np.array([(disp + hip).real, (disp + hip).imag])
        return self.terrain.drop_onto([xy[0], xy[1], 0.0])

    def velocity(self, tau: float) -> np.ndarray:
        vel = np.exp(1j * (self.yaw + self.omega * tau)) * (self.v + 1j * self.omega * self.offset)
        n = self.terrain.normal
        vz = -(n[0] * vel.real + n[1] * vel.imag) / n[2]
        return np.array([vel.real, vel.imag, vz])


def _check_plan(plan: t.Sequence[SegmentSpec], t_f: float) -> None:
    if not plan:
        raise AssemblyError("The segment plan is empty")
    cursor = 0.0
    for spec in plan:
        if spec.kind not in ("air", "contact"):
            raise AssemblyError(f"Unknown segment kind {spec.kind}")
        if abs(spec.start - cursor) > 1e-9 or spec.duration <= 0:
            raise AssemblyError(f"Segment plan has a gap or overlap at {spec.start}")
        cursor = spec.end
    if abs(cursor - t_f) > 1e-9:
        raise AssemblyError(f"Segment plan ends at {cursor} instead of the horizon {t_f}")


def assemble_wheel(
    state: RobotState,
    schedule: ContactSchedule,
    cfg: WheelToConfig,
    prev: t.Optional[WheelPlan],
    terrain: TerrainPlane,
    ref: WheelReference,
    t_pre: float,
    leg: str,
    plan: t.Optional[t.Sequence[SegmentSpec]] = None,
) -> WheelProblem:
    """Build the wheel QP of one leg.

    Args:
        state: Measured state the horizon starts from.
        schedule: Contact schedule starting at the state's time.
        cfg: Planner weights and limits.
        prev: The last plan of this wheel, the default path is tracked instead
            when absent.
        terrain: Current terrain estimate.
        ref: Reference of this wheel, see wheel_reference.
        t_pre: Seconds elapsed since prev was computed.
        leg: The leg to plan.
        plan: Explicit segment plan, derived from the schedule when omitted.

    Returns:
        WheelProblem: The QP with the data needed by solve_wheel.
    """
    t_f = schedule.t_f
    leg_sched = schedule.leg(leg)
    specs = tuple(plan) if plan is not None else segment_plan(leg_sched)
    _check_plan(specs, t_f)
    if prev is not None and t_pre < 0:
        raise AssemblyError("t_pre must be non-negative")

    pos_w, vel_w, acc_w = state.wheel(leg)
    heading = np.array([math.cos(state.yaw), math.sin(state.yaw), 0.0])
    frame = wheel_frame(terrain, pos_w, heading)

    omega = ref.omega_ref
    b = SplineQpBuilder(specs, omega)

    default = _DefaultPath(state, leg, ref.v_ref, omega, cfg, terrain)

    times = sample_times(t_f, cfg.n_samples)
    dt = t_f / cfg.n_samples
    default_local = np.array([frame.to_local(default.position(tk)) for tk in times])
    kin = np.array([cfg.x_kin, cfg.y_kin, cfg.z_kin])

    # Acceleration.
    for idx, spec in enumerate(specs):
        lo = b.offsets[idx]
        if spec.kind == "air":
            hess = accel_hessian_air(spec.duration, cfg.w_acc)
        else:
            hess = accel_hessian_contact(spec.duration, omega, cfg.w_acc)
        size = hess.shape[0]
        b.Q[lo : lo + size, lo : lo + size] += hess

    # Previous solution, or the default path while there is none.
    if prev is not None:
        shifted = shift_previous(prev.sequence, t_pre, times)
        prev_pos = np.array([frame.to_local(prev.frame.to_world(p)) for p in shifted.position])
        prev_vel = np.array([frame.vector_to_local(prev.frame.vector_to_world(v)) for v in shifted.velocity])
        prev_acc = np.array([frame.vector_to_local(prev.frame.vector_to_world(a)) for a in shifted.acceleration])
    else:
        prev_pos = default_local
        prev_vel = np.array([frame.vector_to_local(default.velocity(tk)) for tk in times])
        prev_acc = np.zeros_like(prev_vel)

    for k, tk in enumerate(times):
        tp, tv, ta = b.at(tk)
        b.add_cost(tp, prev_pos[k], cfg.w_pre_pos * dt)
        b.add_cost(tv, prev_vel[k], cfg.w_pre_vel * dt)
        b.add_cost(ta, prev_acc[k], cfg.w_pre_acc * dt)

    # Reference rolling velocity.
    if specs[0].kind == "contact":
        _, tv0, _ = b.transfer(0, 0.0)
        v_x_ref = ref.v_ref[0] - omega * ref.r_bw_xy[1]
        b.add_cost(tv0[0], [v_x_ref], cfg.w_ref)

    # Default position along the rolling direction over the contact phases.
    for k, tk in enumerate(times):
        idx = b.segment_index(tk)
        if specs[idx].kind != "contact":
            continue
        tp, _, _ = b.transfer(idx, tk)
        b.add_cost(tp[0], [default_local[k, 0]], cfg.w_def * dt)

    # Foothold, swing height and apex placement of every swing inside the horizon.
    r_inv = inverted_pendulum_offset(ref, cfg.k_inv)
    for swing in leg_sched.swings:
        t_lo = max(swing.t_lo, 0.0)
        if swing.t_td <= t_f + 1e-9 and swing.t_td > t_lo:
            heading_lo = omega * t_lo
            rot = _rot2(heading_lo)
            ref_lo = WheelReference(
                v_ref=np.append(rot @ ref.v_ref[:2], 0.0),
                omega_ref=omega,
                v_bh_ref=ref.v_bh_ref,
                v_bh=ref.v_bh,
                h=ref.h,
                g=ref.g,
                r_bw_xy=np.append(rot @ ref.r_bw_xy[:2], 0.0),
            )
            def_lo = frame.to_local(default.position(t_lo))[:2]
            target = foothold_reference(ref_lo, def_lo, swing.t_td - t_lo) + rot @ r_inv[:2]

            td_idx = b.segment_index(swing.t_td - 1e-9)
            tp_td, _, _ = b.transfer(td_idx, swing.t_td)
            b.add_cost(tp_td[:2], target, cfg.w_fh)

            if 0.0 <= swing.t_sh <= t_f:
                tp_sh, _, _ = b.at(swing.t_sh)
                tp_lo, _, _ = b.at(t_lo)
                b.add_cost(tp_sh[2], [cfg.z_sh], cfg.w_sh)
                b.add_cost(tp_sh[:2] - 0.5 * tp_lo[:2], 0.5 * target, cfg.w_apex)

        elif 0.0 <= swing.t_sh <= t_f:
            tp_sh, _, _ = b.at(swing.t_sh)
            b.add_cost(tp_sh[2], [cfg.z_sh], cfg.w_sh)

    # Initial state.
    init_pos = frame.to_local(pos_w)
    tp0, tv0, ta0 = b.transfer(0, 0.0)
    if specs[0].kind == "contact":
        b.add_eq(tp0[:2], init_pos[:2])
    else:
        b.add_eq(tp0, init_pos)
        b.add_eq(tv0, frame.vector_to_local(vel_w))
        b.add_eq(ta0, frame.vector_to_local(acc_w))

    # Continuity.
    for idx in range(len(specs) - 1):
        t_j = specs[idx].end
        lp, lv, la = b.transfer(idx, t_j)
        rp, rv, ra = b.transfer(idx + 1, t_j)
        b.add_eq(rp - lp, np.zeros(3))
        b.add_eq(rv - lv, np.zeros(3))
        if specs[idx].kind == "air" and specs[idx + 1].kind == "air":
            b.add_eq(ra - la, np.zeros(3))

    # Kinematic box around the default path.
    for k, tk in enumerate(times):
        tp, _, _ = b.at(tk)
        b.add_ineq(tp, default_local[k] + kin)
        b.add_ineq(-tp, kin - default_local[k])

    return WheelProblem(
        leg=leg,
        t0=state.time,
        qp=b.problem(),
        plan=specs,
        frame=frame,
        omega_ref=omega,
        t_f=t_f,
        default_path=default_local,
        sample_times=times,
        kin_limits=kin,
    )


def build_sequence(problem: WheelProblem, xi: np.ndarray) -> SegmentSequence:
    segments: t.List[Segment] = []
    offset = 0
    for spec in problem.plan:
        if spec.kind == "air":
            segments.append(AirSegment.from_xi(xi[offset : offset + AIR_DIM], spec.start, spec.duration))
            offset += AIR_DIM
        else:
            xi_c = xi[offset : offset + CONTACT_DIM]
            segments.append(ContactSegment.from_xi(xi_c, problem.omega_ref, spec.start, spec.duration))
            offset += CONTACT_DIM
    return SegmentSequence(tuple(segments), problem.t_f)


def solve_wheel(
    problem: WheelProblem,
    solver: t.Optional[GoldfarbIdnaniSolver] = None,
    rho: float = DEFAULT_RHO,
) -> WheelPlan:
    """Solve the wheel QP and rebuild the segments.

    Raises:
        WheelPlanningError: The QP did not solve to optimality.
    """
    start = time.perf_counter()
    solver = solver or GoldfarbIdnaniSolver(rho=rho)
    sol: QpSolution = solver.solve(problem.qp)
    if not sol.ok:
        log.warning("Wheel %s QP failed with %s", problem.leg, sol.status.value)
        raise WheelPlanningError(problem.leg, sol.status.value)

    sequence = build_sequence(problem, sol.x)
    elapsed = time.perf_counter() - start
    log.debug("Wheel %s solved in %d iterations, %.3f ms", problem.leg, sol.iterations, elapsed * 1000)
    return WheelPlan(
        leg=problem.leg,
        t0=problem.t0,
        frame=problem.frame,
        sequence=sequence,
        default_path=problem.default_path,
        sample_times=problem.sample_times,
        kin_limits=problem.kin_limits,
        iterations=sol.iterations,
        solve_time=elapsed,
        active_set=sol.active_set,
    )


def plan_wheels(
    state: RobotState,
    schedule: ContactSchedule,
    cfg: WheelToConfig,
    prevs: t.Optional[t.Sequence[t.Optional[WheelPlan]]],
    terrain: TerrainPlane,
    v_ref: npt.ArrayLike,
    omega_ref: float,
    t_pre: float = 0.0,
) -> t.Tuple[WheelPlan, WheelPlan, WheelPlan, WheelPlan]:
    """Plan all four wheels concurrently, one worker thread per leg.

    The wheel problems share only immutable inputs. The first failing leg
    raises its error once every worker has finished.
    """

    def plan(idx: int) -> WheelPlan:
        prev = prevs[idx] if prevs else None
        return plan_wheel(state, schedule, cfg, prev, terrain, v_ref, omega_ref, t_pre, LEGS[idx])

    with concurrent.futures.ThreadPoolExecutor(max_workers=len(LEGS), thread_name_prefix="wheel") as executor:
        plans = list(executor.map(plan, range(len(LEGS))))
    return tuple(plans)  # type: ignore[return-value]


def plan_wheel(
    state: RobotState,
    schedule: ContactSchedule,
    cfg: WheelToConfig,
    prev: t.Optional[WheelPlan],
    terrain: TerrainPlane,
    v_ref: npt.ArrayLike,
    omega_ref: float,
    t_pre: float,
    leg: str,
) -> WheelPlan:
    start = time.perf_counter()
    ref = wheel_reference(state, leg, v_ref, omega_ref, cfg)
    problem = assemble_wheel(state, schedule, cfg, prev, terrain, ref, t_pre, leg)
    plan = solve_wheel(problem, rho=cfg.rho)
    return dataclasses.replace(plan, solve_time=time.perf_counter() - start)


@dataclasses.dataclass(frozen=True)
class WheelCertificate:
    continuity: float
    kinematic_violation: float
    lateral_slip: float

    @property
    def ok(self) -> bool:
        return self.continuity < _CERT_TOL and self.kinematic_violation < _CERT_TOL and self.lateral_slip < _CERT_TOL


def certify_wheel(plan: WheelPlan) -> WheelCertificate:
    """Recompute junction continuity, sampled kinematic limits and lateral slip of a plan."""
    continuity = plan.sequence.continuity_residual()

    violation = 0.0
    for k, tk in enumerate(plan.sample_times):
        pos = plan.sequence.evaluate(float(tk)).position
        excess = np.abs(pos - plan.default_path[k]) - plan.kin_limits
        violation = max(violation, float(np.max(excess)))

    slip = 0.0
    for seg in plan.sequence:
        if not isinstance(seg, ContactSegment):
            continue
        for tau in np.linspace(seg.t_start, seg.t_end, 5):
            k = seg.evaluate(float(tau))
            lateral = np.array([-math.sin(seg.omega_ref * tau), math.cos(seg.omega_ref * tau), 0.0])
            slip = max(slip, abs(float(k.velocity @ lateral)), abs(float(k.velocity[2])), abs(float(k.position[2])))

    return WheelCertificate(continuity, max(violation, 0.0), slip)
