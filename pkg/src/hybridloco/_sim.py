# -*- coding: utf-8 -*-
# Copyright (c) 2026 hybridloco contributors
# GNU General Public License v3.0+ (see COPYING or https://www.gnu.org/licenses/gpl-3.0.txt)

"""Receding horizon simulation.

The plant plays the latest plans back kinematically. A state that drifted
from the plan keeps its offset until the next replan picks it up as the
measured state.
"""

from __future__ import annotations

import dataclasses
import enum
import logging
import math
import threading
import time
import typing as t

import numpy as np
import numpy.typing as npt

from ._base_to import (
    BaseReference,
    BaseToConfig,
    BaseTrajectory,
    base_reference,
    certify_base,
    plan_base,
    polygon_from_points,
    zmp_point,
)
from ._errors import (
    DegenerateContactError,
    HybridLocoError,
    InfeasibleError,
    InputError,
    NumericalError,
    PlaybackError,
)
from ._gait import LEGS, GaitPattern, advance_phase, build_schedule, flags_at_phase
from ._mailbox import CancellationToken, Mailbox, PeriodicTask
from ._spline import Kinematics
from ._state import RobotState
from ._terrain import ContactBuffer, TerrainPlane
from ._wheel_to import WheelPlan, WheelToConfig, certify_wheel, plan_wheel, plan_wheels

if t.TYPE_CHECKING:
    from .scenario import Scenario

log = logging.getLogger(__name__)

_HORIZON_TOL = 1e-9


@dataclasses.dataclass()
class Rates:
    """Invocation rates in Hz of the planners and the plant."""

    wheel_hz: float = 100.0
    base_hz: float = 50.0
    sim_hz: float = 400.0

    def __post_init__(self) -> None:
        if min(self.wheel_hz, self.base_hz, self.sim_hz) <= 0:
            raise InputError("Rates must be positive")
        if self.sim_hz < max(self.wheel_hz, self.base_hz):
            raise InputError(f"Plant rate {self.sim_hz} Hz must not be below the planner rates")

    @property
    def dt(self) -> float:
        return 1.0 / self.sim_hz

    @property
    def wheel_every(self) -> int:
        return max(1, round(self.sim_hz / self.wheel_hz))

    @property
    def base_every(self) -> int:
        return max(1, round(self.sim_hz / self.base_hz))

    def pack(self) -> t.Dict[str, t.Any]:
        return dataclasses.asdict(self)

    @classmethod
    def unpack(
        cls,
        obj: t.Dict[str, t.Any],
    ) -> Rates:
        return cls(**obj)


class DisturbanceTarget(enum.Enum):
    COM_OFFSET = "com_offset"
    COM_VELOCITY_KICK = "com_velocity_kick"
    WHEEL_OFFSET = "wheel_offset"


@dataclasses.dataclass(frozen=True, eq=False)
class Disturbance:
    """An instantaneous change of the measured state.

    Args:
        time: Simulation time the disturbance is applied at.
        target: The state field that is offset.
        magnitude: The offset added to the field.
        leg: The wheel to move, only for wheel_offset.
    """

    time: float
    target: DisturbanceTarget
    magnitude: np.ndarray
    leg: t.Optional[str] = None

    def __post_init__(self) -> None:
        mag = np.array(self.magnitude, dtype=float).reshape(3)
        if not np.all(np.isfinite(mag)):
            raise InputError("Disturbance magnitude must be finite")
        mag.setflags(write=False)
        object.__setattr__(self, "magnitude", mag)
        object.__setattr__(self, "target", DisturbanceTarget(self.target))
        if self.target == DisturbanceTarget.WHEEL_OFFSET and self.leg not in LEGS:
            raise InputError(f"wheel_offset needs a leg out of {', '.join(LEGS)}, got {self.leg!r}")

    def pack(self) -> t.Dict[str, t.Any]:
        data: t.Dict[str, t.Any] = {
            "time": self.time,
            "target": self.target.value,
            "magnitude": [float(v) for v in self.magnitude],
        }
        if self.leg is not None:
            data["leg"] = self.leg
        return data

    @classmethod
    def unpack(
        cls,
        obj: t.Dict[str, t.Any],
    ) -> Disturbance:
        return Disturbance(
            time=float(obj["time"]),
            target=DisturbanceTarget(obj["target"]),
            magnitude=np.asarray(obj["magnitude"], dtype=float),
            leg=obj.get("leg", None),
        )


def random_pushes(
    seed: int,
    count: int,
    magnitude: float,
    duration: float,
) -> t.List[Disturbance]:
    """Seeded horizontal COM velocity kicks spread over the middle of the episode."""
    rng = np.random.default_rng(seed)
    pushes = []
    for push_time, angle in zip(
        np.sort(rng.uniform(0.1 * duration, 0.9 * duration, count)),
        rng.uniform(-math.pi, math.pi, count),
    ):
        kick = magnitude * np.array([math.cos(angle), math.sin(angle), 0.0])
        pushes.append(Disturbance(float(push_time), DisturbanceTarget.COM_VELOCITY_KICK, kick))
    return pushes


def inject(state: RobotState, d: Disturbance) -> RobotState:
    if d.target == DisturbanceTarget.COM_OFFSET:
        return state.replace(r_com=state.r_com + d.magnitude)
    elif d.target == DisturbanceTarget.COM_VELOCITY_KICK:
        return state.replace(v_com=state.v_com + d.magnitude)
    else:
        pos, _, _ = state.wheel(t.cast(str, d.leg))
        return state.with_wheel(t.cast(str, d.leg), position=pos + d.magnitude)


def _playback(
    plan: t.Callable[[float], Kinematics],
    tau0: float,
    tau1: float,
    position: np.ndarray,
    velocity: np.ndarray,
    acceleration: np.ndarray,
) -> Kinematics:
    then = plan(tau0)
    now = plan(tau1)
    return Kinematics(
        now.position + (position - then.position),
        now.velocity + (velocity - then.velocity),
        now.acceleration + (acceleration - then.acceleration),
    )


def _check_horizon(name: str, tau: float, t_f: float) -> None:
    if tau < -_HORIZON_TOL or tau > t_f + _HORIZON_TOL:
        raise PlaybackError(f"The {name} plan covers [0, {t_f:.4f}] s but playback needs {tau:.4f} s")


def step(
    state: RobotState,
    base: BaseTrajectory,
    wheels: t.Sequence[WheelPlan],
    dt: float,
    terrain: t.Optional[TerrainPlane] = None,
) -> RobotState:
    """Advance the plant by dt along the plans.

    Raises:
        PlaybackError: A plan does not cover state.time + dt.
    """
    if dt < 0:
        raise InputError(f"Step must be non-negative, got {dt}")
    if dt == 0:
        return state

    plane = terrain or base.terrain
    tau0 = state.time - base.t0
    tau1 = tau0 + dt
    _check_horizon("base", tau1, base.t_f)

    com = _playback(base.com_at, tau0, tau1, state.r_com, state.v_com, state.a_com)
    ang = _playback(base.angles_at, tau0, tau1, state.angles, state.angle_rates, state.angle_accs)

    wheel_pos = np.zeros((4, 3))
    wheel_vel = np.zeros((4, 3))
    wheel_acc = np.zeros((4, 3))
    contact = []
    for idx, plan in enumerate(wheels):
        w0 = state.time - plan.t0
        w1 = w0 + dt
        _check_horizon(f"wheel {plan.leg}", w1, plan.t_f)
        k = _playback(plan.world, w0, w1, state.wheel_pos[idx], state.wheel_vel[idx], state.wheel_acc[idx])
        in_contact = plan.in_contact(w1)
        pos, vel = k.position, k.velocity
        if in_contact:
            pos = plane.project(pos)
            vel = vel - (vel @ plane.normal) * plane.normal
        wheel_pos[idx], wheel_vel[idx], wheel_acc[idx] = pos, vel, k.acceleration
        contact.append(in_contact)

    return state.replace(
        time=state.time + dt,
        r_com=com.position,
        v_com=com.velocity,
        a_com=com.acceleration,
        angles=ang.position,
        angle_rates=ang.velocity,
        angle_accs=ang.acceleration,
        wheel_pos=wheel_pos,
        wheel_vel=wheel_vel,
        wheel_acc=wheel_acc,
        contact=tuple(contact),
    )


@dataclasses.dataclass(frozen=True)
class SolveRecord:
    """Outcome of one planner invocation."""

    time: float
    planner: str
    duration: float
    iterations: int
    ok: bool
    zmp_margin: float = math.nan
    continuity: float = math.nan
    kinematic_violation: float = math.nan
    message: str = ""
    exit_code: int = 0

    @property
    def group(self) -> str:
        return self.planner.split(" ")[0]


@dataclasses.dataclass(frozen=True, eq=False)
class TickRecord:
    state: RobotState
    planned_com: np.ndarray
    zmp_margin: float


def _stats(values: t.Sequence[float]) -> t.Dict[str, float]:
    if not values:
        return {"count": 0, "mean": math.nan, "p50": math.nan, "p95": math.nan, "max": math.nan}
    arr = np.asarray(values, dtype=float) * 1000.0
    return {
        "count": int(arr.shape[0]),
        "mean": float(np.mean(arr)),
        "p50": float(np.percentile(arr, 50)),
        "p95": float(np.percentile(arr, 95)),
        "max": float(np.max(arr)),
    }


class EpisodeLog:
    """Everything recorded over one episode.

    Ticks are appended by the plant only, solves may come from planner
    threads.
    """

    def __init__(
        self,
        gait: GaitPattern,
        rates: Rates,
    ) -> None:
        self.gait = gait
        self.rates = rates
        self.ticks: t.List[TickRecord] = []
        self.solves: t.List[SolveRecord] = []
        self.failures: t.List[str] = []
        self.exit_code = 0
        self._lock = threading.Lock()

    @property
    def failed(self) -> bool:
        return bool(self.failures)

    @property
    def states(self) -> t.List[RobotState]:
        return [tick.state for tick in self.ticks]

    def append_tick(
        self,
        state: RobotState,
        planned_com: npt.ArrayLike,
        zmp_margin: float,
    ) -> None:
        if self.ticks and state.time <= self.ticks[-1].state.time:
            raise PlaybackError(f"Tick at {state.time} does not advance past {self.ticks[-1].state.time}")
        self.ticks.append(TickRecord(state, np.asarray(planned_com, dtype=float), zmp_margin))

    def record_solve(self, record: SolveRecord) -> None:
        with self._lock:
            self.solves.append(record)
            if not record.ok:
                self._fail(f"{record.planner} at {record.time:.4f} s: {record.message}", record.exit_code)

    def _fail(self, message: str, exit_code: int) -> None:
        if not self.failures:
            self.exit_code = exit_code or 1
        self.failures.append(message)

    def record_failure(self, message: str, exit_code: int = NumericalError.exit_code) -> None:
        with self._lock:
            self._fail(message, exit_code)

    def record_failure_from(self, task: str, exc: Exception) -> None:
        code = exc.exit_code if isinstance(exc, HybridLocoError) else 1
        self.record_failure(f"{task} task raised {type(exc).__name__}: {exc}", code)

    def summary(self) -> t.Dict[str, t.Any]:
        with self._lock:
            solves = list(self.solves)

        base = [s for s in solves if s.group == "base"]
        margins = [s.zmp_margin for s in base if s.ok and not math.isnan(s.zmp_margin)]
        residuals = [s.continuity for s in solves if s.ok and not math.isnan(s.continuity)]
        return {
            "gait": self.gait.name,
            "duration": self.ticks[-1].state.time if self.ticks else 0.0,
            "ticks": len(self.ticks),
            "wheel_ms": _stats([s.duration for s in solves if s.group == "wheel"]),
            "base_ms": _stats([s.duration for s in base]),
            "reference_wheel_ms": self.gait.reference_wheel_ms,
            "reference_base_ms": self.gait.reference_base_ms,
            "worst_zmp_margin": min(margins) if margins else math.nan,
            "max_continuity_residual": max(residuals) if residuals else math.nan,
            "failed": self.failed,
            "first_failure": self.failures[0] if self.failures else None,
            "exit_code": self.exit_code,
        }


def executed_zmp_margin(state: RobotState, cfg: BaseToConfig, terrain: TerrainPlane) -> float:
    """ZMP margin of the measured state against the polygon of its contact wheels, nan in flight."""
    contacts = [state.wheel_pos[idx] for idx, flag in enumerate(state.contact) if flag]
    polygon = polygon_from_points(state.time, np.array(contacts).reshape(-1, 3), cfg.epsilon)
    if polygon.flight:
        return math.nan
    try:
        zmp = zmp_point(state.r_com, state.a_com, cfg.mass, terrain.normal, terrain.point, cfg.l_dot)
    except DegenerateContactError:
        return -math.inf
    return polygon.margin(zmp)


def initial_state(
    gait: GaitPattern,
    terrain: TerrainPlane,
    wheel_cfg: WheelToConfig,
    base_cfg: BaseToConfig,
    phase: float = 0.0,
) -> RobotState:
    return RobotState.standing(
        terrain,
        base_cfg.com_height,
        wheel_cfg.r_def,
        contact=flags_at_phase(gait, phase),
        phase=phase,
    )


class _Planners:
    """Replans from the measured state and records every outcome."""

    def __init__(
        self,
        gait: GaitPattern,
        wheel_cfg: WheelToConfig,
        base_cfg: BaseToConfig,
        log_: EpisodeLog,
    ) -> None:
        self.gait = gait
        self.wheel_cfg = wheel_cfg
        self.base_cfg = base_cfg
        self.log = log_

    def wheel(
        self,
        state: RobotState,
        leg: str,
        prev: t.Optional[WheelPlan],
        terrain: TerrainPlane,
        v_ref: np.ndarray,
        omega_ref: float,
    ) -> t.Optional[WheelPlan]:
        name = f"wheel {leg}"
        start = time.perf_counter()
        try:
            schedule = build_schedule(self.gait, t0=state.time, phase0=state.phase)
            t_pre = state.time - prev.t0 if prev is not None else 0.0
            plan = plan_wheel(state, schedule, self.wheel_cfg, prev, terrain, v_ref, omega_ref, t_pre, leg)
        except HybridLocoError as e:
            log.warning("%s replan at %.4f s failed: %s", name, state.time, e)
            elapsed = time.perf_counter() - start
            record = SolveRecord(state.time, name, elapsed, 0, False, message=str(e), exit_code=e.exit_code)
            self.log.record_solve(record)
            return None

        cert = certify_wheel(plan)
        record = SolveRecord(
            state.time,
            name,
            plan.solve_time,
            plan.iterations,
            cert.ok,
            continuity=cert.continuity,
            kinematic_violation=cert.kinematic_violation,
            message="" if cert.ok else "certificate failed",
            exit_code=0 if cert.ok else InfeasibleError.exit_code,
        )
        self.log.record_solve(record)
        return plan if cert.ok else None

    def base(
        self,
        state: RobotState,
        wheels: t.Sequence[WheelPlan],
        prev: t.Optional[BaseTrajectory],
        terrain: TerrainPlane,
        ref: BaseReference,
    ) -> t.Optional[BaseTrajectory]:
        start = time.perf_counter()
        try:
            traj = plan_base(state, wheels, self.base_cfg, prev, terrain, ref)
        except HybridLocoError as e:
            log.warning("Base replan at %.4f s failed: %s", state.time, e)
            elapsed = time.perf_counter() - start
            record = SolveRecord(state.time, "base", elapsed, 0, False, message=str(e), exit_code=e.exit_code)
            self.log.record_solve(record)
            return None

        cert = certify_base(traj, self.base_cfg)
        report = traj.report
        record = SolveRecord(
            state.time,
            "base",
            traj.solve_time,
            report.iterations if report else 0,
            cert.ok,
            zmp_margin=cert.zmp_margin,
            continuity=cert.continuity,
            message="" if cert.ok else "certificate failed",
            exit_code=0 if cert.ok else InfeasibleError.exit_code,
        )
        self.log.record_solve(record)
        return traj if cert.ok else None


def plan_once(scenario: Scenario) -> t.Tuple[t.Tuple[WheelPlan, ...], BaseTrajectory]:
    """Plan every wheel and then the base once from the initial state of the scenario.

    Raises:
        HybridLocoError: A planner failed, the exit code tells infeasible from
            numerical failures.
    """
    terrain = scenario.plane()
    state = initial_state(scenario.gait, terrain, scenario.wheel, scenario.base, scenario.initial_phase)
    v_ref, omega_ref = scenario.velocity_at(0.0)
    log.info("Planning %s with gait %s at v_ref %s", scenario.name, scenario.gait.name, v_ref)

    schedule = build_schedule(scenario.gait, t0=0.0, phase0=scenario.initial_phase)
    wheels = plan_wheels(state, schedule, scenario.wheel, None, terrain, v_ref, omega_ref)
    for leg, plan in zip(LEGS, wheels):
        cert = certify_wheel(plan)
        if not cert.ok:
            log.warning("Wheel %s plan fails its certificate: %s", leg, cert)

    base = plan_base(state, wheels, scenario.base, None, terrain, base_reference(state, v_ref, omega_ref))
    cert_base = certify_base(base, scenario.base)
    if not cert_base.ok:
        log.warning("Base plan fails its certificate: %s", cert_base)
    return wheels, base


def run_episode(
    scenario: Scenario,
    rates: t.Optional[Rates] = None,
    sync: t.Optional[bool] = None,
) -> EpisodeLog:
    """Simulate the scenario with replanning.

    Args:
        scenario: Gait, commands, terrain, disturbances and planner settings.
        rates: Planner and plant rates, the scenario's when omitted.
        sync: Replan every k plant steps in the calling thread instead of
            running the planners as concurrent tasks at wall clock rates.
            The scenario's choice when omitted.

    Returns:
        EpisodeLog: The recorded episode, failed when a planner never produced
        a usable plan or playback ran past a plan.
    """
    rates = rates or scenario.rates
    sync = scenario.sync if sync is None else sync
    log.info(
        "Starting %s episode %s for %.2f s, gait %s",
        "synchronous" if sync else "free-running",
        scenario.name,
        scenario.duration,
        scenario.gait.name,
    )
    if sync:
        episode = _run_sync(scenario, rates)
    else:
        episode = _run_free(scenario, rates)

    log.info("Episode %s finished, failed=%s", scenario.name, episode.failed)
    return episode


def _run_sync(scenario: Scenario, rates: Rates) -> EpisodeLog:
    episode = EpisodeLog(scenario.gait, rates)
    planners = _Planners(scenario.gait, scenario.wheel, scenario.base, episode)
    terrain = scenario.plane()
    buffer = ContactBuffer(terrain, LEGS)
    state = initial_state(scenario.gait, terrain, scenario.wheel, scenario.base, scenario.initial_phase)
    v_ref, omega_ref = scenario.velocity_at(0.0)
    setpoint = base_reference(state, v_ref, omega_ref)
    pending = sorted(scenario.disturbance_events(), key=lambda d: d.time)

    dt = rates.dt
    n_steps = int(round(scenario.duration * rates.sim_hz))
    wheels: t.List[t.Optional[WheelPlan]] = [None, None, None, None]
    base: t.Optional[BaseTrajectory] = None

    for i in range(n_steps + 1):
        while pending and pending[0].time <= state.time + 0.5 * dt:
            d = pending.pop(0)
            log.info("Injecting %s at %.4f s", d.target.value, state.time)
            state = inject(state, d)

        v_ref, omega_ref = scenario.velocity_at(state.time)
        setpoint = setpoint.command(v_ref, omega_ref)

        if i % rates.wheel_every == 0:
            for idx, leg in enumerate(LEGS):
                if state.contact[idx]:
                    buffer.update(leg, state.wheel_pos[idx])
            terrain = buffer.estimate()
            for idx, leg in enumerate(LEGS):
                plan = planners.wheel(state, leg, wheels[idx], terrain, v_ref, omega_ref)
                wheels[idx] = plan or wheels[idx]

        if any(w is None for w in wheels):
            episode.record_failure(f"No wheel plan available at {state.time:.4f} s")
            break
        current = t.cast(t.List[WheelPlan], wheels)

        if i % rates.base_every == 0:
            base = planners.base(state, current, base, terrain, setpoint) or base
        if base is None:
            episode.record_failure(f"No base plan available at {state.time:.4f} s")
            break

        planned = base.com_at(state.time - base.t0).position
        episode.append_tick(state, planned, executed_zmp_margin(state, scenario.base, terrain))
        if i == n_steps:
            break

        try:
            state = step(state, base, current, dt, terrain)
        except PlaybackError as e:
            episode.record_failure(str(e))
            break
        state = state.replace(phase=advance_phase(scenario.gait, state.phase, dt))
        setpoint = setpoint.advance(dt)

    return episode


class _Snapshot(t.NamedTuple):
    state: RobotState
    terrain: TerrainPlane
    setpoint: BaseReference
    v_ref: np.ndarray
    omega_ref: float


def _run_free(scenario: Scenario, rates: Rates) -> EpisodeLog:
    episode = EpisodeLog(scenario.gait, rates)
    planners = _Planners(scenario.gait, scenario.wheel, scenario.base, episode)
    terrain = scenario.plane()
    buffer = ContactBuffer(terrain, LEGS)
    state = initial_state(scenario.gait, terrain, scenario.wheel, scenario.base, scenario.initial_phase)
    v_ref, omega_ref = scenario.velocity_at(0.0)
    setpoint = base_reference(state, v_ref, omega_ref)
    pending = sorted(scenario.disturbance_events(), key=lambda d: d.time)

    snapshots: Mailbox[_Snapshot] = Mailbox("state", _Snapshot(state, terrain, setpoint, v_ref, omega_ref))
    wheel_boxes: t.List[Mailbox[WheelPlan]] = [Mailbox(f"wheel {leg}") for leg in LEGS]
    base_box: Mailbox[BaseTrajectory] = Mailbox("base")

    # The first plans are made before the loops start so the plant always has one.
    for idx, leg in enumerate(LEGS):
        plan = planners.wheel(state, leg, None, terrain, v_ref, omega_ref)
        if plan is None:
            episode.record_failure(f"No initial plan for wheel {leg}")
            return episode
        wheel_boxes[idx].publish(plan)
    first_base = planners.base(state, [t.cast(WheelPlan, b.latest()) for b in wheel_boxes], None, terrain, setpoint)
    if first_base is None:
        episode.record_failure("No initial base plan")
        return episode
    base_box.publish(first_base)

    def replan_wheel(idx: int, leg: str) -> t.Callable[[], None]:
        def run() -> None:
            snap = t.cast(_Snapshot, snapshots.latest())
            plan = planners.wheel(snap.state, leg, wheel_boxes[idx].latest(), snap.terrain, snap.v_ref, snap.omega_ref)
            if plan is not None:
                wheel_boxes[idx].publish(plan)

        return run

    def replan_base() -> None:
        snap = t.cast(_Snapshot, snapshots.latest())
        wheels = [t.cast(WheelPlan, b.latest()) for b in wheel_boxes]
        traj = planners.base(snap.state, wheels, base_box.latest(), snap.terrain, snap.setpoint)
        if traj is not None:
            base_box.publish(traj)

    token = CancellationToken()
    tasks = [
        PeriodicTask(f"wheel {leg}", replan_wheel(idx, leg), 1.0 / rates.wheel_hz, token, episode.record_failure_from)
        for idx, leg in enumerate(LEGS)
    ]
    tasks.append(PeriodicTask("base", replan_base, 1.0 / rates.base_hz, token, episode.record_failure_from))

    dt = rates.dt
    n_steps = int(round(scenario.duration * rates.sim_hz))
    for task in tasks:
        task.start()
    try:
        next_tick = time.perf_counter()
        for i in range(n_steps + 1):
            while pending and pending[0].time <= state.time + 0.5 * dt:
                state = inject(state, pending.pop(0))

            v_ref, omega_ref = scenario.velocity_at(state.time)
            setpoint = setpoint.command(v_ref, omega_ref)
            for idx, leg in enumerate(LEGS):
                if state.contact[idx]:
                    buffer.update(leg, state.wheel_pos[idx])
            terrain = buffer.estimate()
            snapshots.publish(_Snapshot(state, terrain, setpoint, v_ref, omega_ref))

            base = t.cast(BaseTrajectory, base_box.latest())
            wheels = [t.cast(WheelPlan, b.latest()) for b in wheel_boxes]
            planned = base.com_at(state.time - base.t0).position
            episode.append_tick(state, planned, executed_zmp_margin(state, scenario.base, terrain))
            if i == n_steps:
                break

            try:
                state = step(state, base, wheels, dt, terrain)
            except PlaybackError as e:
                episode.record_failure(str(e))
                break
            state = state.replace(phase=advance_phase(scenario.gait, state.phase, dt))
            setpoint = setpoint.advance(dt)

            next_tick += dt
            delay = next_tick - time.perf_counter()
            if delay > 0:
                time.sleep(delay)
    finally:
        token.cancel()
        for task in tasks:
            task.stop()

    return episode
