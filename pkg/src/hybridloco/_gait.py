# -*- coding: utf-8 -*-
# Copyright (c) 2026 hybridloco contributors
# GNU General Public License v3.0+ (see COPYING or https://www.gnu.org/licenses/gpl-3.0.txt)

from __future__ import annotations

import dataclasses
import enum
import typing as t

from ._errors import InputError, IntervalError, ScenarioError

LEGS: t.Tuple[str, ...] = ("LF", "RF", "LH", "RH")

SWING_START = 0.05
_TIME_TOL = 1e-12


class PhaseKind(enum.Enum):
    CONTACT = "contact"
    SWING_UP = "swing_up"
    SWING_DOWN = "swing_down"

    @property
    def in_air(self) -> bool:
        return self != PhaseKind.CONTACT


@dataclasses.dataclass(frozen=True)
class LegWindow:
    """Swing window of one leg in its own normalized phase.

    Args:
        swing_start: Phase the wheel lifts off at.
        swing_end: Phase the wheel touches down at, equal to swing_start for a
            leg that never leaves the ground.
        phase_offset: Shift of the leg's cycle relative to the gait phase.
    """

    swing_start: float
    swing_end: float
    phase_offset: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.swing_start <= self.swing_end < 1.0:
            raise InputError(f"Swing window [{self.swing_start}, {self.swing_end}) must satisfy 0 <= start <= end < 1")

    @property
    def duty_factor(self) -> float:
        return 1.0 - (self.swing_end - self.swing_start)

    def pack(self) -> t.Dict[str, t.Any]:
        return {
            "swing_start": self.swing_start,
            "swing_end": self.swing_end,
            "phase_offset": self.phase_offset,
        }

    @classmethod
    def unpack(
        cls,
        obj: t.Dict[str, t.Any],
    ) -> LegWindow:
        return LegWindow(
            swing_start=float(obj.get("swing_start", SWING_START)),
            swing_end=float(obj.get("swing_end", obj.get("swing_start", SWING_START))),
            phase_offset=float(obj.get("phase_offset", 0.0)),
        )


@dataclasses.dataclass(frozen=True)
class GaitPattern:
    """A periodic gait.

    Args:
        name: The gait name.
        stride_duration: Period of one gait cycle, also used as the planning
            horizon t_f.
        legs: Swing window per leg ordered as LEGS.
        reference_wheel_ms: Published solve time of one wheel problem.
        reference_base_ms: Published solve time of the base problem.
    """

    name: str
    stride_duration: float
    legs: t.Tuple[LegWindow, LegWindow, LegWindow, LegWindow]
    reference_wheel_ms: t.Optional[float] = None
    reference_base_ms: t.Optional[float] = None

    def __post_init__(self) -> None:
        if not self.stride_duration > 0:
            raise InputError(f"Gait {self.name} needs a positive stride duration")
        if len(self.legs) != len(LEGS):
            raise InputError(f"Gait {self.name} defines {len(self.legs)} legs, expected {len(LEGS)}")

    @property
    def t_f(self) -> float:
        return self.stride_duration

    @property
    def duty_factor(self) -> float:
        return min(w.duty_factor for w in self.legs)

    def window(self, leg: str) -> LegWindow:
        return self.legs[LEGS.index(leg)]

    def pack(self) -> t.Dict[str, t.Any]:
        data: t.Dict[str, t.Any] = {
            "name": self.name,
            "stride_duration": self.stride_duration,
            "legs": {leg: w.pack() for leg, w in zip(LEGS, self.legs)},
        }
        if self.reference_wheel_ms is not None:
            data["reference_wheel_ms"] = self.reference_wheel_ms
        if self.reference_base_ms is not None:
            data["reference_base_ms"] = self.reference_base_ms
        return data

    @classmethod
    def unpack(
        cls,
        obj: t.Dict[str, t.Any],
    ) -> GaitPattern:
        wheel_ms = obj.get("reference_wheel_ms", None)
        base_ms = obj.get("reference_base_ms", None)
        try:
            legs = obj["legs"]
            windows = tuple(LegWindow.unpack(legs[leg]) for leg in LEGS)
            return GaitPattern(
                name=str(obj["name"]),
                stride_duration=float(obj["stride_duration"]),
                legs=windows,  # type: ignore[arg-type]  # Always 4 entries
                reference_wheel_ms=None if wheel_ms is None else float(wheel_ms),
                reference_base_ms=None if base_ms is None else float(base_ms),
            )
        except KeyError as e:
            raise ScenarioError(f"Custom gait is missing the key {e}") from e


def _pattern(
    name: str,
    t_f: float,
    duty: float,
    offsets: t.Dict[str, float],
    wheel_ms: float,
    base_ms: float,
) -> GaitPattern:
    swing_end = SWING_START + (1.0 - duty)
    legs = tuple(LegWindow(SWING_START, swing_end, offsets[leg]) for leg in LEGS)
    return GaitPattern(name, t_f, legs, wheel_ms, base_ms)  # type: ignore[arg-type]


def builtin_gaits() -> t.List[GaitPattern]:
    """The five gaits with their horizons and published solve times."""
    return [
        _pattern("driving", 1.7, 1.0, {"LF": 0.0, "RF": 0.0, "LH": 0.0, "RH": 0.0}, 0.14, 6.93),
        _pattern("hybrid walk", 2.0, 0.85, {"LF": 0.0, "RH": 0.25, "RF": 0.5, "LH": 0.75}, 0.81, 14.83),
        _pattern("hybrid pace", 0.95, 0.6, {"LF": 0.0, "LH": 0.0, "RF": 0.5, "RH": 0.5}, 0.42, 1.88),
        _pattern("hybrid trot", 0.85, 0.55, {"LF": 0.0, "RH": 0.0, "RF": 0.5, "LH": 0.5}, 0.47, 2.4),
        _pattern("hybrid running trot", 0.64, 0.4, {"LF": 0.0, "RH": 0.0, "RF": 0.5, "LH": 0.5}, 0.58, 5.77),
    ]


def get_gait(name: str) -> GaitPattern:
    key = name.strip().lower().replace("_", " ").replace("-", " ")
    for gait in builtin_gaits():
        if key in (gait.name, gait.name.replace("hybrid ", "")):
            return gait

    raise InputError(f"Unknown gait {name!r}, expected one of {', '.join(g.name for g in builtin_gaits())}")


@dataclasses.dataclass(frozen=True)
class Phase:
    kind: PhaseKind
    start: float
    end: float

    @property
    def duration(self) -> float:
        return self.end - self.start


@dataclasses.dataclass(frozen=True)
class SwingEvents:
    """Lift-off, apex and touch-down times of one swing, in horizon time.

    Any of them may lie outside of [0, t_f] when the swing is cut by the
    horizon.
    """

    t_lo: float
    t_sh: float
    t_td: float


@dataclasses.dataclass(frozen=True)
class LegSchedule:
    phases: t.Tuple[Phase, ...]
    swings: t.Tuple[SwingEvents, ...]

    def phase_at(self, tau: float) -> Phase:
        for phase in self.phases[:-1]:
            if tau < phase.end:
                return phase
        return self.phases[-1]


@dataclasses.dataclass(frozen=True)
class ContactSchedule:
    """Per-leg contact and swing phases over [t0, t0 + t_f].

    Phase boundaries are stored in horizon time, 0 at t0.
    """

    gait: GaitPattern
    t0: float
    phase0: float
    legs: t.Tuple[LegSchedule, LegSchedule, LegSchedule, LegSchedule]

    @property
    def t_f(self) -> float:
        return self.gait.stride_duration

    def leg(self, leg: str) -> LegSchedule:
        return self.legs[LEGS.index(leg)]


def advance_phase(gait: GaitPattern, phase0: float, dt: float) -> float:
    return (phase0 + dt / gait.stride_duration) % 1.0


def _leg_schedule(window: LegWindow, phase0: float, t_f: float) -> LegSchedule:
    if window.swing_end - window.swing_start <= _TIME_TOL:
        return LegSchedule((Phase(PhaseKind.CONTACT, 0.0, t_f),), ())

    start_phase = (phase0 - window.phase_offset) % 1.0
    swings = []
    for k in (-1, 0, 1):
        t_lo = (window.swing_start + k - start_phase) * t_f
        t_td = (window.swing_end + k - start_phase) * t_f
        if t_td <= _TIME_TOL or t_lo >= t_f - _TIME_TOL:
            continue
        swings.append(SwingEvents(t_lo, 0.5 * (t_lo + t_td), t_td))

    points = {0.0, t_f}
    for swing in swings:
        for event in (swing.t_lo, swing.t_sh, swing.t_td):
            if 0.0 < event < t_f:
                points.add(event)

    ordered = sorted(points)
    phases: t.List[Phase] = []
    start = 0.0
    for end in ordered[1:]:
        # Slivers left by rounding are absorbed by the following phase.
        if end - start <= _TIME_TOL:
            continue

        mid = 0.5 * (start + end)
        kind = PhaseKind.CONTACT
        for swing in swings:
            if swing.t_lo <= mid < swing.t_td:
                kind = PhaseKind.SWING_UP if mid < swing.t_sh else PhaseKind.SWING_DOWN
                break
        phases.append(Phase(kind, start, end))
        start = end

    if phases[-1].end != t_f:
        last = phases.pop()
        phases.append(Phase(last.kind, last.start, t_f))

    return LegSchedule(tuple(phases), tuple(swings))


def build_schedule(
    g: GaitPattern,
    t0: float = 0.0,
    phase0: float = 0.0,
) -> ContactSchedule:
    """Contact schedule of every leg over one stride starting at gait phase phase0."""
    legs = tuple(_leg_schedule(window, phase0, g.stride_duration) for window in g.legs)
    return ContactSchedule(g, t0, phase0 % 1.0, legs)  # type: ignore[arg-type]  # Always 4 entries


def contact_flags(
    s: ContactSchedule,
    t: float,
) -> t.Tuple[bool, bool, bool, bool]:
    """Contact state of every leg at absolute time t.

    Touch-down instants count as contact and lift-off instants as air.
    """
    tau = t - s.t0
    if tau < -1e-9 or tau > s.t_f + 1e-9:
        raise IntervalError(t, s.t0, s.t0 + s.t_f)

    tau = min(max(tau, 0.0), s.t_f)
    return tuple(leg.phase_at(tau).kind == PhaseKind.CONTACT for leg in s.legs)  # type: ignore[return-value]


def flags_at_phase(
    g: GaitPattern,
    phase0: float,
) -> t.Tuple[bool, bool, bool, bool]:
    """Contact state of every leg at gait phase phase0."""
    return contact_flags(build_schedule(g, phase0=phase0), 0.0)
