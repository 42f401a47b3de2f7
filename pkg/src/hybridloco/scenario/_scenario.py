# -*- coding: utf-8 -*-
# Copyright (c) 2026 hybridloco contributors
# GNU General Public License v3.0+ (see COPYING or https://www.gnu.org/licenses/gpl-3.0.txt)

"""Scenario files.

A scenario is a JSON object carrying ``"schema": 1``. Everything except the
gait is optional, see README.md for the full list of keys.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import math
import pathlib
import typing as t

import numpy as np

from .._base_to import BaseToConfig
from .._errors import HybridLocoError, ScenarioError
from .._gait import GaitPattern, builtin_gaits, get_gait
from .._sim import Disturbance, Rates, random_pushes
from .._terrain import TerrainPlane
from .._wheel_to import WheelToConfig
from ._registry import unpack_terrain
from ._types import FlatTerrain, TerrainSpec, VelocitySegment

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1

_COVER_TOL = 1e-9

_KNOWN_KEYS = frozenset(
    {
        "schema",
        "name",
        "gait",
        "duration",
        "velocity_profile",
        "terrain",
        "disturbances",
        "wheel_to",
        "base_to",
        "rates",
        "seed",
        "sync",
        "initial_phase",
        "random_pushes",
        "push_magnitude",
    }
)

ConfigT = t.TypeVar("ConfigT", WheelToConfig, BaseToConfig, Rates)


def _apply_overrides(
    section: str,
    default: ConfigT,
    overrides: t.Any,
) -> ConfigT:
    """Applies the keys of a config section onto its defaults, unknown keys are rejected."""
    if overrides is None:
        return default
    if not isinstance(overrides, dict):
        raise ScenarioError(f"Scenario section {section} must be an object")

    data = default.pack()
    unknown = sorted(set(overrides) - set(data))
    if unknown:
        raise ScenarioError(f"Unknown {section} keys: {', '.join(unknown)}")
    data.update(overrides)

    try:
        return t.cast(ConfigT, type(default).unpack(data))
    except HybridLocoError as e:
        raise ScenarioError(f"Invalid {section} section: {e}") from e
    except (TypeError, ValueError) as e:
        raise ScenarioError(f"Invalid {section} section: {e}") from e


def _gait_from(obj: t.Any) -> GaitPattern:
    if isinstance(obj, str):
        try:
            return get_gait(obj)
        except HybridLocoError as e:
            raise ScenarioError(str(e)) from e
    elif isinstance(obj, dict):
        try:
            return GaitPattern.unpack(obj)
        except ScenarioError:
            raise
        except (HybridLocoError, TypeError, ValueError) as e:
            raise ScenarioError(f"Invalid custom gait: {e}") from e
    else:
        raise ScenarioError("Scenario gait must be a gait name or a gait object")


@dataclasses.dataclass(frozen=True)
class Scenario:
    """A planning or simulation run.

    Args:
        name: Label used in the logs and the summary.
        gait: The gait to walk or drive with.
        duration: Length of a simulated episode in seconds.
        velocity_profile: Piecewise constant commands, each held until its end
            time. The last command must reach the duration.
        terrain: The ground plane.
        disturbances: State changes injected during a simulation.
        wheel: Wheel planner settings.
        base: Base planner settings.
        rates: Planner and plant rates.
        seed: Seed of the random pushes.
        sync: Step planners and plant in lock step instead of free running threads.
        initial_phase: Gait phase at the start.
        random_pushes: Number of seeded COM velocity kicks added to the
            disturbances.
        push_magnitude: Size in m/s of each random kick.
    """

    gait: GaitPattern
    name: str = "scenario"
    duration: float = 5.0
    velocity_profile: t.Tuple[VelocitySegment, ...] = ()
    terrain: TerrainSpec = dataclasses.field(default_factory=FlatTerrain)
    disturbances: t.Tuple[Disturbance, ...] = ()
    wheel: WheelToConfig = dataclasses.field(default_factory=WheelToConfig)
    base: BaseToConfig = dataclasses.field(default_factory=BaseToConfig)
    rates: Rates = dataclasses.field(default_factory=Rates)
    seed: int = 0
    sync: bool = True
    initial_phase: float = 0.0
    random_pushes: int = 0
    push_magnitude: float = 0.3

    def __post_init__(self) -> None:
        if not (math.isfinite(self.duration) and self.duration > 0):
            raise ScenarioError(f"Scenario duration must be positive, got {self.duration}")
        if not self.velocity_profile:
            object.__setattr__(self, "velocity_profile", (VelocitySegment(self.duration),))
        object.__setattr__(self, "velocity_profile", tuple(self.velocity_profile))
        object.__setattr__(self, "disturbances", tuple(self.disturbances))

        ends = [seg.until for seg in self.velocity_profile]
        if any(b <= a for a, b in zip(ends, ends[1:])):
            raise ScenarioError("Velocity segments must be ordered by strictly increasing end time")
        if ends[-1] < self.duration - _COVER_TOL:
            raise ScenarioError(f"Velocity profile ends at {ends[-1]} s before the duration {self.duration} s")
        if not 0.0 <= self.initial_phase < 1.0:
            raise ScenarioError(f"Initial phase must lie in [0, 1), got {self.initial_phase}")
        if self.random_pushes < 0 or self.push_magnitude < 0:
            raise ScenarioError("Random push count and magnitude must be non-negative")

    def velocity_at(self, time: float) -> t.Tuple[np.ndarray, float]:
        """The commanded heading frame velocity and yaw rate at time."""
        seg = self.velocity_profile[-1]
        for candidate in self.velocity_profile:
            if time < candidate.until:
                seg = candidate
                break
        return np.array([seg.vx, seg.vy, 0.0]), seg.wz

    def plane(self) -> TerrainPlane:
        return self.terrain.plane()

    def disturbance_events(self) -> t.List[Disturbance]:
        events = list(self.disturbances)
        if self.random_pushes:
            events.extend(random_pushes(self.seed, self.random_pushes, self.push_magnitude, self.duration))
        return sorted(events, key=lambda d: d.time)

    def with_overrides(
        self,
        gait: t.Optional[str] = None,
        vx: t.Optional[float] = None,
        vy: t.Optional[float] = None,
        wz: t.Optional[float] = None,
        duration: t.Optional[float] = None,
        seed: t.Optional[int] = None,
        sync: t.Optional[bool] = None,
    ) -> Scenario:
        """Applies command line values on top of the file values.

        Any velocity component replaces the whole profile by a single constant
        command, the components not given keep the values of the first segment.
        A new duration alone stretches the last segment to cover it.
        """
        changes: t.Dict[str, t.Any] = {}
        if gait is not None:
            changes["gait"] = _gait_from(gait)
        if seed is not None:
            changes["seed"] = seed
        if sync is not None:
            changes["sync"] = sync

        new_duration = self.duration if duration is None else duration
        changes["duration"] = new_duration

        profile = self.velocity_profile
        if vx is not None or vy is not None or wz is not None:
            first = profile[0]
            profile = (
                VelocitySegment(
                    until=new_duration,
                    vx=first.vx if vx is None else vx,
                    vy=first.vy if vy is None else vy,
                    wz=first.wz if wz is None else wz,
                ),
            )
        elif profile[-1].until < new_duration:
            profile = profile[:-1] + (dataclasses.replace(profile[-1], until=new_duration),)
        changes["velocity_profile"] = profile

        return dataclasses.replace(self, **changes)

    def pack(self) -> t.Dict[str, t.Any]:
        builtin = {g.name: g for g in builtin_gaits()}
        gait: t.Any = self.gait.name if builtin.get(self.gait.name) == self.gait else self.gait.pack()
        return {
            "schema": SCHEMA_VERSION,
            "name": self.name,
            "gait": gait,
            "duration": self.duration,
            "velocity_profile": [seg.pack() for seg in self.velocity_profile],
            "terrain": self.terrain.pack(),
            "disturbances": [d.pack() for d in self.disturbances],
            "wheel_to": self.wheel.pack(),
            "base_to": self.base.pack(),
            "rates": self.rates.pack(),
            "seed": self.seed,
            "sync": self.sync,
            "initial_phase": self.initial_phase,
            "random_pushes": self.random_pushes,
            "push_magnitude": self.push_magnitude,
        }

    @classmethod
    def unpack(
        cls,
        obj: t.Any,
    ) -> Scenario:
        if not isinstance(obj, dict):
            raise ScenarioError("A scenario must be a JSON object")

        schema = obj.get("schema", None)
        if schema != SCHEMA_VERSION:
            raise ScenarioError(f"Unsupported scenario schema {schema!r}, expected {SCHEMA_VERSION}")

        unknown = sorted(set(obj) - _KNOWN_KEYS)
        if unknown:
            raise ScenarioError(f"Unknown scenario keys: {', '.join(unknown)}")
        if "gait" not in obj:
            raise ScenarioError("Scenario is missing the gait")

        try:
            duration = float(obj.get("duration", 5.0))
            profile = tuple(VelocitySegment.unpack(seg) for seg in obj.get("velocity_profile", []))
            disturbances = tuple(Disturbance.unpack(d) for d in obj.get("disturbances", []))
            terrain = unpack_terrain(obj.get("terrain", {"kind": "flat"}))
            seed = int(obj.get("seed", 0))
            random_count = int(obj.get("random_pushes", 0))
            push_magnitude = float(obj.get("push_magnitude", 0.3))
            initial_phase = float(obj.get("initial_phase", 0.0))
        except ScenarioError:
            raise
        except KeyError as e:
            raise ScenarioError(f"Scenario entry is missing the key {e}") from e
        except (HybridLocoError, TypeError, ValueError) as e:
            raise ScenarioError(f"Invalid scenario entry: {e}") from e

        sync = obj.get("sync", True)
        if not isinstance(sync, bool):
            raise ScenarioError("Scenario sync must be true or false")

        return Scenario(
            gait=_gait_from(obj["gait"]),
            name=str(obj.get("name", "scenario")),
            duration=duration,
            velocity_profile=profile,
            terrain=terrain,
            disturbances=disturbances,
            wheel=_apply_overrides("wheel_to", WheelToConfig(), obj.get("wheel_to", None)),
            base=_apply_overrides("base_to", BaseToConfig(), obj.get("base_to", None)),
            rates=_apply_overrides("rates", Rates(), obj.get("rates", None)),
            seed=seed,
            sync=sync,
            initial_phase=initial_phase,
            random_pushes=random_count,
            push_magnitude=push_magnitude,
        )


def load_scenario(path: t.Union[str, pathlib.Path]) -> Scenario:
    """Reads a scenario file.

    Raises:
        ScenarioError: The file cannot be read, is not JSON or does not
            describe a valid scenario.
    """
    path = pathlib.Path(path)
    log.debug("Loading scenario from %s", path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ScenarioError(f"Cannot read scenario {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ScenarioError(f"Scenario {path} is not valid JSON: {e}") from e

    return Scenario.unpack(obj)


def dump_scenario(scenario: Scenario, path: t.Union[str, pathlib.Path]) -> None:
    path = pathlib.Path(path)
    path.write_text(json.dumps(scenario.pack(), indent=2) + "\n", encoding="utf-8")
