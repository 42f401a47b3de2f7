# -*- coding: utf-8 -*-
# Copyright (c) 2026 hybridloco contributors
# GNU General Public License v3.0+ (see COPYING or https://www.gnu.org/licenses/gpl-3.0.txt)

from __future__ import annotations

import dataclasses
import math
import typing as t

from .._errors import ScenarioError
from .._terrain import TerrainPlane
from ._registry import register_terrain


@dataclasses.dataclass(frozen=True)
class TerrainSpec:
    """Terrain entry of a scenario, subclasses register under their kind."""

    kind: t.ClassVar[str] = ""

    def plane(self) -> TerrainPlane:
        raise NotImplementedError()  # pragma: nocover

    def pack(self) -> t.Dict[str, t.Any]:
        data = {"kind": self.kind}
        data.update(dataclasses.asdict(self))
        return data

    @classmethod
    def unpack(
        cls,
        obj: t.Dict[str, t.Any],
    ) -> TerrainSpec:
        fields = {k: float(v) for k, v in obj.items() if k != "kind"}
        return cls(**fields)


@register_terrain
@dataclasses.dataclass(frozen=True)
class FlatTerrain(TerrainSpec):
    """Horizontal ground at height."""

    kind: t.ClassVar[str] = "flat"

    height: float = 0.0

    def plane(self) -> TerrainPlane:
        return TerrainPlane.flat(self.height)


@register_terrain
@dataclasses.dataclass(frozen=True)
class InclinedTerrain(TerrainSpec):
    """Plane rising with slope, rise over run, along the world angle direction.

    Args:
        slope: Gradient of the plane.
        direction: World heading in radians the plane rises towards.
        height: Height of the plane at the world origin.
    """

    kind: t.ClassVar[str] = "inclined"

    slope: float = 0.0
    direction: float = 0.0
    height: float = 0.0

    def plane(self) -> TerrainPlane:
        return TerrainPlane.inclined(self.slope, self.direction, self.height)


@dataclasses.dataclass(frozen=True)
class VelocitySegment:
    """Constant base command up to the time until.

    Args:
        until: Scenario time the command is held until.
        vx: Forward velocity in the heading frame.
        vy: Lateral velocity in the heading frame.
        wz: Yaw rate.
    """

    until: float
    vx: float = 0.0
    vy: float = 0.0
    wz: float = 0.0

    def __post_init__(self) -> None:
        values = (self.until, self.vx, self.vy, self.wz)
        if not all(math.isfinite(v) for v in values):
            raise ScenarioError("Velocity segments must be finite")
        if not self.until > 0:
            raise ScenarioError(f"Velocity segment end must be positive, got {self.until}")

    def pack(self) -> t.Dict[str, t.Any]:
        return {
            "until": self.until,
            "vx": self.vx,
            "vy": self.vy,
            "wz": self.wz,
        }

    @classmethod
    def unpack(
        cls,
        obj: t.Dict[str, t.Any],
    ) -> VelocitySegment:
        try:
            return VelocitySegment(
                until=float(obj["until"]),
                vx=float(obj.get("vx", 0.0)),
                vy=float(obj.get("vy", 0.0)),
                wz=float(obj.get("wz", 0.0)),
            )
        except KeyError as e:
            raise ScenarioError(f"Velocity segment is missing the key {e}") from e
