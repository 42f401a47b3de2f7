# -*- coding: utf-8 -*-
# Copyright (c) 2026 hybridloco contributors
# GNU General Public License v3.0+ (see COPYING or https://www.gnu.org/licenses/gpl-3.0.txt)

from __future__ import annotations

import dataclasses
import typing as t

import numpy as np
import numpy.typing as npt

from ._errors import InputError
from ._gait import LEGS
from ._terrain import TerrainPlane

GRAVITY = 9.81

_VECTORS = ("r_com", "v_com", "a_com", "angles", "angle_rates", "angle_accs")
_WHEELS = ("wheel_pos", "wheel_vel", "wheel_acc")


def leg_offset(leg: str, r_def: t.Sequence[float]) -> np.ndarray:
    """Default xy offset of a leg's wheel from the COM, mirrored from the left-front value."""
    sx = 1.0 if leg[1] == "F" else -1.0
    sy = 1.0 if leg[0] == "L" else -1.0
    return np.array([sx * abs(r_def[0]), sy * abs(r_def[1])])


def _frozen(value: npt.ArrayLike, shape: t.Tuple[int, ...], name: str) -> np.ndarray:
    arr = np.array(value, dtype=float)
    if arr.shape != shape:
        raise InputError(f"{name} must have shape {shape}, got {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclasses.dataclass(frozen=True, eq=False)
class RobotState:
    """Measured robot state used to initialize every replan.

    Args:
        time: Simulation time in seconds.
        r_com: COM position in world.
        v_com: COM velocity in world.
        a_com: COM acceleration in world.
        angles: Base yaw, pitch and roll.
        angle_rates: Time derivatives of angles.
        angle_accs: Second derivatives of angles.
        wheel_pos: Wheel contact points in world, one row per leg in LEGS order.
        wheel_vel: Wheel velocities in world.
        wheel_acc: Wheel accelerations in world.
        contact: Contact flag per leg.
        phase: Gait phase at time.
    """

    time: float
    r_com: np.ndarray
    v_com: np.ndarray
    a_com: np.ndarray
    angles: np.ndarray
    angle_rates: np.ndarray
    angle_accs: np.ndarray
    wheel_pos: np.ndarray
    wheel_vel: np.ndarray
    wheel_acc: np.ndarray
    contact: t.Tuple[bool, bool, bool, bool]
    phase: float = 0.0

    def __post_init__(self) -> None:
        for name in _VECTORS:
            object.__setattr__(self, name, _frozen(getattr(self, name), (3,), name))
        for name in _WHEELS:
            object.__setattr__(self, name, _frozen(getattr(self, name), (4, 3), name))
        object.__setattr__(self, "contact", tuple(bool(c) for c in self.contact))
        object.__setattr__(self, "time", float(self.time))
        object.__setattr__(self, "phase", float(self.phase))

    @property
    def yaw(self) -> float:
        return float(self.angles[0])

    def wheel(self, leg: str) -> t.Tuple[np.ndarray, np.ndarray, np.ndarray]:
        idx = LEGS.index(leg)
        return self.wheel_pos[idx], self.wheel_vel[idx], self.wheel_acc[idx]

    def replace(self, **changes: t.Any) -> RobotState:
        return dataclasses.replace(self, **changes)

    def with_wheel(
        self,
        leg: str,
        position: t.Optional[npt.ArrayLike] = None,
        velocity: t.Optional[npt.ArrayLike] = None,
        acceleration: t.Optional[npt.ArrayLike] = None,
    ) -> RobotState:
        idx = LEGS.index(leg)
        changes: t.Dict[str, t.Any] = {}
        for name, value in (("wheel_pos", position), ("wheel_vel", velocity), ("wheel_acc", acceleration)):
            if value is None:
                continue
            arr = np.array(getattr(self, name))
            arr[idx] = np.asarray(value, dtype=float)
            changes[name] = arr
        return self.replace(**changes)

    @classmethod
    def standing(
        cls,
        terrain: TerrainPlane,
        height: float,
        r_def: t.Sequence[float],
        contact: t.Sequence[bool] = (True, True, True, True),
        yaw: float = 0.0,
        phase: float = 0.0,
        time: float = 0.0,
    ) -> RobotState:
        """Robot at rest above the terrain with every wheel at its default offset."""
        pitch, roll = terrain.orientation(yaw)
        c, s = np.cos(yaw), np.sin(yaw)
        rot = np.array([[c, -s], [s, c]])

        com_xy = np.zeros(2)
        wheels = np.zeros((4, 3))
        for idx, leg in enumerate(LEGS):
            xy = com_xy + rot @ leg_offset(leg, r_def)
            wheels[idx] = terrain.drop_onto([xy[0], xy[1], 0.0])

        ground = terrain.drop_onto([com_xy[0], com_xy[1], 0.0])
        r_com = ground + height * terrain.normal
        zeros3 = np.zeros(3)
        zeros43 = np.zeros((4, 3))
        return cls(
            time=time,
            r_com=r_com,
            v_com=zeros3,
            a_com=zeros3,
            angles=np.array([yaw, pitch, roll]),
            angle_rates=zeros3,
            angle_accs=zeros3,
            wheel_pos=wheels,
            wheel_vel=zeros43,
            wheel_acc=zeros43,
            contact=tuple(contact),  # type: ignore[arg-type]
            phase=phase,
        )
