# -*- coding: utf-8 -*-
# Copyright (c) 2026 hybridloco contributors
# GNU General Public License v3.0+ (see COPYING or https://www.gnu.org/licenses/gpl-3.0.txt)

from __future__ import annotations

import dataclasses
import logging
import math
import typing as t

import numpy as np
import numpy.typing as npt

from ._errors import DegenerateTerrainError, FrameDegenerateError, InputError

log = logging.getLogger(__name__)

_SINGULAR_TOL = 1e-8


def _readonly(value: npt.ArrayLike) -> np.ndarray:
    arr = np.array(value, dtype=float).reshape(3)
    arr.setflags(write=False)
    return arr


@dataclasses.dataclass(frozen=True, eq=False)
class TerrainPlane:
    """Locally planar terrain through point with upward unit normal."""

    normal: np.ndarray
    point: np.ndarray

    def __post_init__(self) -> None:
        n = np.array(self.normal, dtype=float).reshape(3)
        norm = np.linalg.norm(n)
        if norm == 0.0:
            raise InputError("Terrain normal must be non-zero")
        n = n / norm
        if n[2] <= 0.0:
            raise InputError("Terrain normal must point upward")
        object.__setattr__(self, "normal", _readonly(n))
        object.__setattr__(self, "point", _readonly(self.point))

    @classmethod
    def flat(cls, height: float = 0.0) -> TerrainPlane:
        return cls(np.array([0.0, 0.0, 1.0]), np.array([0.0, 0.0, height]))

    @classmethod
    def inclined(
        cls,
        slope: float,
        direction: float = 0.0,
        height: float = 0.0,
    ) -> TerrainPlane:
        """Plane rising with gradient slope (rise over run) along the world heading direction."""
        gx, gy = slope * math.cos(direction), slope * math.sin(direction)
        return cls(np.array([-gx, -gy, 1.0]), np.array([0.0, 0.0, height]))

    def height_at(self, x: float, y: float) -> float:
        n, p = self.normal, self.point
        return float(p[2] - (n[0] * (x - p[0]) + n[1] * (y - p[1])) / n[2])

    def signed_distance(self, point: npt.ArrayLike) -> float:
        return float(self.normal @ (np.asarray(point, dtype=float) - self.point))

    def project(self, point: npt.ArrayLike) -> np.ndarray:
        """Orthogonal projection of point onto the plane."""
        p = np.asarray(point, dtype=float)
        return p - self.signed_distance(p) * self.normal

    def drop_onto(self, point: npt.ArrayLike) -> np.ndarray:
        """Move point vertically onto the plane."""
        p = np.array(point, dtype=float)
        p[2] = self.height_at(p[0], p[1])
        return p

    def orientation(self, yaw: float) -> t.Tuple[float, float]:
        """Pitch and roll aligning the yawed base z-axis with the plane normal."""
        c, s = math.cos(yaw), math.sin(yaw)
        nx = c * self.normal[0] + s * self.normal[1]
        ny = -s * self.normal[0] + c * self.normal[1]
        nz = self.normal[2]
        roll = -math.asin(max(-1.0, min(1.0, ny)))
        pitch = math.atan2(nx, nz)
        return pitch, roll


def fit_plane(contacts: t.Sequence[npt.ArrayLike]) -> TerrainPlane:
    """Least squares plane through the contact points.

    Args:
        contacts: At least 3 points that do not lie on a line.

    Returns:
        TerrainPlane: The fitted plane through the centroid.

    Raises:
        DegenerateTerrainError: Fewer than 3 points or colinear points.
    """
    pts = np.asarray(contacts, dtype=float).reshape(-1, 3)
    if pts.shape[0] < 3:
        raise DegenerateTerrainError(f"A plane needs at least 3 contacts, got {pts.shape[0]}")

    centroid = pts.mean(axis=0)
    _, sv, vt = np.linalg.svd(pts - centroid)
    if sv[1] <= _SINGULAR_TOL:
        raise DegenerateTerrainError("Contact points are colinear")

    normal = vt[2]
    if normal[2] < 0.0:
        normal = -normal
    if normal[2] <= _SINGULAR_TOL:
        raise DegenerateTerrainError("Contact points span a vertical plane")

    return TerrainPlane(normal, centroid)


@dataclasses.dataclass(frozen=True, eq=False)
class WheelFrame:
    """Terrain aligned frame W of one wheel, columns of rotation are its axes in world."""

    origin: np.ndarray
    rotation: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "origin", _readonly(self.origin))
        rot = np.array(self.rotation, dtype=float).reshape(3, 3)
        rot.setflags(write=False)
        object.__setattr__(self, "rotation", rot)

    def to_world(self, point: npt.ArrayLike) -> np.ndarray:
        return t.cast(np.ndarray, self.origin + self.rotation @ np.asarray(point, dtype=float))

    def to_local(self, point: npt.ArrayLike) -> np.ndarray:
        return t.cast(np.ndarray, self.rotation.T @ (np.asarray(point, dtype=float) - self.origin))

    def vector_to_world(self, vec: npt.ArrayLike) -> np.ndarray:
        return t.cast(np.ndarray, self.rotation @ np.asarray(vec, dtype=float))

    def vector_to_local(self, vec: npt.ArrayLike) -> np.ndarray:
        return t.cast(np.ndarray, self.rotation.T @ np.asarray(vec, dtype=float))


def wheel_frame(
    plane: TerrainPlane,
    axle_center: npt.ArrayLike,
    heading: npt.ArrayLike,
) -> WheelFrame:
    """Frame W at the projection of the axle centre with x along the projected heading."""
    n = plane.normal
    h = np.asarray(heading, dtype=float)
    x = h - (h @ n) * n
    norm = np.linalg.norm(x)
    if norm <= 1e-9 * max(1.0, float(np.linalg.norm(h))):
        raise FrameDegenerateError("Wheel heading is parallel to the terrain normal")

    x = x / norm
    y = np.cross(n, x)
    return WheelFrame(plane.project(axle_center), np.column_stack([x, y, n]))


class ContactBuffer:
    """Most recent contact location per leg feeding the terrain estimate."""

    def __init__(
        self,
        initial: TerrainPlane,
        legs: t.Sequence[str],
    ) -> None:
        self._plane = initial
        self._points: t.Dict[str, np.ndarray] = {}
        self._legs = tuple(legs)

    @property
    def plane(self) -> TerrainPlane:
        return self._plane

    def update(self, leg: str, point: npt.ArrayLike) -> None:
        self._points[leg] = np.array(point, dtype=float)

    def estimate(self) -> TerrainPlane:
        """Refit the plane, keeping the previous estimate on degenerate geometry."""
        pts = [self._points[leg] for leg in self._legs if leg in self._points]
        try:
            self._plane = fit_plane(pts)
        except DegenerateTerrainError as e:
            log.debug("Keeping previous terrain estimate: %s", e)

        return self._plane
