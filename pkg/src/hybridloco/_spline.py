# -*- coding: utf-8 -*-
# Copyright (c) 2026 hybridloco contributors
# GNU General Public License v3.0+ (see COPYING or https://www.gnu.org/licenses/gpl-3.0.txt)

"""Polynomial wheel trajectory segments.

Air segments are quintics per axis using the basis
eta(tau) = [tau^5, tau^4, tau^3, tau^2, tau, 1] with the coefficients stored
highest power first. Contact segments roll without lateral slip in frame W:
the speed along the rolling direction is quadratic in local time and the
rolling direction turns at the constant reference yaw rate. Every segment is
evaluated in local time tau = t - t_start while the heading of a contact
segment uses horizon time so consecutive contact segments share a heading.

The decision vector of an air segment is [coeffs_x, coeffs_y, coeffs_z] (18)
and of a contact segment [alpha0, alpha1, alpha2, x0, y0] (5).
"""

from __future__ import annotations

import dataclasses
import math
import typing as t

import numpy as np
import numpy.typing as npt

from ._errors import InputError, IntervalError

BOUNDARY_TOL = 1e-9
OMEGA_EPS = 1e-4

AIR_DIM = 18
CONTACT_DIM = 5

# Truncation of the series for phi_k(z). Below OMEGA_EPS only the terms up to
# fourth order in omega are kept.
_SERIES_TERMS = 20
_TAYLOR_TERMS = 5

# eta_ddot(tau) = [20 tau^3, 12 tau^2, 6 tau, 2, 0, 0]
_DDOT_COEFFS = ((0, 20.0, 3), (1, 12.0, 2), (2, 6.0, 1), (3, 2.0, 0))


class Kinematics(t.NamedTuple):
    position: np.ndarray
    velocity: np.ndarray
    acceleration: np.ndarray


def _frozen(value: npt.ArrayLike, size: int, name: str) -> np.ndarray:
    arr = np.array(value, dtype=float).reshape(-1)
    if arr.shape != (size,):
        raise InputError(f"{name} must have {size} elements, got {arr.shape[0]}")
    arr.setflags(write=False)
    return arr


def eval_basis(t: float) -> np.ndarray:
    """Quintic basis [t^5, t^4, t^3, t^2, t, 1]."""
    return np.array([t**5, t**4, t**3, t**2, t, 1.0])


def eval_basis_dot(t: float) -> np.ndarray:
    return np.array([5 * t**4, 4 * t**3, 3 * t**2, 2 * t, 1.0, 0.0])


def eval_basis_ddot(t: float) -> np.ndarray:
    return np.array([20 * t**3, 12 * t**2, 6 * t, 2.0, 0.0, 0.0])


def _check_interval(t: float, start: float, duration: float) -> float:
    end = start + duration
    if t < start - BOUNDARY_TOL or t > end + BOUNDARY_TOL:
        raise IntervalError(t, start, end)

    return min(max(t - start, 0.0), duration)


def _phi(z: complex, k: int, n_terms: int = _SERIES_TERMS) -> complex:
    """phi_k(z) = integral of u^k exp(z u) over [0, 1]."""
    if abs(z) < 1.0:
        total = 0j
        term = 1 + 0j
        for j in range(n_terms):
            total += term / (k + j + 1)
            term *= z / (j + 1)
        return total

    ez = np.exp(z)
    value = (ez - 1) / z
    for i in range(1, k + 1):
        value = (ez - i * value) / z
    return complex(value)


def contact_integrals(tau: float, omega: float) -> np.ndarray:
    """E_k(tau) = integral of s^k exp(i omega s) over [0, tau] for k = 0, 1, 2.

    Uses the scaled form tau^(k+1) phi_k(i omega tau), which stays accurate as
    omega goes to zero. Below OMEGA_EPS the series is cut after the fourth
    order term in omega.
    """
    n_terms = _TAYLOR_TERMS if abs(omega) < OMEGA_EPS else _SERIES_TERMS
    z = 1j * omega * tau
    return np.array([tau ** (k + 1) * _phi(z, k, n_terms) for k in range(3)], dtype=complex)


def air_transfer(tau: float) -> t.Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Position, velocity and acceleration maps (3x18) of an air segment at local time tau."""
    tp = np.zeros((3, AIR_DIM))
    tv = np.zeros((3, AIR_DIM))
    ta = np.zeros((3, AIR_DIM))
    b0, b1, b2 = eval_basis(tau), eval_basis_dot(tau), eval_basis_ddot(tau)
    for axis in range(3):
        cols = slice(6 * axis, 6 * axis + 6)
        tp[axis, cols] = b0
        tv[axis, cols] = b1
        ta[axis, cols] = b2

    return tp, tv, ta


def contact_transfer(
    tau: float,
    omega_ref: float,
    t_start: float,
) -> t.Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Position, velocity and acceleration maps (3x5) of a contact segment at local time tau.

    The z rows are identically zero and the lateral velocity before rotation
    is zero by construction.
    """
    heading0 = omega_ref * t_start
    heading = heading0 + omega_ref * tau
    c, s = math.cos(heading), math.sin(heading)

    rotated = np.exp(1j * heading0) * contact_integrals(tau, omega_ref)

    tp = np.zeros((3, CONTACT_DIM))
    tp[0, :3] = rotated.real
    tp[1, :3] = rotated.imag
    tp[0, 3] = 1.0
    tp[1, 4] = 1.0

    powers = np.array([1.0, tau, tau * tau])
    dpowers = np.array([0.0, 1.0, 2 * tau])

    tv = np.zeros((3, CONTACT_DIM))
    tv[0, :3] = powers * c
    tv[1, :3] = powers * s

    ta = np.zeros((3, CONTACT_DIM))
    ta[0, :3] = dpowers * c - omega_ref * powers * s
    ta[1, :3] = dpowers * s + omega_ref * powers * c

    return tp, tv, ta


def _diag3(weight: t.Union[float, npt.ArrayLike]) -> np.ndarray:
    w = np.asarray(weight, dtype=float)
    if w.ndim == 2:
        w = np.diag(w)
    return np.broadcast_to(w, (3,)).astype(float)


def accel_hessian_air(
    duration: float,
    weight: t.Union[float, npt.ArrayLike] = 1.0,
) -> np.ndarray:
    """Hessian Q (18x18) with xi^T Q xi = 2 * integral of r_ddot^T W r_ddot over the segment.

    Args:
        duration: The segment duration, must be positive.
        weight: Scalar, 3 diagonal entries or a 3x3 diagonal matrix.

    Returns:
        np.ndarray: The symmetric positive semi-definite Hessian.
    """
    if duration <= 0:
        raise InputError(f"Segment duration must be positive, got {duration}")

    block = np.zeros((6, 6))
    for i, ci, pi in _DDOT_COEFFS:
        for j, cj, pj in _DDOT_COEFFS:
            n = pi + pj + 1
            block[i, j] = ci * cj * duration**n / n

    w = _diag3(weight)
    hess = np.zeros((AIR_DIM, AIR_DIM))
    for axis in range(3):
        cols = slice(6 * axis, 6 * axis + 6)
        hess[cols, cols] = 2.0 * w[axis] * block

    return hess


def accel_hessian_contact(
    duration: float,
    omega_ref: float,
    weight: float = 1.0,
) -> np.ndarray:
    """Hessian Q (5x5) of the squared contact acceleration.

    The acceleration magnitude splits into the tangential term v'(tau) and the
    centripetal term omega * v(tau), so the Hessian does not depend on the
    heading. The x0 and y0 rows are zero.
    """
    if duration <= 0:
        raise InputError(f"Segment duration must be positive, got {duration}")

    def moment(n: int) -> float:
        return duration ** (n + 1) / (n + 1)

    tangential = np.zeros((3, 3))
    centripetal = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            centripetal[i, j] = moment(i + j)
            if i > 0 and j > 0:
                tangential[i, j] = i * j * moment(i + j - 2)

    hess = np.zeros((CONTACT_DIM, CONTACT_DIM))
    hess[:3, :3] = 2.0 * weight * (tangential + omega_ref**2 * centripetal)
    return hess


@dataclasses.dataclass(frozen=True, eq=False)
class AirSegment:
    """Quintic wheel trajectory while the wheel is in the air.

    Args:
        coeffs_x: The 6 x coefficients, highest power first.
        coeffs_y: The 6 y coefficients, highest power first.
        coeffs_z: The 6 z coefficients, highest power first.
        t_start: Horizon time the segment starts at.
        duration: Length of the segment in seconds.
    """

    coeffs_x: np.ndarray
    coeffs_y: np.ndarray
    coeffs_z: np.ndarray
    t_start: float
    duration: float

    kind: t.ClassVar[str] = "air"
    n_vars: t.ClassVar[int] = AIR_DIM

    def __post_init__(self) -> None:
        if not self.duration > 0:
            raise InputError(f"Segment duration must be positive, got {self.duration}")
        for name in ("coeffs_x", "coeffs_y", "coeffs_z"):
            object.__setattr__(self, name, _frozen(getattr(self, name), 6, name))

    @classmethod
    def from_xi(
        cls,
        xi: npt.ArrayLike,
        t_start: float,
        duration: float,
    ) -> AirSegment:
        x = np.asarray(xi, dtype=float)
        return cls(x[0:6], x[6:12], x[12:18], float(t_start), float(duration))

    @property
    def t_end(self) -> float:
        return self.t_start + self.duration

    @property
    def xi(self) -> np.ndarray:
        return np.concatenate([self.coeffs_x, self.coeffs_y, self.coeffs_z])

    def transfer(self, tau: float) -> t.Tuple[np.ndarray, np.ndarray, np.ndarray]:
        return air_transfer(tau)

    def evaluate(self, t: float) -> Kinematics:
        return eval_air(self, t)

    def accel_hessian(self, weight: t.Union[float, npt.ArrayLike]) -> np.ndarray:
        return accel_hessian_air(self.duration, weight)


@dataclasses.dataclass(frozen=True)
class ContactSegment:
    """Rolling wheel trajectory in frame W while the wheel is in contact.

    Args:
        alpha0: Rolling speed at the segment start.
        alpha1: Linear speed coefficient.
        alpha2: Quadratic speed coefficient.
        x0: In-plane x position at the segment start.
        y0: In-plane y position at the segment start.
        omega_ref: Constant reference yaw rate over the horizon.
        t_start: Horizon time the segment starts at.
        duration: Length of the segment in seconds.
    """

    alpha0: float
    alpha1: float
    alpha2: float
    x0: float
    y0: float
    omega_ref: float
    t_start: float
    duration: float

    kind: t.ClassVar[str] = "contact"
    n_vars: t.ClassVar[int] = CONTACT_DIM

    def __post_init__(self) -> None:
        if not self.duration > 0:
            raise InputError(f"Segment duration must be positive, got {self.duration}")

    @classmethod
    def from_xi(
        cls,
        xi: npt.ArrayLike,
        omega_ref: float,
        t_start: float,
        duration: float,
    ) -> ContactSegment:
        a0, a1, a2, x0, y0 = (float(v) for v in np.asarray(xi, dtype=float))
        return cls(a0, a1, a2, x0, y0, float(omega_ref), float(t_start), float(duration))

    @property
    def t_end(self) -> float:
        return self.t_start + self.duration

    @property
    def xi(self) -> np.ndarray:
        return np.array([self.alpha0, self.alpha1, self.alpha2, self.x0, self.y0])

    def heading(self, t: float) -> float:
        return self.omega_ref * t

    def rolling_speed(self, t: float) -> float:
        """Speed along the rolling direction, before rotation into frame W."""
        tau = _check_interval(t, self.t_start, self.duration)
        return self.alpha0 + self.alpha1 * tau + self.alpha2 * tau * tau

    def transfer(self, tau: float) -> t.Tuple[np.ndarray, np.ndarray, np.ndarray]:
        return contact_transfer(tau, self.omega_ref, self.t_start)

    def evaluate(self, t: float) -> Kinematics:
        return eval_contact(self, t)

    def accel_hessian(self, weight: t.Union[float, npt.ArrayLike]) -> np.ndarray:
        return accel_hessian_contact(self.duration, self.omega_ref, float(np.max(_diag3(weight)[:2])))


Segment = t.Union[AirSegment, ContactSegment]


def eval_air(seg: AirSegment, t: float) -> Kinematics:
    tau = _check_interval(t, seg.t_start, seg.duration)
    tp, tv, ta = air_transfer(tau)
    xi = seg.xi
    return Kinematics(tp @ xi, tv @ xi, ta @ xi)


def eval_contact(seg: ContactSegment, t: float) -> Kinematics:
    tau = _check_interval(t, seg.t_start, seg.duration)
    tp, tv, ta = contact_transfer(tau, seg.omega_ref, seg.t_start)
    xi = seg.xi
    return Kinematics(tp @ xi, tv @ xi, ta @ xi)


@dataclasses.dataclass(frozen=True)
class SegmentSequence:
    """Ordered segments tiling the horizon [0, t_f]."""

    segments: t.Tuple[Segment, ...]
    t_f: float

    def __post_init__(self) -> None:
        segments = tuple(self.segments)
        object.__setattr__(self, "segments", segments)
        if not segments:
            raise InputError("A segment sequence needs at least one segment")

        cursor = 0.0
        for idx, seg in enumerate(segments):
            if abs(seg.t_start - cursor) > BOUNDARY_TOL:
                raise InputError(f"Segment {idx} starts at {seg.t_start} but the previous one ends at {cursor}")
            cursor = seg.t_end

        if abs(cursor - self.t_f) > BOUNDARY_TOL:
            raise InputError(f"Segments end at {cursor} but the horizon is {self.t_f}")

    def __len__(self) -> int:
        return len(self.segments)

    def __iter__(self) -> t.Iterator[Segment]:
        return iter(self.segments)

    @property
    def junctions(self) -> t.List[float]:
        return [seg.t_end for seg in self.segments[:-1]]

    def segment_index(self, t: float) -> int:
        """Index of the segment owning t, later segments win at a junction."""
        if t < -BOUNDARY_TOL or t > self.t_f + BOUNDARY_TOL:
            raise IntervalError(t, 0.0, self.t_f)

        for idx in range(len(self.segments) - 1, -1, -1):
            if t >= self.segments[idx].t_start - BOUNDARY_TOL:
                return idx
        return 0

    def evaluate(
        self,
        t: float,
        clamp: bool = False,
    ) -> Kinematics:
        if clamp:
            t = min(max(t, 0.0), self.t_f)
        return self.segments[self.segment_index(t)].evaluate(t)

    def continuity_residual(self) -> float:
        """Largest jump at any junction.

        Position and velocity are checked everywhere, acceleration only
        between two air segments.
        """
        worst = 0.0
        for left, right in zip(self.segments, self.segments[1:]):
            t_j = right.t_start
            a = left.evaluate(t_j)
            b = right.evaluate(t_j)
            worst = max(
                worst,
                float(np.max(np.abs(a.position - b.position))),
                float(np.max(np.abs(a.velocity - b.velocity))),
            )
            if left.kind == "air" and right.kind == "air":
                worst = max(worst, float(np.max(np.abs(a.acceleration - b.acceleration))))

        return worst
