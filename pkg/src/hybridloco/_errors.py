# -*- coding: utf-8 -*-
# Copyright (c) 2026 hybridloco contributors
# GNU General Public License v3.0+ (see COPYING or https://www.gnu.org/licenses/gpl-3.0.txt)

from __future__ import annotations

import typing as t


class HybridLocoError(Exception):
    """Base error for all planner, solver, and scenario failures."""

    exit_code = 1


class InputError(HybridLocoError, ValueError):
    """Invalid arguments supplied by the caller."""

    exit_code = 4


class IntervalError(InputError):
    """A segment or schedule was evaluated outside of its time interval."""

    def __init__(
        self,
        t: float,
        start: float,
        end: float,
    ) -> None:
        super().__init__(f"Time {t!r} is outside of the interval [{start!r}, {end!r}]")
        self.t = t
        self.start = start
        self.end = end


class ScenarioError(InputError):
    """The scenario file or its overrides are malformed."""


class InfeasibleError(HybridLocoError):
    """The optimization problem has no feasible point."""

    exit_code = 2

    def __init__(
        self,
        msg: str,
        *,
        worst_violation: t.Optional[float] = None,
    ) -> None:
        super().__init__(msg)
        self.worst_violation = worst_violation


class NumericalError(HybridLocoError):
    """The computation broke down numerically or ran out of iterations."""

    exit_code = 3


class DegenerateTerrainError(NumericalError):
    """The contact points do not span a plane."""


class FrameDegenerateError(NumericalError):
    """The wheel heading is parallel to the terrain normal."""


class DegenerateContactError(NumericalError):
    """The contact wrench does not press into the terrain."""


class AssemblyError(InputError):
    """The schedule and segment plan given to the wheel planner disagree."""


class WheelPlanningError(HybridLocoError):
    """A wheel QP did not return an optimal solution."""

    def __init__(
        self,
        leg: str,
        status: str,
    ) -> None:
        super().__init__(f"Wheel planner for {leg} failed with status {status}")
        self.leg = leg
        self.status = status
        self.exit_code = 2 if status == "infeasible" else 3


class SqpError(InfeasibleError):
    """The base SQP could not satisfy the nonlinear ZMP constraints."""


class PlaybackError(HybridLocoError):
    """The plant was stepped past the end of the current plans."""

    exit_code = 3
