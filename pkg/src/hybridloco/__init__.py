# -*- coding: utf-8 -*-
# Copyright (c) 2026 hybridloco contributors
# GNU General Public License v3.0+ (see COPYING or https://www.gnu.org/licenses/gpl-3.0.txt)

from ._base_to import (
    BaseReference,
    BaseToConfig,
    BaseTrajectory,
    SupportPolygonEdges,
    certify_base,
    plan_base,
    support_polygon,
    zmp_point,
)
from ._errors import (
    HybridLocoError,
    InfeasibleError,
    InputError,
    IntervalError,
    NumericalError,
    ScenarioError,
    WheelPlanningError,
)
from ._gait import LEGS, ContactSchedule, GaitPattern, build_schedule, builtin_gaits, contact_flags, get_gait
from ._qp import GoldfarbIdnaniSolver, QpProblem, QpSolution, QpStatus, solve, solve_warm
from ._sim import Disturbance, DisturbanceTarget, EpisodeLog, Rates, plan_once, run_episode, step
from ._spline import AirSegment, ContactSegment, Kinematics, SegmentSequence
from ._state import RobotState
from ._terrain import TerrainPlane, fit_plane, wheel_frame
from ._wheel_to import WheelPlan, WheelToConfig, certify_wheel, plan_wheel, plan_wheels

__all__ = [
    "AirSegment",
    "BaseReference",
    "BaseToConfig",
    "BaseTrajectory",
    "ContactSchedule",
    "ContactSegment",
    "Disturbance",
    "DisturbanceTarget",
    "EpisodeLog",
    "GaitPattern",
    "GoldfarbIdnaniSolver",
    "HybridLocoError",
    "InfeasibleError",
    "InputError",
    "IntervalError",
    "Kinematics",
    "LEGS",
    "NumericalError",
    "QpProblem",
    "QpSolution",
    "QpStatus",
    "Rates",
    "RobotState",
    "ScenarioError",
    "SegmentSequence",
    "SupportPolygonEdges",
    "TerrainPlane",
    "WheelPlan",
    "WheelPlanningError",
    "WheelToConfig",
    "build_schedule",
    "builtin_gaits",
    "certify_base",
    "certify_wheel",
    "contact_flags",
    "fit_plane",
    "get_gait",
    "plan_base",
    "plan_once",
    "plan_wheel",
    "plan_wheels",
    "run_episode",
    "solve",
    "solve_warm",
    "step",
    "support_polygon",
    "wheel_frame",
    "zmp_point",
]
